//! Trains three quick models, evaluates them on the same test windows in
//! original units and writes the comparison table and per-step curves.

use multistep::data::synth::synthetic_splits;
use multistep::data::make_windows;
use multistep::eval::{build_comparison, evaluate, export_step_curves};
use multistep::nn::{fit, NetSpec, TrainConfig};
use multistep::strategies::{train_direct, train_multi_output, RecursiveModel};

fn main() -> multistep::Result<()> {
    let (p, q) = (8, 8);
    let s = synthetic_splits(1500, 400, 400, 5)?;
    let train = make_windows(&s.train, p, q, 1)?;
    let test = make_windows(&s.test, p, q, 1)?;
    let spec = NetSpec { hidden_units: 32, ..NetSpec::default() };
    let cfg = TrainConfig { epochs: 30, batch_size: 32, ..TrainConfig::default() };

    let one_step = make_windows(&s.train, p, 1, 1)?;
    let (net, _) = fit(spec.regressor(p, 1, &cfg)?, &one_step, &cfg)?;
    let recursive = RecursiveModel::new(net, p)?;
    let direct = train_direct(&train, q, false, &spec, &cfg)?;
    let multi = train_multi_output(&train, &spec, &cfg)?;

    let norm = Some(&s.normalizer);
    let reports = vec![
        evaluate("recursive", &recursive, &test, norm)?,
        evaluate("direct", &direct, &test, norm)?,
        evaluate("multi", &multi, &test, norm)?,
    ];
    println!("{}", build_comparison(&reports, "recursive")?.render_text());

    let out = std::env::temp_dir().join("multistep-curves.csv");
    export_step_curves(&reports, &out)?;
    println!("per-step curves written to {}", out.display());
    Ok(())
}
