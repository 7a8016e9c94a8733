//! Vanilla recursive forecasting against DaD and the time-step conditioned
//! variant on the synthetic benchmark. Pass a seed as the first argument.

use multistep::bench::{recursive_family, BenchSettings};

fn main() -> multistep::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let settings = BenchSettings::default();
    let reports = recursive_family(seed, &settings, 15, 10)?;
    print!("{:>10}", "step");
    for r in &reports {
        print!("{:>12}", r.model_tag);
    }
    println!();
    for step in 0..settings.horizon {
        print!("{:>10}", step + 1);
        for r in &reports {
            print!("{:>12.5}", r.per_step_mse[step]);
        }
        println!();
    }
    print!("{:>10}", "overall");
    for r in &reports {
        print!("{:>12.5}", r.overall_mse);
    }
    println!();
    Ok(())
}
