//! Raw 5-minute counts to training windows: aggregate to 15 minutes, split
//! by date, normalize on the training part and cut sliding windows.

use chrono::TimeDelta;
use multistep::data::synth::synthetic_traffic;
use multistep::data::{aggregate, make_windows, split_by_date, AggregateOp, Normalizer, SplitSpec};

fn main() -> multistep::Result<()> {
    let raw = synthetic_traffic(3 * 288 * 10, 3);
    // Pretend the synthetic series is sampled every 5 minutes.
    let raw = multistep::data::TimeSeries::new(raw.start(), TimeDelta::minutes(5), raw.into_values())?;
    let series = aggregate(&raw, 3, AggregateOp::Sum)?;
    println!(
        "{} raw points -> {} points at {} min",
        raw.len(),
        series.len(),
        series.resolution().num_minutes()
    );

    let spec = SplitSpec {
        train_end: series.timestamp(series.len() * 6 / 10),
        val_end: series.timestamp(series.len() * 8 / 10),
    };
    let (train, val, test) = split_by_date(&series, &spec)?;
    println!("split {} / {} / {}", train.len(), val.len(), test.len());

    let norm = Normalizer::fit(train.values())?;
    println!("normalizer min {:.1} max {:.1}", norm.min, norm.max);
    let windows = make_windows(&norm.apply(train.values()), 8, 8, 1)?;
    println!("{} windows of 8 -> 8", windows.len());
    let (h, f) = windows.rows().next().unwrap();
    println!("first history {h:.3?}\nfirst future  {f:.3?}");
    let back = norm.invert(f);
    println!("future in vehicles {back:.0?}");
    Ok(())
}
