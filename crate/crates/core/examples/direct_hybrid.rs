//! One model per horizon step, with and without earlier predictions fed in
//! as extra inputs, against a plain recursive model.

use multistep::bench::{direct_family, BenchSettings};
use multistep::eval::build_comparison;

fn main() -> multistep::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let reports = direct_family(seed, &BenchSettings::default())?;
    println!("{}", build_comparison(&reports, "recursive")?.render_text());
    Ok(())
}
