//! Trains a conditional GAN that generates histories given a future, first
//! on a toy map where the history is the reversed future, then uses it to
//! augment a small multi-output training set.

use multistep::bench::{augmentation_family, augmentation_settings, benchmark_gan};
use multistep::cgan::train_cgan_monitored;
use multistep::data::synth::reversed_future_pairs;
use multistep::eval::build_comparison;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> multistep::Result<()> {
    let data = reversed_future_pairs(1000, 8, 0)?;
    let holdout = reversed_future_pairs(250, 8, 1)?;
    let pair = train_cgan_monitored(&data, Some(&holdout), &benchmark_gan())?;
    for e in pair.training_log.iter().step_by(50) {
        println!(
            "epoch {:>3}  d {:.3}  g {:.3}  held-out accuracy {:.3}",
            e.epoch,
            e.d_loss,
            e.g_loss,
            e.holdout_accuracy.unwrap_or(f64::NAN)
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (h, f) = holdout.rows().next().unwrap();
    let z = pair.sample_noise(&mut rng);
    println!("future    {f:.2?}\nreversed  {h:.2?}\ngenerated {:.2?}", pair.generate(&z, f)?);

    println!("\naugmenting a 500-point training split (takes a minute)");
    let reports = augmentation_family(0, &augmentation_settings(), &benchmark_gan(), &[0.1f64.sqrt(), 0.1])?;
    println!("{}", build_comparison(&reports, "multi")?.render_text());
    Ok(())
}
