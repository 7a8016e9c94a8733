use std::sync::OnceLock;

use multistep::bench::benchmark_gan;
use multistep::cgan::{
    generate_pairs, noise_augment, sample_futures, train_cgan, CganConfig, CganPair,
};
use multistep::data::synth::reversed_future_pairs;
use multistep::data::WindowedDataset;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator trained on histories that are the reversed future.
fn reversed_map() -> &'static CganPair {
    static PAIR: OnceLock<CganPair> = OnceLock::new();
    PAIR.get_or_init(|| {
        let data = reversed_future_pairs(1000, 8, 3).unwrap();
        train_cgan(&data, &CganConfig { seed: 3, ..benchmark_gan() }).unwrap()
    })
}

#[test]
fn losses_stay_finite() {
    let pair = reversed_map();
    assert_eq!(pair.training_log.len(), benchmark_gan().epochs);
    for e in &pair.training_log {
        assert!(e.d_loss.is_finite() && e.g_loss.is_finite(), "epoch {}", e.epoch);
    }
}

#[test]
fn generator_learns_the_reversal() {
    let pair = reversed_map();
    let held_out = reversed_future_pairs(200, 8, 99).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut total = 0.0;
    let mut count = 0usize;
    for (h, f) in held_out.rows() {
        let z = pair.sample_noise(&mut rng);
        let g = pair.generate(&z, f).unwrap();
        total += g.iter().zip(h).map(|(a, b)| (a - b).abs()).sum::<f64>();
        count += h.len();
    }
    let mad = total / count as f64;
    assert!(mad < 0.1, "mean absolute deviation {mad}");
}

#[test]
fn output_depends_on_the_condition() {
    // Spread across futures should dominate spread across noise draws.
    let pair = reversed_map();
    let data = reversed_future_pairs(50, 8, 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let z0 = pair.sample_noise(&mut rng);
    let f0 = data.future(0);
    let base = pair.generate(&z0, f0).unwrap();
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    let mut across_noise = 0.0;
    let mut across_futures = 0.0;
    for i in 1..data.len() {
        let z = pair.sample_noise(&mut rng);
        across_noise += dist(&pair.generate(&z, f0).unwrap(), &base);
        across_futures += dist(&pair.generate(&z0, data.future(i)).unwrap(), &base);
    }
    assert!(across_futures > 2.0 * across_noise, "{across_futures} vs {across_noise}");
}

fn tiny_cfg(seed: u64) -> CganConfig {
    CganConfig {
        epochs: 3,
        noise_dim: 4,
        batch_size: 16,
        seed,
        ..benchmark_gan()
    }
}

#[test]
fn training_is_deterministic_per_seed() {
    let data = reversed_future_pairs(100, 4, 1).unwrap();
    let a = train_cgan(&data, &tiny_cfg(11)).unwrap();
    let b = train_cgan(&data, &tiny_cfg(11)).unwrap();
    let c = train_cgan(&data, &tiny_cfg(12)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.generator, c.generator);
}

#[test]
fn generated_pairs_keep_their_futures() {
    let data = reversed_future_pairs(100, 4, 2).unwrap();
    let pair = train_cgan(&data, &tiny_cfg(2)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let futures = sample_futures(&data, 40, &mut rng);
    let gen = generate_pairs(&pair, &futures, &mut rng).unwrap();
    assert_eq!(gen.len(), 40);
    for (i, (h, f)) in gen.rows().enumerate() {
        assert_eq!(f, futures[i].as_slice());
        assert!(h.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

fn dataset(rows: &[(Vec<f64>, Vec<f64>)]) -> WindowedDataset {
    let mut ds = WindowedDataset::empty(rows[0].0.len(), rows[0].1.len());
    for (h, f) in rows {
        ds.push(h, f).unwrap();
    }
    ds
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn noise_augmentation_preserves_originals(
        rows in prop::collection::vec(
            (prop::collection::vec(0.0f64..1.0, 3), prop::collection::vec(0.0f64..1.0, 2)),
            1..20,
        ),
        sigma in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let ds = dataset(&rows);
        let before = ds.clone();
        let out = noise_augment(&ds, sigma, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(&ds, &before);
        prop_assert_eq!(out.len(), 2 * ds.len());
        let n = ds.len();
        for i in 0..n {
            prop_assert_eq!(out.history(i), ds.history(i));
            prop_assert_eq!(out.future(i), ds.future(i));
            prop_assert_eq!(out.future(n + i), ds.future(i));
        }
    }
}
