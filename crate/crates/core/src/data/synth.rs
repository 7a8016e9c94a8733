//! Seeded synthetic benchmarks standing in for freeway flow data.

use std::f64::consts::TAU;

use chrono::TimeDelta;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{parse_timestamp, TimeSeries, WindowedDataset};
use crate::error::Result;

/// Slots per day at 15-minute resolution.
const DAY: f64 = 96.0;
const WEEK: f64 = 7.0 * DAY;

/// 15-minute traffic-like flow starting 2011-01-01: daily and weekly
/// sinusoids, a slow upward trend, and AR(1) noise whose scale grows with
/// the level.
pub fn synthetic_traffic(len: usize, seed: u64) -> TimeSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ar = 0.0f64;
    let values = (0..len)
        .map(|t| {
            let t = t as f64;
            let level = 460.0
                + 250.0 * (TAU * t / DAY - 2.1).sin()
                + 110.0 * (2.0 * TAU * t / DAY + 0.6).sin()
                + 45.0 * (3.0 * TAU * t / DAY + 1.3).sin()
                + 40.0 * (TAU * t / WEEK).sin()
                + 0.02 * t;
            let eps: f64 = rng.sample(StandardNormal);
            ar = 0.6 * ar + eps;
            (level + (0.05 * level.max(0.0) + 4.0) * ar).max(0.0)
        })
        .collect();
    TimeSeries::new(
        parse_timestamp("2011-01-01T00:00:00Z").expect("constant timestamp"),
        TimeDelta::minutes(15),
        values,
    )
    .expect("synthetic values are finite and clamped at zero")
}

/// Deterministic-map pairs: futures are windows of a normalized synthetic
/// series and each history is its future reversed (`p == q`).
pub fn reversed_future_pairs(n: usize, q: usize, seed: u64) -> Result<WindowedDataset> {
    let series = synthetic_traffic(n + q + 8 * DAY as usize, seed);
    let norm = super::Normalizer::fit(series.values())?;
    let values = norm.apply(series.values());
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    let mut ds = WindowedDataset::empty(q, q);
    for _ in 0..n {
        let s = rng.random_range(0..values.len() - q);
        let future = &values[s..s + q];
        let history: Vec<f64> = future.iter().rev().copied().collect();
        ds.push(&history, future)?;
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_non_negative() {
        let a = synthetic_traffic(500, 7);
        let b = synthetic_traffic(500, 7);
        assert_eq!(a, b);
        assert!(a.values().iter().all(|v| *v >= 0.0));
        assert_ne!(a, synthetic_traffic(500, 8));
    }

    #[test]
    fn reversed_pairs() {
        let ds = reversed_future_pairs(20, 4, 1).unwrap();
        assert_eq!(ds.len(), 20);
        for (h, f) in ds.rows() {
            let rev: Vec<f64> = f.iter().rev().copied().collect();
            assert_eq!(h, &rev[..]);
        }
    }
}

/// Chronological train/validation/test split of [`synthetic_traffic`],
/// min-max normalized on the training part.
#[derive(Clone, Debug)]
pub struct SyntheticSplits {
    pub train: Vec<f64>,
    pub val: Vec<f64>,
    pub test: Vec<f64>,
    pub normalizer: super::Normalizer,
}

pub fn synthetic_splits(
    train_len: usize,
    val_len: usize,
    test_len: usize,
    seed: u64,
) -> Result<SyntheticSplits> {
    let series = synthetic_traffic(train_len + val_len + test_len, seed);
    let v = series.values();
    let normalizer = super::Normalizer::fit(&v[..train_len])?;
    Ok(SyntheticSplits {
        train: normalizer.apply(&v[..train_len]),
        val: normalizer.apply(&v[train_len..train_len + val_len]),
        test: normalizer.apply(&v[train_len + val_len..]),
        normalizer,
    })
}
