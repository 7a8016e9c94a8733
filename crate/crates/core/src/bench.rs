//! Seeded comparisons of the strategy families on the synthetic traffic
//! benchmark. Each function runs one seed and returns one report per arm,
//! evaluated on normalized test windows.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cgan::{generate_pairs, noise_augment, sample_futures, train_cgan, CganConfig};
use crate::dad::{train_cdad, train_dad, DadConfig};
use crate::data::synth::{synthetic_splits, SyntheticSplits};
use crate::data::{make_windows, WindowedDataset};
use crate::error::{Error, Result};
use crate::eval::{evaluate, MetricsReport};
use crate::nn::{derive_seed, fit, Activation, NetSpec, TrainConfig};
use crate::strategies::{train_direct, train_multi_output, RecursiveModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchSettings {
    pub train_len: usize,
    pub val_len: usize,
    pub test_len: usize,
    pub p: usize,
    pub horizon: usize,
    pub net: NetSpec,
    /// Seed field is overridden per run.
    pub train: TrainConfig,
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self {
            train_len: 2000,
            val_len: 480,
            test_len: 480,
            p: 8,
            horizon: 8,
            net: NetSpec {
                hidden_layers: 2,
                hidden_units: 32,
                activation: Activation::Relu,
            },
            train: TrainConfig {
                epochs: 60,
                batch_size: 32,
                ..Default::default()
            },
        }
    }
}

impl BenchSettings {
    pub fn splits(&self, seed: u64) -> Result<SyntheticSplits> {
        synthetic_splits(self.train_len, self.val_len, self.test_len, seed)
    }

    fn windows(&self, values: &[f64]) -> Result<WindowedDataset> {
        make_windows(values, self.p, self.horizon, 1)
    }
}

/// Vanilla recursive, DaD and C-DaD, in that order.
pub fn recursive_family(
    seed: u64,
    settings: &BenchSettings,
    iterations: usize,
    inner_epochs: usize,
) -> Result<[MetricsReport; 3]> {
    let s = settings.splits(seed)?;
    let test = settings.windows(&s.test)?;
    let base_train = settings.train.with_seed(seed);
    let cfg = DadConfig {
        steps: settings.horizon,
        iterations,
        p: settings.p,
        net: settings.net.clone(),
        inner_train: TrainConfig {
            epochs: inner_epochs,
            ..base_train.clone()
        },
        base_train,
        conditional: false,
        ..Default::default()
    };
    let dad = train_dad(&s.train, &s.val, &cfg)?;
    let cdad = train_cdad(
        &s.train,
        &s.val,
        &DadConfig {
            conditional: true,
            ..cfg
        },
    )?;
    Ok([
        evaluate("recursive", &dad.base_model, &test, None)?,
        evaluate("dad", &dad.best_model, &test, None)?,
        evaluate("cdad", &cdad.best_model, &test, None)?,
    ])
}

/// Vanilla recursive, direct and hybrid, in that order. The recursive arm
/// is the same base model [`recursive_family`] starts from.
pub fn direct_family(seed: u64, settings: &BenchSettings) -> Result<[MetricsReport; 3]> {
    let s = settings.splits(seed)?;
    let test = settings.windows(&s.test)?;
    let train = settings.windows(&s.train)?;
    let cfg = settings.train.with_seed(seed);

    let one_step = make_windows(&s.train, settings.p, 1, 1)?;
    let net = settings.net.regressor(settings.p, 1, &cfg)?;
    let (net, _) = fit(net, &one_step, &cfg)?;
    let recursive = RecursiveModel::new(net, settings.p)?;
    let direct = train_direct(&train, settings.horizon, false, &settings.net, &cfg)?;
    let hybrid = train_direct(&train, settings.horizon, true, &settings.net, &cfg)?;
    Ok([
        evaluate("recursive", &recursive, &test, None)?,
        evaluate("direct", &direct, &test, None)?,
        evaluate("hybrid", &hybrid, &test, None)?,
    ])
}

/// Vanilla multi-output, noise-augmented and C-GAN-augmented, in that order.
///
/// The noise level is picked on the validation windows from
/// `noise_sigmas`. The C-GAN arm adds one generated pair per training row.
pub fn augmentation_family(
    seed: u64,
    settings: &BenchSettings,
    gan: &CganConfig,
    noise_sigmas: &[f64],
) -> Result<[MetricsReport; 3]> {
    if noise_sigmas.is_empty() {
        return Err(Error::config("at least one noise level is required"));
    }
    let s = settings.splits(seed)?;
    let train = settings.windows(&s.train)?;
    let val = settings.windows(&s.val)?;
    let test = settings.windows(&s.test)?;
    let cfg = settings.train.with_seed(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0xA06));

    let multi = train_multi_output(&train, &settings.net, &cfg)?;

    let mut noisy_best = None;
    for &sigma in noise_sigmas {
        let noisy = noise_augment(&train, sigma, &mut rng)?;
        let model = train_multi_output(&noisy, &settings.net, &cfg)?;
        let val_mse = evaluate("noise", &model, &val, None)?.overall_mse;
        if noisy_best.as_ref().is_none_or(|(best, _)| val_mse < *best) {
            noisy_best = Some((val_mse, model));
        }
    }
    let (_, noisy) = noisy_best.expect("non-empty sigma grid");

    let pair = train_cgan(
        &train,
        &CganConfig {
            seed,
            ..gan.clone()
        },
    )?;
    let futures = sample_futures(&train, train.len(), &mut rng);
    let generated = generate_pairs(&pair, &futures, &mut rng)?;
    let gan_model = train_multi_output(&train.concat(&generated)?, &settings.net, &cfg)?;

    Ok([
        evaluate("multi", &multi, &test, None)?,
        evaluate("multi-noise", &noisy, &test, None)?,
        evaluate("multi-cgan", &gan_model, &test, None)?,
    ])
}

/// Settings used for the augmentation comparison: a 500-point training
/// split and training run long enough for the vanilla model to converge.
pub fn augmentation_settings() -> BenchSettings {
    let mut s = BenchSettings {
        train_len: 500,
        ..Default::default()
    };
    s.train.epochs = 300;
    s
}

/// GAN settings for the benchmark nets.
pub fn benchmark_gan() -> CganConfig {
    CganConfig {
        epochs: 300,
        batch_size: 32,
        lr_discriminator: 1e-3,
        lr_generator: 5e-4,
        instance_noise: 0.05,
        net: BenchSettings::default().net,
        ..Default::default()
    }
}

/// Median, averaging the two middle values for even counts.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_cases() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[7.0]), 7.0);
    }

    #[test]
    fn tiny_runs_produce_reports() {
        let settings = BenchSettings {
            train_len: 120,
            val_len: 40,
            test_len: 40,
            p: 4,
            horizon: 3,
            net: NetSpec {
                hidden_layers: 1,
                hidden_units: 4,
                activation: Activation::Relu,
            },
            train: TrainConfig {
                epochs: 2,
                ..Default::default()
            },
        };
        let r = recursive_family(1, &settings, 2, 1).unwrap();
        assert_eq!(r[2].model_tag, "cdad");
        assert_eq!(r[0].per_step_mse.len(), 3);
        let d = direct_family(1, &settings).unwrap();
        assert_eq!(d[0], r[0]);
        let gan = CganConfig {
            epochs: 2,
            noise_dim: 2,
            net: settings.net.clone(),
            ..Default::default()
        };
        let a = augmentation_family(1, &settings, &gan, &[0.1]).unwrap();
        assert_eq!(a[1].model_tag, "multi-noise");
        assert!(augmentation_family(1, &settings, &gan, &[]).is_err());
    }
}
