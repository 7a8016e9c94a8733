use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{mse_loss, Activation, AdamState, Mlp, Mode};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub dropout_rate: f64,
    pub learning_rate: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            batch_size: 64,
            seed: 0,
            dropout_rate: 0.1,
            learning_rate: 1e-3,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("train.learning_rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::config("train.dropout_rate must lie in [0, 1)"));
        }
        Ok(())
    }

    /// Same config with a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }
}

/// Hidden-layer architecture shared by every regression model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetSpec {
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub activation: Activation,
}

impl Default for NetSpec {
    fn default() -> Self {
        Self {
            hidden_layers: 2,
            hidden_units: 150,
            activation: Activation::Relu,
        }
    }
}

impl NetSpec {
    pub fn build<R: Rng + ?Sized>(
        &self,
        input_dim: usize,
        output_dim: usize,
        output_activation: Activation,
        dropout_rate: f64,
        rng: &mut R,
    ) -> Result<Mlp> {
        let hidden = vec![self.hidden_units; self.hidden_layers];
        Mlp::new(
            input_dim,
            &hidden,
            output_dim,
            self.activation,
            output_activation,
            dropout_rate,
            rng,
        )
    }

    /// Linear-output regressor initialized from `seed`.
    pub fn regressor(&self, input_dim: usize, output_dim: usize, cfg: &TrainConfig) -> Result<Mlp> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ INIT_SALT);
        self.build(input_dim, output_dim, Activation::Linear, cfg.dropout_rate, &mut rng)
    }
}

const INIT_SALT: u64 = 0x5EED_1A17_u64;

/// SplitMix64 finalizer over `seed + k`; gives well-separated child seeds
/// for sub-models trained under one master seed.
pub fn derive_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed.wrapping_add(k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Supervised (input, target) rows.
pub trait TrainingData {
    fn len(&self) -> usize;
    fn input_dim(&self) -> usize;
    fn target_dim(&self) -> usize;
    fn input(&self, i: usize) -> &[f64];
    fn target(&self, i: usize) -> &[f64];

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Row-major owned samples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Samples {
    input_dim: usize,
    target_dim: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
}

impl Samples {
    pub fn new(input_dim: usize, target_dim: usize) -> Self {
        Self {
            input_dim,
            target_dim,
            inputs: Vec::new(),
            targets: Vec::new(),
        }
    }

    pub fn push(&mut self, input: &[f64], target: &[f64]) -> Result<()> {
        if input.len() != self.input_dim || target.len() != self.target_dim {
            return Err(Error::shape(format!(
                "sample dims ({}, {}) != ({}, {})",
                input.len(),
                target.len(),
                self.input_dim,
                self.target_dim
            )));
        }
        self.inputs.extend_from_slice(input);
        self.targets.extend_from_slice(target);
        Ok(())
    }
}

impl TrainingData for Samples {
    fn len(&self) -> usize {
        if self.target_dim == 0 {
            0
        } else {
            self.targets.len() / self.target_dim
        }
    }
    fn input_dim(&self) -> usize {
        self.input_dim
    }
    fn target_dim(&self) -> usize {
        self.target_dim
    }
    fn input(&self, i: usize) -> &[f64] {
        &self.inputs[i * self.input_dim..(i + 1) * self.input_dim]
    }
    fn target(&self, i: usize) -> &[f64] {
        &self.targets[i * self.target_dim..(i + 1) * self.target_dim]
    }
}

/// Mini-batch Adam training on MSE. Returns the trained network and the
/// mean training loss of every epoch.
///
/// A fresh optimizer state is used on every call, so passing an already
/// trained network fine-tunes it. Shuffling and dropout masks are driven by
/// `cfg.seed` only.
pub fn fit<D: TrainingData + ?Sized>(
    mut net: Mlp,
    data: &D,
    cfg: &TrainConfig,
) -> Result<(Mlp, Vec<f64>)> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::config("cannot train on an empty dataset"));
    }
    if data.input_dim() != net.input_dim() || data.target_dim() != net.output_dim() {
        return Err(Error::shape(format!(
            "dataset dims ({}, {}) do not match network ({}, {})",
            data.input_dim(),
            data.target_dim(),
            net.input_dim(),
            net.output_dim()
        )));
    }
    if cfg.epochs == 0 {
        return Ok((net, Vec::new()));
    }
    net.set_dropout_rate(cfg.dropout_rate)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = AdamState::new(net.num_params(), cfg.learning_rate);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut grad = vec![0.0; net.num_params()];
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grad.fill(0.0);
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let cache = net.forward(data.input(i), Mode::Train(&mut rng))?;
                let (loss, mut g) = mse_loss(cache.output(), data.target(i))?;
                total += loss;
                g.iter_mut().for_each(|v| *v *= scale);
                net.backward_accumulate(&cache, &g, &mut grad)?;
            }
            adam.step(net.params_mut(), &grad)?;
        }
        let mean = total / data.len() as f64;
        if !mean.is_finite() {
            return Err(Error::Numeric(format!("training loss diverged at epoch {epoch}")));
        }
        history.push(mean);
    }
    Ok((net, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::DenseLayer;

    fn linear_data() -> Samples {
        let mut s = Samples::new(1, 1);
        for i in 0..64 {
            let x = i as f64 / 64.0;
            s.push(&[x], &[2.0 * x]).unwrap();
        }
        s
    }

    fn linear_net() -> Mlp {
        Mlp::from_layers(
            vec![DenseLayer {
                weights: vec![vec![0.1]],
                bias: vec![0.0],
                activation: Activation::Linear,
            }],
            0.0,
        )
        .unwrap()
    }

    fn cfg(epochs: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            batch_size: 8,
            seed: 4,
            dropout_rate: 0.0,
            learning_rate: 0.05,
        }
    }

    #[test]
    fn zero_epochs_is_identity() {
        let (net, hist) = fit(linear_net(), &linear_data(), &cfg(0)).unwrap();
        assert_eq!(net, linear_net());
        assert!(hist.is_empty());
    }

    #[test]
    fn learns_linear_map() {
        let (net, hist) = fit(linear_net(), &linear_data(), &cfg(200)).unwrap();
        assert_eq!(hist.len(), 200);
        assert!(*hist.last().unwrap() < 1e-3, "final loss {}", hist.last().unwrap());
        assert!((net.predict(&[0.5]).unwrap()[0] - 1.0).abs() < 0.05);
    }

    #[test]
    fn same_seed_same_weights() {
        let spec = NetSpec {
            hidden_layers: 1,
            hidden_units: 8,
            activation: Activation::Relu,
        };
        let c = TrainConfig {
            dropout_rate: 0.1,
            ..cfg(5)
        };
        let a = fit(spec.regressor(1, 1, &c).unwrap(), &linear_data(), &c).unwrap();
        let b = fit(spec.regressor(1, 1, &c).unwrap(), &linear_data(), &c).unwrap();
        assert_eq!(a.0.params(), b.0.params());
        assert_eq!(a.1, b.1);
    }

    #[test]
    fn empty_dataset_is_config_error() {
        let empty = Samples::new(1, 1);
        assert!(matches!(fit(linear_net(), &empty, &cfg(1)), Err(Error::Config(_))));
    }
}
