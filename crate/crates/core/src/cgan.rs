//! Conditional GAN that learns to generate history windows given a future
//! window, used to enlarge multi-output training sets, plus the Gaussian
//! feature-noise augmentation it is compared against.
//!
//! Both networks are plain dense nets with the conditioning future
//! concatenated at the input: the generator maps `[z, future] -> history`
//! (linear output) and the discriminator maps `[history, future] -> P(real)`
//! (sigmoid output).

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::WindowedDataset;
use crate::error::{Error, Result};
use crate::nn::{derive_seed, Activation, AdamState, Mlp, Mode, NetSpec};

/// Probabilities entering a log are clamped to `[EPS, 1 - EPS]`.
pub const EPS: f64 = 1e-7;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorLoss {
    /// Minimize `-log D(G(z, y), y)`.
    #[default]
    NonSaturating,
    /// Minimize `log(1 - D(G(z, y), y))`.
    Saturating,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CganConfig {
    pub noise_dim: usize,
    pub lr_discriminator: f64,
    pub lr_generator: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub net: NetSpec,
    pub dropout_generator: f64,
    pub dropout_discriminator: f64,
    /// Std-dev of Gaussian noise added to the history half of every
    /// discriminator input during training (real and fake alike). Zero
    /// disables it.
    pub instance_noise: f64,
    pub generator_loss: GeneratorLoss,
}

impl Default for CganConfig {
    fn default() -> Self {
        Self {
            noise_dim: 16,
            lr_discriminator: 2e-4,
            lr_generator: 1e-4,
            epochs: 200,
            batch_size: 64,
            seed: 0,
            net: NetSpec::default(),
            dropout_generator: 0.0,
            dropout_discriminator: 0.1,
            instance_noise: 0.0,
            generator_loss: GeneratorLoss::NonSaturating,
        }
    }
}

impl CganConfig {
    pub fn validate(&self) -> Result<()> {
        if self.noise_dim == 0 || self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::config(
                "cgan.noise_dim, cgan.epochs and cgan.batch_size must be positive",
            ));
        }
        if !(self.lr_discriminator > 0.0 && self.lr_generator > 0.0) {
            return Err(Error::config("cgan learning rates must be positive"));
        }
        for rate in [self.dropout_generator, self.dropout_discriminator] {
            if !(0.0..1.0).contains(&rate) {
                return Err(Error::config("cgan dropout rates must lie in [0, 1)"));
            }
        }
        if !(self.instance_noise >= 0.0 && self.instance_noise.is_finite()) {
            return Err(Error::config("cgan.instance_noise must be non-negative"));
        }
        if self.lr_discriminator < self.lr_generator {
            log::warn!(
                "discriminator learning rate {} is below generator learning rate {}",
                self.lr_discriminator,
                self.lr_generator
            );
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GanEpochLog {
    pub epoch: usize,
    pub d_loss: f64,
    pub g_loss: f64,
    /// Accuracy of the discriminator on the real and fake rows it was
    /// trained on during the epoch.
    pub d_accuracy: f64,
    /// Accuracy on held-out rows after the epoch, when a holdout was given.
    pub holdout_accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CganPair {
    pub generator: Mlp,
    pub discriminator: Mlp,
    pub p: usize,
    pub q: usize,
    pub noise_dim: usize,
    pub training_log: Vec<GanEpochLog>,
}

impl CganPair {
    /// Freshly initialized, untrained pair.
    pub fn init(p: usize, q: usize, cfg: &CganConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0xC6A0));
        let generator = cfg.net.build(
            cfg.noise_dim + q,
            p,
            Activation::Linear,
            cfg.dropout_generator,
            &mut rng,
        )?;
        let discriminator =
            cfg.net
                .build(p + q, 1, Activation::Sigmoid, cfg.dropout_discriminator, &mut rng)?;
        Ok(Self {
            generator,
            discriminator,
            p,
            q,
            noise_dim: cfg.noise_dim,
            training_log: Vec::new(),
        })
    }

    /// Raw generator output for noise `z` and label `future`.
    pub fn generate(&self, z: &[f64], future: &[f64]) -> Result<Vec<f64>> {
        if z.len() != self.noise_dim || future.len() != self.q {
            return Err(Error::shape(format!(
                "generator expects noise of {} and future of {}",
                self.noise_dim, self.q
            )));
        }
        let input: Vec<f64> = z.iter().chain(future).copied().collect();
        self.generator.predict(&input)
    }

    /// Discriminator probability that `(history, future)` is real.
    pub fn discriminate(&self, history: &[f64], future: &[f64]) -> Result<f64> {
        let input: Vec<f64> = history.iter().chain(future).copied().collect();
        Ok(self.discriminator.predict(&input)?[0])
    }

    /// Standard-normal latent vector of length `noise_dim`.
    pub fn sample_noise(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..self.noise_dim).map(|_| rng.sample(StandardNormal)).collect()
    }
}

fn concat(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(a.len() + b.len());
    v.extend_from_slice(a);
    v.extend_from_slice(b);
    v
}

fn blurred(history: &[f64], future: &[f64], sigma: f64, rng: &mut dyn RngCore) -> Vec<f64> {
    let mut v = concat(history, future);
    if sigma > 0.0 {
        for x in &mut v[..history.len()] {
            *x += sigma * rng.sample::<f64, _>(StandardNormal);
        }
    }
    v
}

#[inline]
fn clamp_prob(s: f64) -> f64 {
    s.clamp(EPS, 1.0 - EPS)
}

pub fn train_cgan(data: &WindowedDataset, cfg: &CganConfig) -> Result<CganPair> {
    train_cgan_monitored(data, None, cfg)
}

/// Alternating discriminator / generator updates, one of each per
/// mini-batch. With a holdout set, discriminator accuracy on it is recorded
/// after every epoch.
pub fn train_cgan_monitored(
    data: &WindowedDataset,
    holdout: Option<&WindowedDataset>,
    cfg: &CganConfig,
) -> Result<CganPair> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::config("cannot train a C-GAN on an empty dataset"));
    }
    if let Some(h) = holdout {
        if h.p() != data.p() || h.q() != data.q() || h.is_empty() {
            return Err(Error::config("holdout set must be non-empty with the training dims"));
        }
    }
    let (p, q) = (data.p(), data.q());
    let mut pair = CganPair::init(p, q, cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam_d = AdamState::new(pair.discriminator.num_params(), cfg.lr_discriminator);
    let mut adam_g = AdamState::new(pair.generator.num_params(), cfg.lr_generator);
    let mut grad_d = vec![0.0; pair.discriminator.num_params()];
    let mut grad_g = vec![0.0; pair.generator.num_params()];
    let mut scratch = vec![0.0; pair.discriminator.num_params()];
    let mut order: Vec<usize> = (0..data.len()).collect();
    let sigma = cfg.instance_noise;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut d_loss, mut g_loss, mut correct) = (0.0, 0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let scale = 1.0 / batch.len() as f64;

            // Discriminator: ascend log D(x, y) + log(1 - D(G(z, y), y)).
            grad_d.fill(0.0);
            for &i in batch {
                let (hist, fut) = (data.history(i), data.future(i));
                let real = pair
                    .discriminator
                    .forward(&blurred(hist, fut, sigma, &mut rng), Mode::Train(&mut rng))?;
                let s = clamp_prob(real.output()[0]);
                d_loss -= s.ln();
                correct += usize::from(real.output()[0] > 0.5);
                pair.discriminator
                    .backward_accumulate(&real, &[-scale / s], &mut grad_d)?;

                let z = pair.sample_noise(&mut rng);
                let fake_hist = pair
                    .generator
                    .forward(&concat(&z, fut), Mode::Train(&mut rng))?
                    .into_output();
                let fake = pair
                    .discriminator
                    .forward(&blurred(&fake_hist, fut, sigma, &mut rng), Mode::Train(&mut rng))?;
                let s = clamp_prob(fake.output()[0]);
                d_loss -= (1.0 - s).ln();
                correct += usize::from(fake.output()[0] <= 0.5);
                pair.discriminator
                    .backward_accumulate(&fake, &[scale / (1.0 - s)], &mut grad_d)?;
            }
            adam_d.step(pair.discriminator.params_mut(), &grad_d)?;

            // Generator, through the (fixed) discriminator.
            grad_g.fill(0.0);
            for &i in batch {
                let fut = data.future(i);
                let z = pair.sample_noise(&mut rng);
                let g_cache = pair
                    .generator
                    .forward(&concat(&z, fut), Mode::Train(&mut rng))?;
                let d_in = blurred(g_cache.output(), fut, sigma, &mut rng);
                let d_cache = pair.discriminator.forward(&d_in, Mode::Train(&mut rng))?;
                let s = clamp_prob(d_cache.output()[0]);
                let dl_ds = match cfg.generator_loss {
                    GeneratorLoss::NonSaturating => {
                        g_loss -= s.ln();
                        -1.0 / s
                    }
                    GeneratorLoss::Saturating => {
                        g_loss += (1.0 - s).ln();
                        -1.0 / (1.0 - s)
                    }
                };
                scratch.fill(0.0);
                let d_input =
                    pair.discriminator
                        .backward_accumulate(&d_cache, &[dl_ds * scale], &mut scratch)?;
                pair.generator
                    .backward_accumulate(&g_cache, &d_input[..p], &mut grad_g)?;
            }
            adam_g.step(pair.generator.params_mut(), &grad_g)?;
        }
        let n = data.len() as f64;
        let entry = GanEpochLog {
            epoch,
            d_loss: d_loss / n,
            g_loss: g_loss / n,
            d_accuracy: correct as f64 / (2.0 * n),
            holdout_accuracy: match holdout {
                Some(h) => {
                    let mut eval_rng =
                        ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, epoch as u64 + 1));
                    Some(discriminator_accuracy(&pair, h, h.len(), &mut eval_rng)?)
                }
                None => None,
            },
        };
        if !(entry.d_loss.is_finite() && entry.g_loss.is_finite()) {
            return Err(Error::Numeric(format!("GAN loss became non-finite at epoch {epoch}")));
        }
        pair.training_log.push(entry);
    }
    Ok(pair)
}

/// Fraction of correct real/fake calls at threshold 0.5 over every real row
/// of `data` plus `num_fakes` generated rows (labels drawn uniformly from
/// `data`'s futures).
pub fn discriminator_accuracy(
    pair: &CganPair,
    data: &WindowedDataset,
    num_fakes: usize,
    rng: &mut dyn RngCore,
) -> Result<f64> {
    if num_fakes == 0 {
        return Err(Error::config("num_fakes must be at least 1"));
    }
    if data.is_empty() {
        return Err(Error::config("accuracy needs at least one real row"));
    }
    let mut correct = 0usize;
    for (h, f) in data.rows() {
        correct += usize::from(pair.discriminate(h, f)? > 0.5);
    }
    for _ in 0..num_fakes {
        let fut = data.future(rng.random_range(0..data.len()));
        let z = pair.sample_noise(rng);
        let fake = pair.generate(&z, fut)?;
        correct += usize::from(pair.discriminate(&fake, fut)? <= 0.5);
    }
    Ok(correct as f64 / (data.len() + num_fakes) as f64)
}

/// Draws `m` futures uniformly with replacement from `data`.
pub fn sample_futures(data: &WindowedDataset, m: usize, rng: &mut dyn RngCore) -> Vec<Vec<f64>> {
    if data.is_empty() {
        return Vec::new();
    }
    (0..m)
        .map(|_| data.future(rng.random_range(0..data.len())).to_vec())
        .collect()
}

/// One generated history per future row, clamped to `[0, 1]`.
pub fn generate_pairs(
    pair: &CganPair,
    futures: &[Vec<f64>],
    rng: &mut dyn RngCore,
) -> Result<WindowedDataset> {
    if pair.training_log.is_empty() {
        log::warn!("generating pairs from an untrained generator");
    }
    let mut out = WindowedDataset::empty(pair.p, pair.q);
    for fut in futures {
        let z = pair.sample_noise(rng);
        let hist: Vec<f64> = pair
            .generate(&z, fut)?
            .into_iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect();
        out.push(&hist, fut)?;
    }
    Ok(out)
}

/// Gaussian feature-noise settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    #[serde(alias = "sigma")]
    pub variance: f64,
    /// Treat `variance` as the standard deviation instead.
    pub interpret_as_stddev: bool,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            variance: 0.1,
            interpret_as_stddev: false,
        }
    }
}

impl NoiseConfig {
    pub fn sigma(&self) -> f64 {
        if self.interpret_as_stddev {
            self.variance
        } else {
            self.variance.sqrt()
        }
    }
}

/// Original rows followed by one copy of each whose history is perturbed by
/// `N(0, sigma^2)` noise; futures are copied unchanged.
pub fn noise_augment(
    data: &WindowedDataset,
    sigma: f64,
    rng: &mut dyn RngCore,
) -> Result<WindowedDataset> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(Error::config(format!("noise sigma must be non-negative, got {sigma}")));
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::config(e.to_string()))?;
    let mut noisy = WindowedDataset::empty(data.p(), data.q());
    for (h, f) in data.rows() {
        let h2: Vec<f64> = h.iter().map(|&v| v + normal.sample(rng)).collect();
        noisy.push(&h2, f)?;
    }
    data.concat(&noisy)
}
