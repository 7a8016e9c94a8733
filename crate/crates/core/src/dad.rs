//! DaD meta-training for recursive models and its time-step conditioned
//! variant (C-DaD).
//!
//! Each meta-iteration rolls the current model out from every training
//! window, pairs every synthetic window with the true next observation,
//! and retrains on that set together with the original one-step pairs.
//! The iterate with the lowest validation rollout error is returned.
//!
//! In conditional mode the network receives one extra input: the number of
//! predictions already recycled into its window (scaled by `1 / N`), so a
//! single model can learn a different correction for each rollout step.

use serde::{Deserialize, Serialize};

use crate::data::{make_windows, WindowedDataset};
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::nn::{derive_seed, fit, NetSpec, TrainConfig, TrainingData};
use crate::strategies::{PredictionTrajectory, RecursiveModel};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMetric {
    #[default]
    Mse,
    Mae,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DadConfig {
    /// Rollout depth `N`.
    pub steps: usize,
    /// Meta-iterations `K`.
    pub iterations: usize,
    /// History length `p`.
    pub p: usize,
    pub net: NetSpec,
    /// Training of freshly initialized models (the base model and, in
    /// conditional mode, the first augmented model).
    pub base_train: TrainConfig,
    /// Fine-tuning of each iterate, warm-started from the previous one.
    pub inner_train: TrainConfig,
    pub conditional: bool,
    pub selection_metric: SelectionMetric,
    /// Keep synthetic rows from all earlier iterations instead of
    /// rebuilding the set from the current model only.
    pub accumulate: bool,
}

impl Default for DadConfig {
    fn default() -> Self {
        Self {
            steps: 8,
            iterations: 30,
            p: 8,
            net: NetSpec::default(),
            base_train: TrainConfig::default(),
            inner_train: TrainConfig {
                epochs: 20,
                ..TrainConfig::default()
            },
            conditional: true,
            selection_metric: SelectionMetric::Mse,
            accumulate: false,
        }
    }
}

impl DadConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::config("dad.steps (N) must be at least 1"));
        }
        if self.iterations == 0 {
            return Err(Error::config("dad.iterations (K) must be at least 1"));
        }
        if self.p == 0 {
            return Err(Error::config("dad.p must be at least 1"));
        }
        self.base_train.validate()?;
        self.inner_train.validate()
    }
}

/// Training rows `(input, next value)` tagged with the number of recycled
/// predictions in the input window.
#[derive(Clone, Debug, PartialEq)]
pub struct AugmentedDataset {
    p: usize,
    conditional: bool,
    steps: usize,
    inputs: Vec<f64>,
    targets: Vec<f64>,
    tags: Vec<usize>,
}

impl AugmentedDataset {
    fn new(p: usize, conditional: bool, steps: usize) -> Self {
        Self {
            p,
            conditional,
            steps,
            inputs: Vec::new(),
            targets: Vec::new(),
            tags: Vec::new(),
        }
    }

    fn push(&mut self, window: &[f64], target: f64, tag: usize) {
        self.inputs.extend_from_slice(window);
        if self.conditional {
            self.inputs.push(tag as f64 / self.steps as f64);
        }
        self.targets.push(target);
        self.tags.push(tag);
    }

    pub fn tag(&self, i: usize) -> usize {
        self.tags[i]
    }

    pub fn tags(&self) -> &[usize] {
        &self.tags
    }

    pub fn is_conditional(&self) -> bool {
        self.conditional
    }

    /// Appends the synthetic (`tag > 0`) rows of `other`.
    pub fn extend_synthetic(&mut self, other: &AugmentedDataset) {
        let w = self.input_dim();
        for i in (0..other.len()).filter(|&i| other.tags[i] > 0) {
            self.inputs.extend_from_slice(&other.inputs[i * w..(i + 1) * w]);
            self.targets.push(other.targets[i]);
            self.tags.push(other.tags[i]);
        }
    }
}

impl TrainingData for AugmentedDataset {
    fn len(&self) -> usize {
        self.targets.len()
    }
    fn input_dim(&self) -> usize {
        self.p + usize::from(self.conditional)
    }
    fn target_dim(&self) -> usize {
        1
    }
    fn input(&self, i: usize) -> &[f64] {
        let w = self.input_dim();
        &self.inputs[i * w..(i + 1) * w]
    }
    fn target(&self, i: usize) -> &[f64] {
        std::slice::from_ref(&self.targets[i])
    }
}

/// Builds the training set from one-step windows and rollouts.
///
/// `windows` must be the stride-1, `q = 1` windowing of the training series.
/// Every original pair is kept with tag 0. A trajectory started at window
/// `t` contributes, for each step `n` in `1..N` whose ground truth exists,
/// the window ending in its `n`-th prediction paired with the true value
/// that follows (window `t + n`'s target), tagged `n`.
pub fn build_augmented_dataset(
    windows: &WindowedDataset,
    trajectories: &[PredictionTrajectory],
    conditional: bool,
    steps: usize,
) -> Result<AugmentedDataset> {
    if windows.q() != 1 || windows.stride() != 1 {
        return Err(Error::Alignment(format!(
            "augmentation needs stride-1 one-step windows, got q = {}, stride = {}",
            windows.q(),
            windows.stride()
        )));
    }
    if steps == 0 {
        return Err(Error::config("rollout depth N must be at least 1"));
    }
    let p = windows.p();
    let mut out = AugmentedDataset::new(p, conditional, steps);
    for (h, f) in windows.rows() {
        out.push(h, f[0], 0);
    }
    let mut window = Vec::with_capacity(2 * p);
    for traj in trajectories {
        let t = traj.start_index;
        if t >= windows.len() {
            return Err(Error::Alignment(format!(
                "trajectory starts at window {t}, but only {} windows exist",
                windows.len()
            )));
        }
        window.clear();
        window.extend_from_slice(windows.history(t));
        for (n, &x_hat) in (1..steps).zip(&traj.values) {
            if t + n >= windows.len() {
                break;
            }
            window.push(x_hat);
            let w = &window[window.len() - p..];
            out.push(w, windows.future(t + n)[0], n);
        }
    }
    Ok(out)
}

/// Validation errors of one candidate model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationError {
    pub mse: f64,
    pub mae: f64,
}

impl IterationError {
    fn get(&self, metric: SelectionMetric) -> f64 {
        match metric {
            SelectionMetric::Mse => self.mse,
            SelectionMetric::Mae => self.mae,
        }
    }
}

/// Index of the lowest error under `metric`; ties go to the earliest.
pub fn select_best(errors: &[IterationError], metric: SelectionMetric) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in errors.iter().enumerate() {
        let v = e.get(metric);
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::Contract("select_best needs at least one candidate".into()))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetaTrainResult {
    pub best_model: RecursiveModel,
    /// 0 is the starting model (the base model for DaD, the first augmented
    /// model for C-DaD), `k` the `k`-th retrained iterate.
    pub best_iteration: usize,
    pub per_iteration_val_errors: Vec<IterationError>,
    /// Plain one-step model trained on the original pairs only.
    pub base_model: RecursiveModel,
    /// Size of the training set each candidate was fit on.
    pub dataset_sizes: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationLogEntry {
    pub k: usize,
    pub val_mse: f64,
    pub val_mae: f64,
    pub train_rows: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaTrainLog {
    pub iterations: Vec<IterationLogEntry>,
    pub best_iteration: usize,
}

impl MetaTrainResult {
    pub fn log(&self) -> MetaTrainLog {
        MetaTrainLog {
            iterations: self
                .per_iteration_val_errors
                .iter()
                .zip(&self.dataset_sizes)
                .enumerate()
                .map(|(k, (e, &rows))| IterationLogEntry {
                    k,
                    val_mse: e.mse,
                    val_mae: e.mae,
                    train_rows: rows,
                })
                .collect(),
            best_iteration: self.best_iteration,
        }
    }
}

/// Rolls `model` out from every window that can still yield a synthetic
/// row.
pub fn rollouts(
    model: &RecursiveModel,
    windows: &WindowedDataset,
    steps: usize,
) -> Result<Vec<PredictionTrajectory>> {
    let depth = steps.saturating_sub(1);
    if depth == 0 || windows.len() < 2 {
        return Ok(Vec::new());
    }
    (0..windows.len() - 1)
        .map(|t| {
            let n = depth.min(windows.len() - 1 - t);
            Ok(model.rollout(windows.history(t), n)?.with_start(t))
        })
        .collect()
}

/// Plain DaD (`cfg.conditional` must be false).
pub fn train_dad(train: &[f64], val: &[f64], cfg: &DadConfig) -> Result<MetaTrainResult> {
    if cfg.conditional {
        return Err(Error::config("train_dad called with conditional = true"));
    }
    train_meta(train, val, cfg)
}

/// Time-step conditioned DaD (`cfg.conditional` must be true).
pub fn train_cdad(train: &[f64], val: &[f64], cfg: &DadConfig) -> Result<MetaTrainResult> {
    if !cfg.conditional {
        return Err(Error::config("train_cdad called with conditional = false"));
    }
    train_meta(train, val, cfg)
}

fn validation_error(model: &RecursiveModel, val: &WindowedDataset) -> Result<IterationError> {
    let r = evaluate("candidate", model, val, None)?;
    Ok(IterationError {
        mse: r.overall_mse,
        mae: r.overall_mae,
    })
}

struct Tracker {
    metric: SelectionMetric,
    errors: Vec<IterationError>,
    sizes: Vec<usize>,
    best: Option<(usize, RecursiveModel)>,
}

impl Tracker {
    fn record(&mut self, model: &RecursiveModel, err: IterationError, rows: usize) {
        let k = self.errors.len();
        let better = match &self.best {
            None => true,
            Some((b, _)) => err.get(self.metric) < self.errors[*b].get(self.metric),
        };
        if better {
            self.best = Some((k, model.clone()));
        }
        log::debug!("meta-iteration {k}: val mse {:.6} mae {:.6} ({rows} rows)", err.mse, err.mae);
        self.errors.push(err);
        self.sizes.push(rows);
    }
}

fn train_meta(train: &[f64], val: &[f64], cfg: &DadConfig) -> Result<MetaTrainResult> {
    cfg.validate()?;
    let (p, steps) = (cfg.p, cfg.steps);
    let windows = make_windows(train, p, 1, 1)?;
    let val_windows = make_windows(val, p, steps, 1)?;

    let base_cfg = &cfg.base_train;
    let base_net = cfg.net.regressor(p, 1, base_cfg)?;
    let (base_net, _) = fit(base_net, &windows, base_cfg)?;
    let base = RecursiveModel::new(base_net, p)?;

    let mut tracker = Tracker {
        metric: cfg.selection_metric,
        errors: Vec::with_capacity(cfg.iterations + 1),
        sizes: Vec::with_capacity(cfg.iterations + 1),
        best: None,
    };

    let mut current = if cfg.conditional {
        let trajs = rollouts(&base, &windows, steps)?;
        let data = build_augmented_dataset(&windows, &trajs, true, steps)?;
        let init_cfg = base_cfg.with_seed(derive_seed(base_cfg.seed, 0));
        let net = cfg.net.regressor(p + 1, 1, &init_cfg)?;
        let (net, _) = fit(net, &data, &init_cfg)?;
        let m0 = RecursiveModel::augmented(net, p, steps)?;
        tracker.record(&m0, validation_error(&m0, &val_windows)?, data.len());
        m0
    } else {
        tracker.record(&base, validation_error(&base, &val_windows)?, windows.len());
        base.clone()
    };

    let mut pooled: Option<AugmentedDataset> = None;
    for k in 1..=cfg.iterations {
        let trajs = rollouts(&current, &windows, steps)?;
        let fresh = build_augmented_dataset(&windows, &trajs, cfg.conditional, steps)?;
        let data = if cfg.accumulate {
            let pool = pooled.get_or_insert_with(|| {
                AugmentedDataset::new(p, cfg.conditional, steps)
            });
            if pool.is_empty() {
                *pool = fresh;
            } else {
                pool.extend_synthetic(&fresh);
            }
            &*pool
        } else {
            pooled = Some(fresh);
            pooled.as_ref().expect("just set")
        };
        let inner = cfg.inner_train.with_seed(derive_seed(cfg.inner_train.seed, k as u64));
        let (net, _) = fit(current.net().clone(), data, &inner)?;
        let rows = data.len();
        current = if cfg.conditional {
            RecursiveModel::augmented(net, p, steps)?
        } else {
            RecursiveModel::new(net, p)?
        };
        tracker.record(&current, validation_error(&current, &val_windows)?, rows);
    }

    let (best_iteration, best_model) = tracker.best.expect("at least one candidate recorded");
    Ok(MetaTrainResult {
        best_model,
        best_iteration,
        per_iteration_val_errors: tracker.errors,
        base_model: base,
        dataset_sizes: tracker.sizes,
    })
}
