//! The `multistep` command line: ingest, train, evaluate and compare.
//!
//! Exit codes: 0 on success, 1 when a run fails, 2 for bad arguments or
//! configuration.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::TimeDelta;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cgan::{
    generate_pairs, noise_augment, sample_futures, train_cgan, CganConfig, GanEpochLog,
    NoiseConfig,
};
use crate::dad::{train_cdad, train_dad, DadConfig, MetaTrainLog, SelectionMetric};
use crate::data::synth::synthetic_traffic;
use crate::data::{
    aggregate, ingest_csv, make_windows, split_by_date, write_series_csv, AggregateOp, GapPolicy,
    IngestOptions, Normalizer, SeriesSidecar, SplitSpec, TimeSeries,
};
use crate::error::{Error, Result};
use crate::eval::{build_comparison, evaluate, export_step_curves, MetricsReport};
use crate::model_io::{CganDocument, ModelKind, TrainedModel};
use crate::nn::{derive_seed, fit, Activation, NetSpec, TrainConfig};
use crate::strategies::{train_direct, MultiOutputModel, RecursiveModel, Strategy};

// ---------------------------------------------------------------------------
// Run configuration

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    pub input_csv: Option<PathBuf>,
    /// Used when the series has no sidecar.
    pub resolution_minutes: i64,
    pub aggregate_factor: usize,
    pub aggregate_op: AggregateOp,
    pub gap_policy: GapPolicy,
    pub max_gap: usize,
    pub p: usize,
    pub q: usize,
    pub stride: usize,
    /// Defaults to a chronological 60/20/20 split by point count.
    pub split: Option<SplitSpec>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            input_csv: None,
            resolution_minutes: 15,
            aggregate_factor: 1,
            aggregate_op: AggregateOp::Sum,
            gap_policy: GapPolicy::Reject,
            max_gap: 4,
            p: 8,
            q: 8,
            stride: 1,
            split: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub strategy: Strategy,
    pub hidden_layers: usize,
    pub hidden_units: usize,
    pub activation: Activation,
    pub dropout: f64,
    pub train: TrainSection,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let net = NetSpec::default();
        Self {
            strategy: Strategy::Recursive,
            hidden_layers: net.hidden_layers,
            hidden_units: net.hidden_units,
            activation: net.activation,
            dropout: TrainConfig::default().dropout_rate,
            train: TrainSection::default(),
        }
    }
}

impl ModelConfig {
    pub fn net(&self) -> NetSpec {
        NetSpec {
            hidden_layers: self.hidden_layers,
            hidden_units: self.hidden_units,
            activation: self.activation,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.train.epochs,
            batch_size: self.train.batch_size,
            seed,
            dropout_rate: self.dropout,
            learning_rate: self.train.learning_rate,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DadSection {
    pub iterations: usize,
    pub inner_epochs: usize,
    pub selection_metric: SelectionMetric,
    pub accumulate: bool,
}

impl Default for DadSection {
    fn default() -> Self {
        let d = DadConfig::default();
        Self {
            iterations: d.iterations,
            inner_epochs: d.inner_train.epochs,
            selection_metric: d.selection_metric,
            accumulate: d.accumulate,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CganSection {
    /// Generated pairs added to the training set; defaults to its size.
    pub synthetic_count: Option<usize>,
    pub training: CganConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub denormalize: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Seeds every random stream of the run; seed fields inside the
    /// sections are overwritten with it.
    pub seed: u64,
    pub data: DataConfig,
    pub model: ModelConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dad: Option<DadSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cgan: Option<CganSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    pub eval: EvalConfig,
}

impl RunConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("{}: {e}", origin.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, path)
    }

    /// Checks ranges, fills in the section the strategy needs and rejects
    /// sections it does not use.
    pub fn resolve(mut self) -> Result<Self> {
        let d = &self.data;
        for (key, v) in [
            ("data.p", d.p),
            ("data.q", d.q),
            ("data.stride", d.stride),
            ("data.aggregate_factor", d.aggregate_factor),
        ] {
            if v == 0 {
                return Err(Error::config(format!("{key} must be at least 1")));
            }
        }
        if d.resolution_minutes <= 0 {
            return Err(Error::config("data.resolution_minutes must be positive"));
        }
        let strategy = self.model.strategy;
        if strategy.is_multi_output() && d.q < 2 {
            return Err(Error::config(format!(
                "strategy `{strategy}` needs data.q >= 2; use recursive or direct for one step"
            )));
        }
        self.model.train_config(self.seed).validate()?;
        if self.model.hidden_units == 0 && self.model.hidden_layers > 0 {
            return Err(Error::config("model.hidden_units must be at least 1"));
        }

        let uses_dad = matches!(strategy, Strategy::Dad | Strategy::Cdad);
        let uses_cgan = strategy == Strategy::MultiCgan;
        let uses_noise = strategy == Strategy::MultiNoise;
        for (key, present, used) in [
            ("dad", self.dad.is_some(), uses_dad),
            ("cgan", self.cgan.is_some(), uses_cgan),
            ("noise", self.noise.is_some(), uses_noise),
        ] {
            if present && !used {
                return Err(Error::config(format!(
                    "section `{key}` does not apply to strategy `{strategy}`"
                )));
            }
        }
        if uses_dad {
            let dad = self.dad.get_or_insert_with(DadSection::default);
            if dad.iterations == 0 && dad.inner_epochs == 0 {
                log::debug!("dad section trains the first candidate only");
            }
        }
        if uses_cgan {
            let net = self.model.net();
            let section = self.cgan.get_or_insert_with(|| CganSection {
                synthetic_count: None,
                training: CganConfig {
                    net,
                    ..Default::default()
                },
            });
            section.training.seed = self.seed;
            section.training.validate()?;
        }
        if uses_noise {
            let noise = self.noise.get_or_insert_with(NoiseConfig::default);
            if !(noise.variance >= 0.0 && noise.variance.is_finite()) {
                return Err(Error::config("noise.variance must be non-negative"));
            }
        }
        Ok(self)
    }

    fn dad_config(&self) -> DadConfig {
        let section = self.dad.clone().unwrap_or_default();
        let base = self.model.train_config(self.seed);
        DadConfig {
            steps: self.data.q,
            iterations: section.iterations,
            p: self.data.p,
            net: self.model.net(),
            inner_train: TrainConfig {
                epochs: section.inner_epochs,
                ..base.clone()
            },
            base_train: base,
            conditional: self.model.strategy == Strategy::Cdad,
            selection_metric: section.selection_metric,
            accumulate: section.accumulate,
        }
    }
}

// ---------------------------------------------------------------------------
// Arguments

#[derive(Debug, Parser)]
#[command(name = "multistep", version, about = "Multi-step time-series forecasting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read a raw `timestamp,flow` CSV, check it and aggregate it.
    Ingest(IngestArgs),
    /// Train a model from a run configuration.
    Train(TrainArgs),
    /// Evaluate a trained model on a series segment.
    Evaluate(EvaluateArgs),
    /// Tabulate several reports against a baseline.
    Compare(CompareArgs),
    /// Write the seeded synthetic benchmark series.
    #[command(hide = true)]
    SynthData(SynthArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum GapArg {
    Reject,
    Linear,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AggregateArg {
    Sum,
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Segment {
    Train,
    Val,
    Test,
    All,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Number of input slots summed (or averaged) into one output slot.
    #[arg(long, default_value_t = 1)]
    pub factor: usize,
    #[arg(long, default_value_t = 5)]
    pub resolution_minutes: i64,
    #[arg(long, value_enum, default_value = "reject")]
    pub gap_policy: GapArg,
    #[arg(long, default_value_t = 4)]
    pub max_gap: usize,
    #[arg(long, value_enum, default_value = "sum")]
    pub aggregate: AggregateArg,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Run configuration JSON; every field has a default.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Series CSV; overrides `data.input_csv`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub strategy: Option<Strategy>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub hidden_layers: Option<usize>,
    #[arg(long)]
    pub hidden_units: Option<usize>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub q: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    /// Also write per-step errors as CSV.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    /// Run configuration; defaults to the one saved next to the model.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    pub segment: Segment,
    /// Report errors in original units instead of normalized ones.
    #[arg(long)]
    pub denormalize: bool,
    /// Model tag in the report; defaults to the strategy.
    #[arg(long)]
    pub tag: Option<String>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, num_args = 1.., required = true)]
    pub reports: Vec<PathBuf>,
    #[arg(long)]
    pub baseline: String,
    /// Table JSON; a `.txt` rendering is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub curves: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 4800)]
    pub length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub output: PathBuf,
}

/// Parses `args` (program name first) and runs the command, returning the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Evaluate(a) => cmd_evaluate(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::SynthData(a) => cmd_synth(&a),
    }
}

// ---------------------------------------------------------------------------
// Files

fn sidecar_path(series: &Path) -> PathBuf {
    series.with_extension("json")
}

/// `model.json` -> `model.<suffix>.json`.
fn beside(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(format!("{suffix}.json"))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_series(path: &Path, series: &TimeSeries, factor: usize, op: AggregateOp) -> Result<()> {
    write_series_csv(path, series)?;
    let side = SeriesSidecar {
        start: crate::data::format_timestamp(series.start()),
        resolution_minutes: series.resolution().num_minutes(),
        length: series.len(),
        aggregate_factor: factor,
        aggregate_op: op,
    };
    write_json(&sidecar_path(path), &side)
}

/// Loads a series, taking the resolution from its sidecar when present,
/// then aggregates by `data.aggregate_factor`.
fn load_series(path: &Path, data: &DataConfig) -> Result<TimeSeries> {
    let side = sidecar_path(path);
    let minutes = if side.exists() {
        let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        let s: SeriesSidecar = serde_json::from_str(&text)
            .map_err(|e| Error::config(format!("{}: {e}", side.display())))?;
        s.resolution_minutes
    } else {
        data.resolution_minutes
    };
    let opts = IngestOptions {
        resolution: TimeDelta::minutes(minutes),
        gap_policy: data.gap_policy,
        max_gap: data.max_gap,
    };
    let series = ingest_csv(path, &opts)?;
    if data.aggregate_factor > 1 {
        aggregate(&series, data.aggregate_factor, data.aggregate_op)
    } else {
        Ok(series)
    }
}

/// Chronological 60/20/20 split by count, as dates.
fn default_split(series: &TimeSeries) -> Result<SplitSpec> {
    let n = series.len();
    if n < 5 {
        return Err(Error::config(format!("series of {n} points is too short to split")));
    }
    let train_end = (n * 3 / 5).max(1) - 1;
    let val_end = (n * 4 / 5).max(train_end + 2) - 1;
    Ok(SplitSpec {
        train_end: series.timestamp(train_end),
        val_end: series.timestamp(val_end),
    })
}

// ---------------------------------------------------------------------------
// Commands

pub fn cmd_ingest(a: &IngestArgs) -> Result<()> {
    if a.factor == 0 {
        return Err(Error::config("--factor must be at least 1"));
    }
    if a.resolution_minutes <= 0 {
        return Err(Error::config("--resolution-minutes must be positive"));
    }
    let opts = IngestOptions {
        resolution: TimeDelta::minutes(a.resolution_minutes),
        gap_policy: match a.gap_policy {
            GapArg::Reject => GapPolicy::Reject,
            GapArg::Linear => GapPolicy::Linear,
        },
        max_gap: a.max_gap,
    };
    let op = match a.aggregate {
        AggregateArg::Sum => AggregateOp::Sum,
        AggregateArg::Mean => AggregateOp::Mean,
    };
    let raw = ingest_csv(&a.input, &opts)?;
    let out = aggregate(&raw, a.factor, op)?;
    write_series(&a.output, &out, a.factor, op)?;
    println!(
        "read {} rows, wrote {} rows at {} min to {}",
        raw.len(),
        out.len(),
        out.resolution().num_minutes(),
        a.output.display()
    );
    Ok(())
}

pub fn cmd_synth(a: &SynthArgs) -> Result<()> {
    let series = synthetic_traffic(a.length, a.seed);
    write_series(&a.output, &series, 1, AggregateOp::Sum)?;
    println!("wrote {} synthetic rows to {}", series.len(), a.output.display());
    Ok(())
}

/// Everything recorded about a training run besides the model itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub strategy: Strategy,
    /// Rows of the final training set (after any augmentation).
    pub train_rows: usize,
    pub series_points: [usize; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epoch_loss: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<MetaTrainLog>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic_rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gan: Option<Vec<GanEpochLog>>,
}

fn apply_overrides(cfg: &mut RunConfig, a: &TrainArgs) {
    if let Some(path) = &a.data {
        cfg.data.input_csv = Some(path.clone());
    }
    if let Some(s) = a.strategy {
        cfg.model.strategy = s;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(e) = a.epochs {
        cfg.model.train.epochs = e;
    }
    if let Some(v) = a.hidden_layers {
        cfg.model.hidden_layers = v;
    }
    if let Some(v) = a.hidden_units {
        cfg.model.hidden_units = v;
    }
    if let Some(v) = a.dropout {
        cfg.model.dropout = v;
    }
    if let Some(v) = a.p {
        cfg.data.p = v;
    }
    if let Some(v) = a.q {
        cfg.data.q = v;
    }
}

pub fn cmd_train(a: &TrainArgs) -> Result<()> {
    let mut cfg = match &a.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    apply_overrides(&mut cfg, a);
    let mut cfg = cfg.resolve()?;
    let data_path = cfg
        .data
        .input_csv
        .clone()
        .ok_or_else(|| Error::config("no input series: pass --data or set data.input_csv"))?;
    let series = load_series(&data_path, &cfg.data)?;
    let split = match cfg.data.split {
        Some(s) => s,
        None => default_split(&series)?,
    };
    cfg.data.split = Some(split);
    let (train, val, test) = split_by_date(&series, &split)?;
    let norm = Normalizer::fit(train.values())?;
    let train_v = norm.apply(train.values());
    let val_v = norm.apply(val.values());

    let (trained, log) = train_strategy(&cfg, &train_v, &val_v, norm, &a.out)?;
    let log = TrainLog {
        series_points: [train.len(), val.len(), test.len()],
        ..log
    };
    trained.save(&a.out)?;
    write_json(&beside(&a.out, "log"), &log)?;
    write_json(&beside(&a.out, "config"), &cfg)?;
    println!(
        "trained {} on {} rows; model written to {}",
        cfg.model.strategy,
        log.train_rows,
        a.out.display()
    );
    Ok(())
}

fn train_strategy(
    cfg: &RunConfig,
    train: &[f64],
    val: &[f64],
    norm: Normalizer,
    out: &Path,
) -> Result<(TrainedModel, TrainLog)> {
    let (p, q, stride) = (cfg.data.p, cfg.data.q, cfg.data.stride);
    let strategy = cfg.model.strategy;
    let spec = cfg.model.net();
    let tcfg = cfg.model.train_config(cfg.seed);
    let mut log = TrainLog {
        strategy,
        train_rows: 0,
        series_points: [0; 3],
        epoch_loss: None,
        meta: None,
        noise_sigma: None,
        synthetic_rows: None,
        gan: None,
    };
    let kind = match strategy {
        Strategy::Recursive => {
            let windows = make_windows(train, p, 1, stride)?;
            let (net, losses) = fit(spec.regressor(p, 1, &tcfg)?, &windows, &tcfg)?;
            log.train_rows = windows.len();
            log.epoch_loss = Some(losses);
            ModelKind::Recursive(RecursiveModel::new(net, p)?)
        }
        Strategy::Dad | Strategy::Cdad => {
            let dcfg = cfg.dad_config();
            let result = if dcfg.conditional {
                train_cdad(train, val, &dcfg)?
            } else {
                train_dad(train, val, &dcfg)?
            };
            log.train_rows = result.dataset_sizes[result.best_iteration];
            log.meta = Some(result.log());
            ModelKind::Recursive(result.best_model)
        }
        Strategy::Direct | Strategy::Hybrid => {
            let windows = make_windows(train, p, q, stride)?;
            log.train_rows = windows.len();
            let hybrid = strategy == Strategy::Hybrid;
            ModelKind::Direct(train_direct(&windows, q, hybrid, &spec, &tcfg)?)
        }
        Strategy::Multi | Strategy::MultiNoise | Strategy::MultiCgan => {
            let windows = make_windows(train, p, q, stride)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0xA06));
            let data = match strategy {
                Strategy::MultiNoise => {
                    let sigma = cfg.noise.clone().unwrap_or_default().sigma();
                    log.noise_sigma = Some(sigma);
                    noise_augment(&windows, sigma, &mut rng)?
                }
                Strategy::MultiCgan => {
                    let section = cfg.cgan.clone().unwrap_or_default();
                    let pair = train_cgan(&windows, &section.training)?;
                    let count = section.synthetic_count.unwrap_or(windows.len());
                    let futures = sample_futures(&windows, count, &mut rng);
                    let generated = generate_pairs(&pair, &futures, &mut rng)?;
                    CganDocument::new(&pair, &section.training, Some(norm)).save(beside(out, "cgan"))?;
                    log.synthetic_rows = Some(generated.len());
                    log.gan = Some(pair.training_log);
                    windows.concat(&generated)?
                }
                _ => windows,
            };
            let (net, losses) = fit(spec.regressor(p, q, &tcfg)?, &data, &tcfg)?;
            log.train_rows = data.len();
            log.epoch_loss = Some(losses);
            ModelKind::Multi(MultiOutputModel::new(net)?)
        }
    };
    Ok((TrainedModel::new(strategy, Some(norm), q, kind)?, log))
}

pub fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let model = TrainedModel::load(&a.model)?;
    let config_path = a.config.clone().or_else(|| {
        let p = beside(&a.model, "config");
        p.exists().then_some(p)
    });
    let cfg = match &config_path {
        Some(p) => Some(RunConfig::load(p)?),
        None => None,
    };
    if let Some(c) = &cfg {
        if c.data.q != model.horizon {
            return Err(Error::config(format!(
                "model horizon H = {} disagrees with data.q = {} in the run configuration",
                model.horizon, c.data.q
            )));
        }
        if c.data.p != model.p() {
            return Err(Error::config(format!(
                "model history length p = {} disagrees with data.p = {} in the run configuration",
                model.p(),
                c.data.p
            )));
        }
    }
    let data_cfg = cfg.as_ref().map(|c| c.data.clone()).unwrap_or_default();
    let series = load_series(&a.data, &data_cfg)?;
    let segment = if a.segment == Segment::All {
        series
    } else {
        let split = match data_cfg.split {
            Some(s) => s,
            None if cfg.is_some() => default_split(&series)?,
            None => {
                return Err(Error::config(format!(
                    "segment `{:?}` needs the run configuration; pass --config or use --segment all",
                    a.segment
                )
                .to_lowercase()))
            }
        };
        let (train, val, test) = split_by_date(&series, &split)?;
        match a.segment {
            Segment::Train => train,
            Segment::Val => val,
            _ => test,
        }
    };
    let values = match &model.normalization {
        Some(n) => n.apply(segment.values()),
        None => segment.values().to_vec(),
    };
    let windows = make_windows(&values, model.p(), model.horizon, 1)?;
    let denormalize = a.denormalize || cfg.as_ref().is_some_and(|c| c.eval.denormalize);
    let norm = if denormalize {
        Some(
            model
                .normalization
                .ok_or_else(|| Error::config("model has no normalization to undo"))?,
        )
    } else {
        None
    };
    let tag = a.tag.clone().unwrap_or_else(|| model.strategy.tag().to_string());
    let report = evaluate(&tag, &model, &windows, norm.as_ref())?;
    write_json(&a.report, &report)?;
    if let Some(curves) = &a.curves {
        export_step_curves(std::slice::from_ref(&report), curves)?;
    }
    println!(
        "{tag}: mse {:.6} mae {:.6} over {} windows",
        report.overall_mse, report.overall_mae, report.num_samples
    );
    Ok(())
}

pub fn cmd_compare(a: &CompareArgs) -> Result<()> {
    let reports = a
        .reports
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str::<MetricsReport>(&text)
                .map_err(|e| Error::config(format!("{}: {e}", p.display())))
        })
        .collect::<Result<Vec<_>>>()?;
    let table = build_comparison(&reports, &a.baseline)?;
    write_json(&a.out, &table)?;
    let text = table.render_text();
    let txt = a.out.with_extension("txt");
    fs::write(&txt, &text).map_err(|e| Error::io(&txt, e))?;
    if let Some(curves) = &a.curves {
        export_step_curves(&reports, curves)?;
    }
    print!("{text}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_reference_setup() {
        let cfg = RunConfig::default().resolve().unwrap();
        assert_eq!(cfg.model.hidden_layers, 2);
        assert_eq!(cfg.model.hidden_units, 150);
        assert_eq!(cfg.model.dropout, 0.1);
        assert_eq!(cfg.data.q, 8);
        assert!(cfg.dad.is_none() && cfg.cgan.is_none() && cfg.noise.is_none());
    }

    #[test]
    fn unknown_keys_are_named() {
        let e = RunConfig::from_json(r#"{"model": {"hiden_units": 3}}"#, Path::new("c.json"))
            .unwrap_err();
        assert!(e.is_usage());
        assert!(e.to_string().contains("hiden_units"), "{e}");
    }

    #[test]
    fn sections_follow_the_strategy() {
        let mut cfg = RunConfig::default();
        cfg.model.strategy = Strategy::Cdad;
        let r = cfg.clone().resolve().unwrap();
        assert_eq!(r.dad, Some(DadSection::default()));
        assert!(r.dad_config().conditional);

        cfg.model.strategy = Strategy::Multi;
        cfg.dad = Some(DadSection::default());
        let e = cfg.resolve().unwrap_err();
        assert!(e.to_string().contains("`dad`"), "{e}");

        let mut cfg = RunConfig::default();
        cfg.model.strategy = Strategy::MultiCgan;
        cfg.seed = 42;
        let r = cfg.resolve().unwrap();
        assert_eq!(r.cgan.as_ref().unwrap().training.seed, 42);
    }

    #[test]
    fn multi_output_rejects_single_step() {
        let mut cfg = RunConfig::default();
        cfg.model.strategy = Strategy::Multi;
        cfg.data.q = 1;
        assert!(cfg.resolve().unwrap_err().is_usage());
    }

    #[test]
    fn beside_paths() {
        assert_eq!(beside(Path::new("out/model.json"), "log"), PathBuf::from("out/model.log.json"));
        assert_eq!(sidecar_path(Path::new("s.csv")), PathBuf::from("s.json"));
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["multistep", "ingest", "--output", "x.csv"]), 2);
        assert_eq!(run(["multistep", "bogus"]), 2);
        assert_eq!(run(["multistep", "--help"]), 0);
    }
}
