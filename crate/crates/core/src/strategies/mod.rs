//! Multi-step prediction strategies: recursive, direct, hybrid and
//! multi-output.

mod direct;
mod multi;
mod recursive;

use std::path::Path;

pub use direct::{train_direct, DirectModelSet};
pub use multi::{train_multi_output, MultiOutputModel};
pub use recursive::RecursiveModel;

use crate::error::{Error, Result};

/// Anything that maps a history window to an `horizon`-step forecast.
pub trait Forecaster {
    fn history_len(&self) -> usize;
    fn forecast(&self, history: &[f64], horizon: usize) -> Result<Vec<f64>>;
}

impl<F: Forecaster + ?Sized> Forecaster for &F {
    fn history_len(&self) -> usize {
        (**self).history_len()
    }
    fn forecast(&self, history: &[f64], horizon: usize) -> Result<Vec<f64>> {
        (**self).forecast(history, horizon)
    }
}

/// Recursive rollout `x̂¹ … x̂ᴺ` started at window `start_index`.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionTrajectory {
    pub start_index: usize,
    pub values: Vec<f64>,
}

impl PredictionTrajectory {
    pub fn new(start_index: usize, values: Vec<f64>) -> Self {
        Self {
            start_index,
            values,
        }
    }

    pub fn with_start(mut self, start_index: usize) -> Self {
        self.start_index = start_index;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `1..=N`.
    pub fn step_indices(&self) -> std::ops::RangeInclusive<usize> {
        1..=self.values.len()
    }
}

/// Writes trajectories as `start_index,step,value` rows.
pub fn write_trajectories_csv(
    path: impl AsRef<Path>,
    trajectories: &[PredictionTrajectory],
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["start_index", "step", "value"])?;
    for t in trajectories {
        for (step, v) in t.step_indices().zip(&t.values) {
            w.write_record([t.start_index.to_string(), step.to_string(), v.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// The strategy variants a trained model can come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Recursive,
    Dad,
    Cdad,
    Direct,
    Hybrid,
    Multi,
    MultiNoise,
    MultiCgan,
}

impl Strategy {
    pub const ALL: [Strategy; 8] = [
        Strategy::Recursive,
        Strategy::Dad,
        Strategy::Cdad,
        Strategy::Direct,
        Strategy::Hybrid,
        Strategy::Multi,
        Strategy::MultiNoise,
        Strategy::MultiCgan,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Strategy::Recursive => "recursive",
            Strategy::Dad => "dad",
            Strategy::Cdad => "cdad",
            Strategy::Direct => "direct",
            Strategy::Hybrid => "hybrid",
            Strategy::Multi => "multi",
            Strategy::MultiNoise => "multi-noise",
            Strategy::MultiCgan => "multi-cgan",
        }
    }

    pub fn is_recursive(self) -> bool {
        matches!(self, Strategy::Recursive | Strategy::Dad | Strategy::Cdad)
    }

    pub fn is_direct(self) -> bool {
        matches!(self, Strategy::Direct | Strategy::Hybrid)
    }

    pub fn is_multi_output(self) -> bool {
        matches!(self, Strategy::Multi | Strategy::MultiNoise | Strategy::MultiCgan)
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|k| k.tag() == s)
            .ok_or_else(|| {
                let known: Vec<_> = Strategy::ALL.iter().map(|k| k.tag()).collect();
                Error::config(format!("unknown strategy `{s}` (expected one of {})", known.join(", ")))
            })
    }
}
