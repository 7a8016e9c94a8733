use crate::error::{Error, Result};
use crate::nn::Mlp;

use super::{Forecaster, PredictionTrajectory};

/// One-step model rolled out by feeding back its own predictions.
///
/// With `max_step = Some(n_max)` the network takes one extra input, the
/// number of predictions already recycled into the window, scaled by
/// `1 / n_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct RecursiveModel {
    net: Mlp,
    p: usize,
    max_step: Option<usize>,
}

impl RecursiveModel {
    pub fn new(net: Mlp, p: usize) -> Result<Self> {
        if net.input_dim() != p || net.output_dim() != 1 {
            return Err(Error::shape(format!(
                "recursive model needs a {p} -> 1 network, got {} -> {}",
                net.input_dim(),
                net.output_dim()
            )));
        }
        Ok(Self {
            net,
            p,
            max_step: None,
        })
    }

    /// Time-step augmented model; `max_step` is the rollout depth the step
    /// index is scaled by.
    pub fn augmented(net: Mlp, p: usize, max_step: usize) -> Result<Self> {
        if net.input_dim() != p + 1 || net.output_dim() != 1 {
            return Err(Error::shape(format!(
                "augmented recursive model needs a {} -> 1 network, got {} -> {}",
                p + 1,
                net.input_dim(),
                net.output_dim()
            )));
        }
        if max_step == 0 {
            return Err(Error::config("max_step must be at least 1"));
        }
        Ok(Self {
            net,
            p,
            max_step: Some(max_step),
        })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn into_net(self) -> Mlp {
        self.net
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn is_time_step_augmented(&self) -> bool {
        self.max_step.is_some()
    }

    pub fn max_step(&self) -> Option<usize> {
        self.max_step
    }

    /// Value fed to the step input after `recycled` predictions.
    pub fn encode_step(&self, recycled: usize) -> Option<f64> {
        self.max_step.map(|m| recycled as f64 / m as f64)
    }

    /// Plain one-step prediction from a window of `p` values.
    pub fn step(&self, window: &[f64]) -> Result<f64> {
        Ok(self.net.predict(window)?[0])
    }

    /// One-step prediction with the step input appended.
    pub fn step_aug(&self, window: &[f64], recycled: usize) -> Result<f64> {
        let tag = self
            .encode_step(recycled)
            .ok_or_else(|| Error::Contract("model is not time-step augmented".into()))?;
        let mut input = Vec::with_capacity(window.len() + 1);
        input.extend_from_slice(window);
        input.push(tag);
        Ok(self.net.predict(&input)?[0])
    }

    /// Rolls a non-augmented model out for `n` steps.
    pub fn predict_recursively(&self, history: &[f64], n: usize) -> Result<PredictionTrajectory> {
        if self.is_time_step_augmented() {
            return Err(Error::Contract(
                "time-step augmented model passed to predict_recursively".into(),
            ));
        }
        self.rollout(history, n)
    }

    /// Rolls an augmented model out for `n` steps; the `k`-th prediction
    /// (1-based) sees step input `k - 1`.
    pub fn predict_recursively_aug(
        &self,
        history: &[f64],
        n: usize,
    ) -> Result<PredictionTrajectory> {
        if !self.is_time_step_augmented() {
            return Err(Error::Contract(
                "predict_recursively_aug needs a time-step augmented model".into(),
            ));
        }
        self.rollout(history, n)
    }

    /// Rollout dispatching on whether the model is augmented.
    pub fn rollout(&self, history: &[f64], n: usize) -> Result<PredictionTrajectory> {
        if history.len() != self.p {
            return Err(Error::shape(format!(
                "history length {} != p = {}",
                history.len(),
                self.p
            )));
        }
        if n == 0 {
            return Err(Error::config("rollout length must be at least 1"));
        }
        let tagged = self.is_time_step_augmented();
        let mut input = Vec::with_capacity(self.p + usize::from(tagged));
        input.extend_from_slice(history);
        if tagged {
            input.push(0.0);
        }
        let mut values = Vec::with_capacity(n);
        for k in 0..n {
            if let Some(tag) = self.encode_step(k) {
                input[self.p] = tag;
            }
            let next = self.net.predict(&input)?[0];
            if !next.is_finite() {
                return Err(Error::Numeric(format!("non-finite prediction at step {}", k + 1)));
            }
            values.push(next);
            input.copy_within(1..self.p, 0);
            input[self.p - 1] = next;
        }
        Ok(PredictionTrajectory::new(0, values))
    }
}

impl Forecaster for RecursiveModel {
    fn history_len(&self) -> usize {
        self.p
    }

    fn forecast(&self, history: &[f64], horizon: usize) -> Result<Vec<f64>> {
        Ok(self.rollout(history, horizon)?.values)
    }
}
