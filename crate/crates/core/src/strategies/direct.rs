use crate::data::WindowedDataset;
use crate::error::{Error, Result};
use crate::nn::{derive_seed, fit, Mlp, NetSpec, Samples, TrainConfig};

use super::Forecaster;

/// One model per horizon step. In hybrid mode the model for step `h` also
/// reads the predictions of the models for steps `1..h`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectModelSet {
    models: Vec<Mlp>,
    p: usize,
    hybrid: bool,
}

impl DirectModelSet {
    pub fn new(models: Vec<Mlp>, p: usize, hybrid: bool) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::config("direct model set needs at least one model"));
        }
        for (k, m) in models.iter().enumerate() {
            let want = if hybrid { p + k } else { p };
            if m.input_dim() != want || m.output_dim() != 1 {
                return Err(Error::shape(format!(
                    "model for step {} must be {want} -> 1, got {} -> {}",
                    k + 1,
                    m.input_dim(),
                    m.output_dim()
                )));
            }
        }
        Ok(Self { models, p, hybrid })
    }

    pub fn models(&self) -> &[Mlp] {
        &self.models
    }

    pub fn horizon(&self) -> usize {
        self.models.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn is_hybrid(&self) -> bool {
        self.hybrid
    }

    pub fn predict_direct(&self, history: &[f64]) -> Result<Vec<f64>> {
        if history.len() != self.p {
            return Err(Error::shape(format!(
                "history length {} != p = {}",
                history.len(),
                self.p
            )));
        }
        if !self.hybrid {
            return self
                .models
                .iter()
                .map(|m| Ok(m.predict(history)?[0]))
                .collect();
        }
        let mut input = history.to_vec();
        let mut out = Vec::with_capacity(self.models.len());
        for m in &self.models {
            let y = m.predict(&input)?[0];
            out.push(y);
            input.push(y);
        }
        Ok(out)
    }
}

impl Forecaster for DirectModelSet {
    fn history_len(&self) -> usize {
        self.p
    }

    fn forecast(&self, history: &[f64], horizon: usize) -> Result<Vec<f64>> {
        if horizon != self.horizon() {
            return Err(Error::config(format!(
                "direct model set predicts {} steps, {horizon} requested",
                self.horizon()
            )));
        }
        self.predict_direct(history)
    }
}

/// Trains `horizon` direct models on `data` (which must have `q == horizon`).
///
/// Model `h` uses seed `derive_seed(cfg.seed, h)`, so in non-hybrid mode each
/// model depends only on its own target column. Hybrid models are trained in
/// ascending order, each on the history extended with the in-sample
/// predictions of the models before it.
pub fn train_direct(
    data: &WindowedDataset,
    horizon: usize,
    hybrid: bool,
    spec: &NetSpec,
    cfg: &TrainConfig,
) -> Result<DirectModelSet> {
    if horizon == 0 {
        return Err(Error::config("horizon must be at least 1"));
    }
    if data.q() != horizon {
        return Err(Error::config(format!(
            "dataset future length q = {} does not match horizon H = {horizon}",
            data.q()
        )));
    }
    if data.is_empty() {
        return Err(Error::config("cannot train on an empty dataset"));
    }
    let p = data.p();
    let mut models = Vec::with_capacity(horizon);
    // In-sample predictions of the models trained so far, one row per sample.
    let mut inputs: Vec<Vec<f64>> = (0..data.len()).map(|i| data.history(i).to_vec()).collect();
    for h in 0..horizon {
        let step_cfg = cfg.with_seed(derive_seed(cfg.seed, h as u64));
        let in_dim = if hybrid { p + h } else { p };
        let mut samples = Samples::new(in_dim, 1);
        for (i, row) in inputs.iter().enumerate() {
            samples.push(row, &[data.future(i)[h]])?;
        }
        let net = spec.regressor(in_dim, 1, &step_cfg)?;
        let (net, _) = fit(net, &samples, &step_cfg)?;
        if hybrid && h + 1 < horizon {
            for row in &mut inputs {
                let y = net.predict(row)?[0];
                row.push(y);
            }
        }
        models.push(net);
    }
    DirectModelSet::new(models, p, hybrid)
}
