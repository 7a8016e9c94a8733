use crate::data::WindowedDataset;
use crate::error::{Error, Result};
use crate::nn::{fit, Mlp, NetSpec, TrainConfig};

use super::Forecaster;

/// Single network emitting all `q` future values at once.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiOutputModel {
    net: Mlp,
}

impl MultiOutputModel {
    pub fn new(net: Mlp) -> Result<Self> {
        if net.output_dim() < 2 {
            return Err(Error::config(
                "multi-output model needs q >= 2; use the recursive or direct strategy for one step",
            ));
        }
        Ok(Self { net })
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn p(&self) -> usize {
        self.net.input_dim()
    }

    pub fn q(&self) -> usize {
        self.net.output_dim()
    }

    pub fn predict_multi_output(&self, history: &[f64]) -> Result<Vec<f64>> {
        self.net.predict(history)
    }
}

impl Forecaster for MultiOutputModel {
    fn history_len(&self) -> usize {
        self.p()
    }

    fn forecast(&self, history: &[f64], horizon: usize) -> Result<Vec<f64>> {
        if horizon != self.q() {
            return Err(Error::config(format!(
                "multi-output model predicts {} steps, {horizon} requested",
                self.q()
            )));
        }
        self.predict_multi_output(history)
    }
}

pub fn train_multi_output(
    data: &WindowedDataset,
    spec: &NetSpec,
    cfg: &TrainConfig,
) -> Result<MultiOutputModel> {
    if data.q() < 2 {
        return Err(Error::config(
            "multi-output training needs q >= 2; use the recursive or direct strategy for one step",
        ));
    }
    let net = spec.regressor(data.p(), data.q(), cfg)?;
    let (net, _) = fit(net, data, cfg)?;
    MultiOutputModel::new(net)
}
