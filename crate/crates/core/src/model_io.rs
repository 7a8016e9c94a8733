//! Versioned JSON model files.
//!
//! A single network is stored as one document holding its layers and the
//! metadata needed to use it (strategy, window sizes, normalization). Direct
//! and hybrid model sets are stored as a JSON array of such documents, one
//! per horizon step. Floats are written in shortest round-trip form and
//! parsed exactly, so a load reproduces every weight bit for bit.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cgan::{CganConfig, CganPair, GanEpochLog};
use crate::data::Normalizer;
use crate::error::{Error, Result};
use crate::nn::{DenseLayer, Mlp};
use crate::strategies::{
    DirectModelSet, Forecaster, MultiOutputModel, RecursiveModel, Strategy,
};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelMetadata {
    pub strategy_tag: Strategy,
    pub normalization: Option<Normalizer>,
    pub p: usize,
    pub q: usize,
    pub time_step_augmented: bool,
    /// Rollout depth the step index is scaled by (time-step augmented only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<usize>,
    /// 1-based horizon step (direct and hybrid members only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hybrid: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MlpDocument {
    pub format_version: u32,
    pub input_dim: usize,
    pub output_dim: usize,
    pub dropout_rate: f64,
    pub layers: Vec<DenseLayer>,
    pub metadata: ModelMetadata,
}

impl MlpDocument {
    pub fn new(net: &Mlp, metadata: ModelMetadata) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            input_dim: net.input_dim(),
            output_dim: net.output_dim(),
            dropout_rate: net.dropout_rate(),
            layers: net.to_layers(),
            metadata,
        }
    }

    pub fn to_mlp(&self) -> Result<Mlp> {
        check_version(self.format_version)?;
        let net = Mlp::from_layers(self.layers.clone(), self.dropout_rate)?;
        if net.input_dim() != self.input_dim || net.output_dim() != self.output_dim {
            return Err(Error::shape(format!(
                "document declares {} -> {} but its layers give {} -> {}",
                self.input_dim,
                self.output_dim,
                net.input_dim(),
                net.output_dim()
            )));
        }
        Ok(net)
    }
}

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(Error::config(format!(
            "unsupported model format version {v} (this build reads {FORMAT_VERSION})"
        )));
    }
    Ok(())
}

/// A trained model of any strategy.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelKind {
    Recursive(RecursiveModel),
    Direct(DirectModelSet),
    Multi(MultiOutputModel),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedModel {
    pub strategy: Strategy,
    pub normalization: Option<Normalizer>,
    /// Forecast horizon the model was trained for.
    pub horizon: usize,
    pub model: ModelKind,
}

impl TrainedModel {
    pub fn new(
        strategy: Strategy,
        normalization: Option<Normalizer>,
        horizon: usize,
        model: ModelKind,
    ) -> Result<Self> {
        let family_ok = match &model {
            ModelKind::Recursive(_) => strategy.is_recursive(),
            ModelKind::Direct(d) => {
                strategy.is_direct() && d.is_hybrid() == (strategy == Strategy::Hybrid)
            }
            ModelKind::Multi(_) => strategy.is_multi_output(),
        };
        if !family_ok {
            return Err(Error::config(format!(
                "strategy `{strategy}` does not match the model kind"
            )));
        }
        let native = match &model {
            ModelKind::Recursive(_) => None,
            ModelKind::Direct(d) => Some(d.horizon()),
            ModelKind::Multi(m) => Some(m.q()),
        };
        if let Some(n) = native.filter(|&n| n != horizon) {
            return Err(Error::config(format!(
                "model predicts {n} steps but horizon {horizon} was given"
            )));
        }
        if horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        Ok(Self {
            strategy,
            normalization,
            horizon,
            model,
        })
    }

    pub fn p(&self) -> usize {
        match &self.model {
            ModelKind::Recursive(m) => m.p(),
            ModelKind::Direct(m) => m.p(),
            ModelKind::Multi(m) => m.p(),
        }
    }

    fn metadata(&self) -> ModelMetadata {
        let (time_step_augmented, max_step) = match &self.model {
            ModelKind::Recursive(m) => (m.is_time_step_augmented(), m.max_step()),
            _ => (false, None),
        };
        ModelMetadata {
            strategy_tag: self.strategy,
            normalization: self.normalization,
            p: self.p(),
            q: self.horizon,
            time_step_augmented,
            max_step,
            h: None,
            hybrid: None,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let meta = self.metadata();
        Ok(match &self.model {
            ModelKind::Recursive(m) => serde_json::to_string(&MlpDocument::new(m.net(), meta))?,
            ModelKind::Multi(m) => serde_json::to_string(&MlpDocument::new(m.net(), meta))?,
            ModelKind::Direct(set) => {
                let docs: Vec<MlpDocument> = set
                    .models()
                    .iter()
                    .enumerate()
                    .map(|(k, net)| {
                        MlpDocument::new(
                            net,
                            ModelMetadata {
                                h: Some(k + 1),
                                hybrid: Some(set.is_hybrid()),
                                ..meta.clone()
                            },
                        )
                    })
                    .collect();
                serde_json::to_string(&docs)?
            }
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        if value.is_array() {
            let docs: Vec<MlpDocument> = serde_json::from_value(value)?;
            return Self::from_direct_docs(&docs);
        }
        let doc: MlpDocument = serde_json::from_value(value)?;
        let net = doc.to_mlp()?;
        let meta = &doc.metadata;
        let model = if meta.strategy_tag.is_recursive() {
            let m = match (meta.time_step_augmented, meta.max_step) {
                (false, _) => RecursiveModel::new(net, meta.p)?,
                (true, Some(n)) => RecursiveModel::augmented(net, meta.p, n)?,
                (true, None) => {
                    return Err(Error::config("time-step augmented model without max_step"))
                }
            };
            ModelKind::Recursive(m)
        } else if meta.strategy_tag.is_multi_output() {
            let m = MultiOutputModel::new(net)?;
            if m.p() != meta.p {
                return Err(Error::shape(format!("metadata p = {} but network takes {}", meta.p, m.p())));
            }
            ModelKind::Multi(m)
        } else {
            return Err(Error::config(format!(
                "strategy `{}` is stored as an array of per-step documents",
                meta.strategy_tag
            )));
        };
        Self::new(meta.strategy_tag, meta.normalization, meta.q, model)
    }

    fn from_direct_docs(docs: &[MlpDocument]) -> Result<Self> {
        let first = docs
            .first()
            .ok_or_else(|| Error::config("empty model array"))?;
        let meta = &first.metadata;
        let mut nets = Vec::with_capacity(docs.len());
        for (k, doc) in docs.iter().enumerate() {
            let m = &doc.metadata;
            if m.h != Some(k + 1) {
                return Err(Error::config(format!(
                    "model array entry {} has h = {:?}, expected {}",
                    k,
                    m.h,
                    k + 1
                )));
            }
            if m.strategy_tag != meta.strategy_tag || m.hybrid != meta.hybrid || m.p != meta.p {
                return Err(Error::config("model array entries disagree on their metadata"));
            }
            nets.push(doc.to_mlp()?);
        }
        let hybrid = meta.hybrid.unwrap_or(false);
        let set = DirectModelSet::new(nets, meta.p, hybrid)?;
        Self::new(meta.strategy_tag, meta.normalization, meta.q, ModelKind::Direct(set))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

impl Forecaster for TrainedModel {
    fn history_len(&self) -> usize {
        self.p()
    }

    fn forecast(&self, history: &[f64], horizon: usize) -> Result<Vec<f64>> {
        match &self.model {
            ModelKind::Recursive(m) => m.forecast(history, horizon),
            ModelKind::Direct(m) => m.forecast(history, horizon),
            ModelKind::Multi(m) => m.forecast(history, horizon),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CganDocument {
    pub format_version: u32,
    pub generator: MlpDocument,
    pub discriminator: MlpDocument,
    pub config: CganConfig,
    pub training_log: Vec<GanEpochLog>,
}

impl CganDocument {
    pub fn new(pair: &CganPair, config: &CganConfig, normalization: Option<Normalizer>) -> Self {
        let meta = ModelMetadata {
            strategy_tag: Strategy::MultiCgan,
            normalization,
            p: pair.p,
            q: pair.q,
            time_step_augmented: false,
            max_step: None,
            h: None,
            hybrid: None,
        };
        Self {
            format_version: FORMAT_VERSION,
            generator: MlpDocument::new(&pair.generator, meta.clone()),
            discriminator: MlpDocument::new(&pair.discriminator, meta),
            config: config.clone(),
            training_log: pair.training_log.clone(),
        }
    }

    pub fn to_pair(&self) -> Result<CganPair> {
        check_version(self.format_version)?;
        let generator = self.generator.to_mlp()?;
        let discriminator = self.discriminator.to_mlp()?;
        let (p, q) = (self.generator.metadata.p, self.generator.metadata.q);
        let noise_dim = self.config.noise_dim;
        if generator.input_dim() != noise_dim + q
            || generator.output_dim() != p
            || discriminator.input_dim() != p + q
            || discriminator.output_dim() != 1
        {
            return Err(Error::shape(
                "generator/discriminator dimensions disagree with p, q and noise_dim",
            ));
        }
        Ok(CganPair {
            generator,
            discriminator,
            p,
            q,
            noise_dim,
            training_log: self.training_log.clone(),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, serde_json::to_string(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
