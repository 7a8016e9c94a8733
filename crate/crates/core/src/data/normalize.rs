use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Min-max scaling to `[0, 1]`. Values outside the fitted range map
/// outside `[0, 1]` and are not clamped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub min: f64,
    pub max: f64,
}

impl Normalizer {
    pub fn fit(values: &[f64]) -> Result<Self> {
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if !(min.is_finite() && max.is_finite()) || max <= min {
            return Err(Error::Domain(
                "normalizer needs at least two distinct finite values".into(),
            ));
        }
        Ok(Self { min, max })
    }

    #[inline]
    pub fn apply_one(&self, v: f64) -> f64 {
        (v - self.min) / (self.max - self.min)
    }

    #[inline]
    pub fn invert_one(&self, v: f64) -> f64 {
        v * (self.max - self.min) + self.min
    }

    pub fn apply(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.apply_one(v)).collect()
    }

    pub fn invert(&self, values: &[f64]) -> Vec<f64> {
        values.iter().map(|&v| self.invert_one(v)).collect()
    }
}
