//! Multi-step time-series forecasting.
//!
//! Recursive, direct, hybrid and multi-output strategies built on a small
//! dense network core, plus two ways to fight multi-step error growth:
//! time-step conditioned DaD retraining for recursive models and
//! conditional-GAN data augmentation for multi-output models.

pub mod bench;
pub mod cgan;
pub mod dad;
pub mod data;
pub mod error;
pub mod cli;
pub mod eval;
pub mod model_io;
pub mod nn;
pub mod strategies;

pub use error::{Error, Result};
