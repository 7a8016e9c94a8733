//! Minimal dense neural-network core: forward pass, backprop, dropout,
//! MSE loss and Adam.

mod adam;
mod loss;
mod mlp;
mod train;

pub use adam::AdamState;
pub use loss::mse_loss;
pub use mlp::{Activation, DenseLayer, ForwardCache, Gradients, LayerView, Mlp, Mode};
pub use train::{derive_seed, fit, NetSpec, Samples, TrainConfig, TrainingData};
