//! Small dense-tensor kernel: conv / max-pool / rectifier / affine / softmax
//! layers, backpropagation, plain SGD and finite-difference gradient checks.
//!
//! Everything is `f64` and single-threaded; results are a pure function of
//! parameters and inputs.

mod gradcheck;
mod layer;
pub mod loss;
mod network;
pub mod persist;
mod tensor;

pub use gradcheck::{grad_check, LossFn, DEFAULT_EPSILON};
pub use layer::{LayerSpec, Params};
pub use network::{Activations, Gradients, Layer, Network};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("configuration error at layer {layer}: {message}")]
    Config { layer: usize, message: String },
    #[error("shape error: {0}")]
    Shape(String),
    #[error("internal consistency error: {0}")]
    Consistency(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("model format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[cfg(test)]
mod tests;
