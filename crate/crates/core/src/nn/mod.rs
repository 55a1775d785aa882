//! Differentiable 1D layer kernels.
//!
//! Activations are `width x channels` row-major [`Tensor`]s in `f64`.
//! Every forward op has an exact backward counterpart; batch-level
//! reductions (weight gradients, normalisation statistics) run over the
//! batch in a fixed example order.

pub(crate) mod activation;
mod adam;
mod conv;
pub(crate) mod dense;
mod loss;
pub(crate) mod norm;
mod pool;
mod tensor;

pub use activation::{dropout, dropout_backward, relu, relu_backward, relu_mask};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use conv::{conv1d_backward, conv1d_forward, ConvGrads, ConvParams};
pub use dense::{dense_backward, dense_forward, DenseGrads, DenseParams};
pub use loss::{softmax, weighted_softmax_ce, ClassWeights};
pub use norm::{
    batchnorm_backward, batchnorm_forward, scale_backward, scale_forward, NormCache, NormState,
    ScaleGrads, ScaleParams,
};
pub use pool::{maxpool_backward, maxpool_forward};
pub use tensor::{residual_add, Tensor};

pub(crate) use conv::{conv_forward_batch, conv_input_grad_batch, conv_weight_grads_batch};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("channel mismatch: expected {expected}, found {found}")]
    ChannelMismatch { expected: usize, found: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("width {0} is too small to pool")]
    WidthTooSmall(usize),
    #[error("batch of {0} is too small for batch statistics (need at least 2)")]
    BatchTooSmall(usize),
    #[error("non-finite logit at index {0}")]
    NonFiniteLogit(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, NnError>;

/// He-style fan-in scaled normal initialisation.
pub fn he_normal<R: Rng + ?Sized>(fan_in: usize, len: usize, rng: &mut R) -> Vec<f64> {
    let std = (2.0 / fan_in as f64).sqrt();
    let normal = Normal::new(0.0, std).expect("positive std");
    (0..len).map(|_| normal.sample(rng)).collect()
}
