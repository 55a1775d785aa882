//! The 34-layer residual ConvNet.
//!
//! The network is not hand-wired: [`ArchitectureSpec`] holds the layer
//! table (names, kinds, shapes, parameter counts, input wiring) shipped in
//! `data/resnet34_architecture.csv`, and [`Model`] interprets it. Shapes and
//! parameter counts are derived from the wiring and checked against the
//! table when the model is built.

mod checkpoint;
mod model;
mod spec;

pub use checkpoint::{load_checkpoint, load_checkpoint_with_spec, save_checkpoint, CheckpointMeta, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use model::{build_model, param_report, Layer, Model, NamedTensor, Tape};
pub use spec::{ArchitectureSpec, LayerKind, LayerSpec, ARCHITECTURE_CSV};

use thiserror::Error;

use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum ResnetError {
    #[error("expected {expected} input samples, got {found}")]
    BadInputWidth { expected: usize, found: usize },
    #[error("unsupported class count {0} (expected 5 or 6)")]
    UnsupportedClassCount(usize),
    #[error("invalid architecture table: {0}")]
    InvalidSpec(String),
    #[error("checkpoint was written for a different architecture")]
    FingerprintMismatch,
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Nn(#[from] NnError),
}

pub type Result<T> = std::result::Result<T, ResnetError>;
