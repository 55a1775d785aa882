//! Single-channel EEG sleep staging.
//!
//! The crate is organised around the pipeline it implements:
//!
//! - [`edf`]: EDF/EDF+ parsing, hypnogram decoding, 30 s epoching and
//!   patient-independent train/test splits.
//! - [`nn`]: hand-written 1D layer kernels (convolution, pooling,
//!   normalisation, activations, dense, weighted cross-entropy, Adam).
//! - [`resnet`]: the 34-layer residual ConvNet, driven by a declarative
//!   architecture table, plus checkpoints.
//! - [`train`]: class weighting, rolling-shift augmentation, step LR
//!   schedule and the mini-batch training loop.
//! - [`baseline`]: band-pass filter bank, MMD/EnergySis features and a
//!   balanced bagging ensemble of CART trees.
//! - [`analysis`]: confusion matrices, summary metrics, spectral
//!   features, one-way ANOVA, kernel density curves and report emission.
//! - [`store`]: the binary epoch store used between CLI stages.

pub mod analysis;
pub mod baseline;
pub mod edf;
pub mod nn;
pub mod resnet;
pub mod seed;
pub mod store;
pub mod synthetic;
pub mod train;

/// Sampling rate every ingested channel must have.
pub const SAMPLING_RATE_HZ: f64 = 100.0;

/// Length of one scored epoch, in seconds.
pub const EPOCH_SECONDS: f64 = 30.0;

/// Samples per 30 s epoch at 100 Hz.
pub const EPOCH_SAMPLES: usize = 3000;
