//! Band-filter features and a balanced bagging ensemble of decision trees,
//! the classical comparison system.

mod features;
mod filter;
mod tree;

pub use features::{
    energy_sis, extract_all, extract_features, mmd, write_features_csv, FeatureVector, FilterBank, MMD_WINDOW,
    NUM_FEATURES,
};
pub use filter::{design_bandpass, filter_signal, BandName, BandSpec, Biquad, BiquadChain};
pub use tree::{
    balanced_bagging_train, best_split, draw_bag, train_tree, vote, BagDescriptor, BaggingEnsemble, DecisionTree, Node,
    Split, TreeParams, ENSEMBLE_SIZE,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("invalid band: {0}")]
    InvalidBand(String),
    #[error("unstable filter design: {0}")]
    UnstableDesign(String),
    #[error("window of {window} samples does not divide a signal of {len}")]
    InvalidWindow { len: usize, window: usize },
    #[error("feature {0} is not finite")]
    NonFiniteFeature(usize),
    #[error("rows with identical features carry different labels")]
    DegenerateData,
    #[error("class {0} has no rows")]
    EmptyClass(usize),
    #[error("need at least one labelled row, got {0}")]
    TooFewRows(usize),
    #[error("expected {expected} features, got {found}")]
    FeatureLength { expected: usize, found: usize },
    #[error("label {0} is out of range")]
    LabelOutOfRange(usize),
    #[error("ensemble JSON: {0}")]
    Json(String),
    #[error("feature CSV: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, BaselineError>;
