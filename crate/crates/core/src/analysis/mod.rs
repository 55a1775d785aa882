//! Evaluation metrics, band feature statistics and report files.

mod features;
mod metrics;
mod report;
mod spectral;
mod stats;

use thiserror::Error;

pub use features::{band_features, compare_subsets, AnovaRow, BandFeature, SubsetComparison};
pub use metrics::{
    confusion, group_by_recording, metrics, metrics_from, ConfusionMatrix, MetricsReport, RecordingAccuracy, RecordingPredictions,
};
pub use report::{
    anova_csv, anova_summary, confusion_csv, emit_report, format_p, kde_svg, metrics_csv, per_recording_csv,
    per_recording_svg, summary_csv, ReportInputs, P_FLOOR, SUMMARY_METRICS,
};
pub use spectral::{hann, power_spectrum, spectral_rolloff, spectral_spread, Spectrum};
pub use stats::{
    f_survival, kde, kde_on, ln_gamma, min_max_scale, one_way_anova, regularized_beta, silverman_bandwidth,
    AnovaResult, Bandwidth, Grid, KdeCurve,
};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("{preds} predictions for {labels} labels")]
    LengthMismatch { preds: usize, labels: usize },
    #[error("class index {0} out of range")]
    ClassOutOfRange(usize),
    #[error("nothing to report")]
    EmptyMetrics,
    #[error("signal has no energy")]
    ZeroSignal,
    #[error("group {group} has {size} samples, need at least 2")]
    GroupTooSmall { group: usize, size: usize },
    #[error("samples have zero variance")]
    DegenerateSamples,
    #[error("store holds only one subset; SC and ST are both required")]
    SingleSubset,
    #[error("baseline feature: {0}")]
    Feature(String),
    #[error("formatting report: {0}")]
    Format(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl From<crate::baseline::BaselineError> for AnalysisError {
    fn from(e: crate::baseline::BaselineError) -> Self {
        AnalysisError::Feature(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, AnalysisError>;
