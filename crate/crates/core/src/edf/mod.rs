//! EDF/EDF+ ingestion: headers, signals, hypnograms, epochs and splits.

mod epochs;
mod header;
mod hypnogram;
mod ingest;
mod signal;
mod split;

pub use epochs::{map_label, segment_epochs, Epoch, LabelScheme, RecordingMeta, SchemeMode, Subset};
pub use header::{parse_edf_header, EdfHeader, SignalSpec};
pub use hypnogram::{encode_tal_record, parse_hypnogram, to_tsv, HypnogramAnnotation, SleepStage};
pub use ingest::{
    class_count_table, discover_recordings, ingest_recording, ingest_recordings, locate_recordings, IngestError,
    RecordingFiles,
};
pub use signal::{encode_records, read_signal, read_signal_with_rate};
pub use split::{build_split, SplitManifest, Task};

use thiserror::Error;

/// Channel used throughout the toolkit.
pub const DEFAULT_CHANNEL: &str = "EEG Fpz-Cz";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EdfError {
    #[error("truncated header: need {needed} bytes, have {available}")]
    TruncatedHeader { needed: usize, available: usize },
    #[error("malformed field `{field}`: {detail}")]
    MalformedField { field: String, detail: String },
    #[error("value for field `{field}` does not fit in {width} bytes: {value}")]
    FieldOverflow {
        field: String,
        width: usize,
        value: String,
    },
    #[error("channel `{0}` not found")]
    ChannelNotFound(String),
    #[error("channel `{0}` matches more than one signal")]
    AmbiguousChannel(String),
    #[error("truncated data records: expected {expected} bytes of data, found {found}")]
    TruncatedRecords { expected: usize, found: usize },
    #[error("unknown stage string `{0}`")]
    UnknownStageString(String),
    #[error("overlapping annotations at onset {onset_s} s")]
    OverlappingAnnotations { onset_s: f64 },
    #[error("annotation [{onset_s}, {end_s}) s extends past the signal end at {signal_end_s} s")]
    EpochOutOfBounds {
        onset_s: f64,
        end_s: f64,
        signal_end_s: f64,
    },
    #[error("unsupported sampling rate {0} Hz (only 100 Hz is accepted)")]
    UnsupportedSamplingRate(f64),
    #[error("recording `{0}` is named in the manifest but has no epochs")]
    UnknownRecordingId(String),
    #[error("subject `{0}` appears on both sides of the split")]
    SubjectLeakage(String),
    #[error("invalid manifest: {0}")]
    InvalidManifest(String),
}

pub type Result<T> = std::result::Result<T, EdfError>;

pub(crate) fn malformed(field: &str, detail: impl Into<String>) -> EdfError {
    EdfError::MalformedField {
        field: field.to_string(),
        detail: detail.into(),
    }
}
