use serde::{Deserialize, Serialize};

use super::{malformed, EdfError, HypnogramAnnotation, Result, SleepStage};
use crate::{EPOCH_SAMPLES, EPOCH_SECONDS, SAMPLING_RATE_HZ};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SchemeMode {
    #[serde(rename = "SIX_STAGE")]
    SixStage,
    #[serde(rename = "FIVE_STAGE")]
    FiveStage,
}

/// Stage-to-class mapping.
///
/// Class order follows the dataset tables: S1, S2, S3, (S4,) REM, W. In the
/// five-stage scheme S3 and S4 share the deep-sleep class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelScheme {
    pub mode: SchemeMode,
}

impl LabelScheme {
    pub const SIX_STAGE: LabelScheme = LabelScheme {
        mode: SchemeMode::SixStage,
    };
    pub const FIVE_STAGE: LabelScheme = LabelScheme {
        mode: SchemeMode::FiveStage,
    };

    /// Scheme with the given number of classes (5 or 6).
    pub fn with_classes(n: usize) -> Option<LabelScheme> {
        match n {
            5 => Some(Self::FIVE_STAGE),
            6 => Some(Self::SIX_STAGE),
            _ => None,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.class_names().len()
    }

    pub fn class_names(&self) -> &'static [&'static str] {
        match self.mode {
            SchemeMode::SixStage => &["S1", "S2", "S3", "S4", "REM", "W"],
            SchemeMode::FiveStage => &["S1", "S2", "S3", "REM", "W"],
        }
    }

    /// Class index for `stage`, or `None` when the stage is dropped.
    pub fn class_of(&self, stage: SleepStage) -> Option<usize> {
        let six = self.mode == SchemeMode::SixStage;
        match stage {
            SleepStage::S1 => Some(0),
            SleepStage::S2 => Some(1),
            SleepStage::S3 => Some(2),
            SleepStage::S4 => Some(if six { 3 } else { 2 }),
            SleepStage::Rem => Some(if six { 4 } else { 3 }),
            SleepStage::W => Some(if six { 5 } else { 4 }),
            SleepStage::Movement | SleepStage::Unscored => None,
        }
    }
}

/// Maps a scored stage to a class index; `None` means DROP.
pub fn map_label(stage: SleepStage, scheme: LabelScheme) -> Option<usize> {
    scheme.class_of(stage)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Subset {
    SC,
    ST,
}

impl Subset {
    pub fn as_str(self) -> &'static str {
        match self {
            Subset::SC => "SC",
            Subset::ST => "ST",
        }
    }
}

/// Identity of one recording.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RecordingMeta {
    pub recording_id: String,
    pub subject_id: String,
    pub subset: Subset,
}

impl RecordingMeta {
    /// Derives identity from a Sleep-EDF file name.
    ///
    /// `SC4ssN...` is cassette subject `ss`, night `N`; `ST7ssN...` is
    /// telemetry subject `ss`. The recording id is the six-character stem
    /// shared by the PSG and hypnogram files.
    pub fn from_sleep_edf_name(name: &str) -> Result<RecordingMeta> {
        let stem = name.get(..6).filter(|s| s.is_ascii()).ok_or_else(|| {
            malformed("recording_name", format!("{name:?} is not a Sleep-EDF name"))
        })?;
        let subset = match &stem[..3] {
            "SC4" => Subset::SC,
            "ST7" => Subset::ST,
            _ => {
                return Err(malformed(
                    "recording_name",
                    format!("{name:?} does not start with SC4 or ST7"),
                ))
            }
        };
        let digits = &stem[3..6];
        if !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(malformed("recording_name", format!("{name:?}")));
        }
        Ok(RecordingMeta {
            recording_id: stem.to_string(),
            subject_id: format!("{}{}", subset.as_str(), &digits[..2]),
            subset,
        })
    }
}

/// One labelled 30 s example.
///
/// Samples are stored in single precision; the network promotes them to
/// `f64` on entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    pub samples: Vec<f32>,
    pub label: usize,
    pub recording_id: String,
    pub subject_id: String,
    pub subset: Subset,
    /// Index of the 30 s interval from the start of the recording.
    pub position_index: usize,
}

/// Cuts labelled 30 s epochs out of a 100 Hz signal.
///
/// Annotations whose stage is dropped by `scheme` produce nothing and are
/// not bounds-checked; kept annotations must lie inside the signal.
pub fn segment_epochs(
    signal: &[f64],
    sampling_rate_hz: f64,
    hypnogram: &[HypnogramAnnotation],
    scheme: LabelScheme,
    meta: &RecordingMeta,
) -> Result<Vec<Epoch>> {
    if (sampling_rate_hz - SAMPLING_RATE_HZ).abs() > 1e-9 {
        return Err(EdfError::UnsupportedSamplingRate(sampling_rate_hz));
    }
    let signal_end_s = signal.len() as f64 / SAMPLING_RATE_HZ;
    let mut epochs = Vec::new();
    for a in hypnogram {
        let Some(label) = scheme.class_of(a.stage) else {
            continue;
        };
        if a.end_s() > signal_end_s + 1e-6 {
            return Err(EdfError::EpochOutOfBounds {
                onset_s: a.onset_s,
                end_s: a.end_s(),
                signal_end_s,
            });
        }
        let first = (a.onset_s * SAMPLING_RATE_HZ).round() as usize;
        let first_interval = (a.onset_s / EPOCH_SECONDS).round() as usize;
        for j in 0..a.intervals() {
            let start = first + j * EPOCH_SAMPLES;
            epochs.push(Epoch {
                samples: signal[start..start + EPOCH_SAMPLES]
                    .iter()
                    .map(|&v| v as f32)
                    .collect(),
                label,
                recording_id: meta.recording_id.clone(),
                subject_id: meta.subject_id.clone(),
                subset: meta.subset,
                position_index: first_interval + j,
            });
        }
    }
    Ok(epochs)
}
