use serde::{Deserialize, Serialize};

use super::header::parse_edf_header;
use super::signal::signal_bytes;
use super::{malformed, EdfError, Result};
use crate::EPOCH_SECONDS;

/// Rechtschaffen & Kales stage as scored in the hypnogram files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SleepStage {
    W,
    S1,
    S2,
    S3,
    S4,
    Rem,
    Movement,
    Unscored,
}

impl SleepStage {
    pub const ALL: [SleepStage; 8] = [
        SleepStage::W,
        SleepStage::S1,
        SleepStage::S2,
        SleepStage::S3,
        SleepStage::S4,
        SleepStage::Rem,
        SleepStage::Movement,
        SleepStage::Unscored,
    ];

    pub fn from_annotation(text: &str) -> Result<SleepStage> {
        Ok(match text.trim() {
            "Sleep stage W" => SleepStage::W,
            "Sleep stage 1" => SleepStage::S1,
            "Sleep stage 2" => SleepStage::S2,
            "Sleep stage 3" => SleepStage::S3,
            "Sleep stage 4" => SleepStage::S4,
            "Sleep stage R" => SleepStage::Rem,
            "Movement time" => SleepStage::Movement,
            "Sleep stage ?" => SleepStage::Unscored,
            other => return Err(EdfError::UnknownStageString(other.to_string())),
        })
    }

    pub fn annotation(self) -> &'static str {
        match self {
            SleepStage::W => "Sleep stage W",
            SleepStage::S1 => "Sleep stage 1",
            SleepStage::S2 => "Sleep stage 2",
            SleepStage::S3 => "Sleep stage 3",
            SleepStage::S4 => "Sleep stage 4",
            SleepStage::Rem => "Sleep stage R",
            SleepStage::Movement => "Movement time",
            SleepStage::Unscored => "Sleep stage ?",
        }
    }

    /// Stages that never become training examples, whatever the scheme.
    pub fn is_unstaged(self) -> bool {
        matches!(self, SleepStage::Movement | SleepStage::Unscored)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypnogramAnnotation {
    pub onset_s: f64,
    pub duration_s: f64,
    pub stage: SleepStage,
}

impl HypnogramAnnotation {
    pub fn end_s(&self) -> f64 {
        self.onset_s + self.duration_s
    }

    /// Number of whole 30 s intervals covered.
    pub fn intervals(&self) -> usize {
        (self.duration_s / EPOCH_SECONDS).round() as usize
    }
}

const TSV_HEADER: &str = "onset_s\tduration_s\tstage";

/// Parses either an EDF+ annotation file or the plain-text TSV form.
///
/// The result is sorted by onset. Scored stages must last a whole number
/// of 30 s intervals; movement and unscored spans are exempt because they
/// never produce epochs.
pub fn parse_hypnogram(bytes: &[u8]) -> Result<Vec<HypnogramAnnotation>> {
    let mut annotations = if bytes.starts_with(b"onset_s") {
        parse_tsv(bytes)?
    } else {
        parse_edf_annotations(bytes)?
    };
    for a in &annotations {
        if !(a.onset_s.is_finite() && a.onset_s >= 0.0) {
            return Err(malformed("onset", format!("{}", a.onset_s)));
        }
        if !(a.duration_s.is_finite() && a.duration_s > 0.0) {
            return Err(malformed("duration", format!("{}", a.duration_s)));
        }
        let multiple = a.duration_s / EPOCH_SECONDS;
        if !a.stage.is_unstaged() && (multiple - multiple.round()).abs() > 1e-6 {
            return Err(malformed(
                "duration",
                format!("{} s at onset {} is not a multiple of 30 s", a.duration_s, a.onset_s),
            ));
        }
    }
    annotations.sort_by(|a, b| a.onset_s.total_cmp(&b.onset_s));
    for pair in annotations.windows(2) {
        if pair[1].onset_s < pair[0].end_s() - 1e-6 {
            return Err(EdfError::OverlappingAnnotations {
                onset_s: pair[1].onset_s,
            });
        }
    }
    Ok(annotations)
}

fn parse_tsv(bytes: &[u8]) -> Result<Vec<HypnogramAnnotation>> {
    let text = std::str::from_utf8(bytes).map_err(|e| malformed("tsv", e.to_string()))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim_end() == TSV_HEADER => {}
        other => return Err(malformed("tsv", format!("bad header row {other:?}"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(malformed("tsv", format!("line {}: expected 3 columns", i + 2)));
        }
        let num = |field: &str, s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| malformed(field, format!("line {}: {s:?}", i + 2)))
        };
        out.push(HypnogramAnnotation {
            onset_s: num("onset_s", cols[0])?,
            duration_s: num("duration_s", cols[1])?,
            stage: SleepStage::from_annotation(cols[2])?,
        });
    }
    Ok(out)
}

/// Writes annotations in the TSV form accepted by [`parse_hypnogram`].
pub fn to_tsv(annotations: &[HypnogramAnnotation]) -> String {
    let mut s = String::from(TSV_HEADER);
    s.push('\n');
    for a in annotations {
        s.push_str(&format!("{}\t{}\t{}\n", a.onset_s, a.duration_s, a.stage.annotation()));
    }
    s
}

fn parse_edf_annotations(bytes: &[u8]) -> Result<Vec<HypnogramAnnotation>> {
    let header = parse_edf_header(bytes)?;
    let idx = header
        .signals
        .iter()
        .position(|s| s.is_annotation())
        .ok_or_else(|| EdfError::ChannelNotFound("EDF Annotations".into()))?;
    let raw = signal_bytes(bytes, &header, idx)?;
    let mut out = Vec::new();
    for tal in raw.split(|&b| b == 0).filter(|t| !t.is_empty()) {
        parse_tal(tal, &mut out)?;
    }
    Ok(out)
}

/// One time-stamped annotation list: `+onset[\x15duration]\x14text\x14...`.
fn parse_tal(tal: &[u8], out: &mut Vec<HypnogramAnnotation>) -> Result<()> {
    let mut parts = tal.split(|&b| b == 0x14);
    let stamp = parts.next().unwrap_or_default();
    let stamp = std::str::from_utf8(stamp).map_err(|e| malformed("tal", e.to_string()))?;
    let (onset, duration) = match stamp.split_once('\u{15}') {
        Some((o, d)) => (o, Some(d)),
        None => (stamp, None),
    };
    let onset_s: f64 = onset
        .parse()
        .map_err(|_| malformed("tal_onset", format!("{onset:?}")))?;
    for text in parts {
        if text.is_empty() {
            continue;
        }
        let text = std::str::from_utf8(text).map_err(|e| malformed("tal", e.to_string()))?;
        let stage = SleepStage::from_annotation(text)?;
        let duration_s: f64 = duration
            .ok_or_else(|| malformed("tal_duration", format!("`{text}` at {onset_s} has no duration")))?
            .parse()
            .map_err(|_| malformed("tal_duration", format!("{duration:?}")))?;
        out.push(HypnogramAnnotation {
            onset_s,
            duration_s,
            stage,
        });
    }
    Ok(())
}

/// Encodes annotations as the bytes of an EDF+ annotation signal.
///
/// Produces a single data record: the timekeeping TAL followed by one
/// TAL per annotation, zero padded to an even length.
pub fn encode_tal_record(annotations: &[HypnogramAnnotation]) -> Vec<u8> {
    let mut out = b"+0\x14\x14\0".to_vec();
    for a in annotations {
        out.extend_from_slice(
            format!("+{}\u{15}{}\u{14}{}\u{14}\0", a.onset_s, a.duration_s, a.stage.annotation())
                .as_bytes(),
        );
    }
    if out.len() % 2 == 1 {
        out.push(0);
    }
    out
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::edf::header::tests::{header, signal};

    fn ann(onset_s: f64, duration_s: f64, stage: SleepStage) -> HypnogramAnnotation {
        HypnogramAnnotation {
            onset_s,
            duration_s,
            stage,
        }
    }

    pub(crate) fn edf_plus_hypnogram(annotations: &[HypnogramAnnotation]) -> Vec<u8> {
        let tal = encode_tal_record(annotations);
        let mut s = signal("EDF Annotations", tal.len() / 2);
        s.physical_min = -1.0;
        s.physical_max = 1.0;
        s.digital_min = -32768;
        s.digital_max = 32767;
        let mut h = header(vec![s], 1, 0.0);
        h.version = "0".into();
        h.reserved = "EDF+C".into();
        let mut bytes = h.to_bytes().unwrap();
        bytes.extend(tal);
        bytes
    }

    #[test]
    fn stage_table() {
        for stage in SleepStage::ALL {
            assert_eq!(SleepStage::from_annotation(stage.annotation()).unwrap(), stage);
        }
        assert_eq!(
            SleepStage::from_annotation("Movement time").unwrap(),
            SleepStage::Movement
        );
        assert_eq!(
            SleepStage::from_annotation("Lights off"),
            Err(EdfError::UnknownStageString("Lights off".into()))
        );
    }

    #[test]
    fn edf_plus_annotations_decode_sorted() {
        let anns = [
            ann(1800.0, 90.0, SleepStage::S1),
            ann(0.0, 1800.0, SleepStage::W),
            ann(1890.0, 30.0, SleepStage::Movement),
        ];
        let parsed = parse_hypnogram(&edf_plus_hypnogram(&anns)).unwrap();
        assert_eq!(parsed.len(), 3);
        assert_eq!(parsed[0], anns[1]);
        assert_eq!(parsed[0].intervals(), 60);
        assert_eq!(parsed[2].stage, SleepStage::Movement);
    }

    #[test]
    fn tsv_round_trip() {
        let anns = vec![ann(0.0, 60.0, SleepStage::W), ann(60.0, 30.0, SleepStage::Rem)];
        assert_eq!(parse_hypnogram(to_tsv(&anns).as_bytes()).unwrap(), anns);
    }

    #[test]
    fn overlapping_onsets_are_rejected() {
        let anns = [ann(0.0, 60.0, SleepStage::W), ann(30.0, 30.0, SleepStage::S1)];
        assert_eq!(
            parse_hypnogram(to_tsv(&anns).as_bytes()),
            Err(EdfError::OverlappingAnnotations { onset_s: 30.0 })
        );
        let same = [ann(0.0, 30.0, SleepStage::W), ann(0.0, 30.0, SleepStage::S1)];
        assert!(matches!(
            parse_hypnogram(&edf_plus_hypnogram(&same)),
            Err(EdfError::OverlappingAnnotations { .. })
        ));
    }

    #[test]
    fn scored_durations_must_be_whole_epochs() {
        let bad = [ann(0.0, 45.0, SleepStage::S2)];
        assert!(matches!(
            parse_hypnogram(to_tsv(&bad).as_bytes()),
            Err(EdfError::MalformedField { .. })
        ));
        // a trailing unscored span of arbitrary length is tolerated
        let tail = [ann(0.0, 30.0, SleepStage::S2), ann(30.0, 17.0, SleepStage::Unscored)];
        assert_eq!(parse_hypnogram(to_tsv(&tail).as_bytes()).unwrap().len(), 2);
    }

    #[test]
    fn unknown_tsv_stage() {
        let text = "onset_s\tduration_s\tstage\n0\t30\tSleep stage 5\n";
        assert_eq!(
            parse_hypnogram(text.as_bytes()),
            Err(EdfError::UnknownStageString("Sleep stage 5".into()))
        );
    }
}
