use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use super::{
    parse_edf_header, parse_hypnogram, read_signal_with_rate, segment_epochs, EdfError, Epoch, LabelScheme,
    RecordingMeta, Subset,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("missing files for {} recording(s): {}", .0.len(), .0.join(", "))]
    MissingRecordings(Vec<String>),
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: EdfError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no PSG files found in {0}")]
    EmptyDirectory(PathBuf),
}

/// PSG and hypnogram files of one recording.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecordingFiles {
    pub recording_id: String,
    pub psg: PathBuf,
    pub hypnogram: PathBuf,
}

const PSG_SUFFIX: &str = "-PSG.edf";
const HYPNOGRAM_SUFFIXES: [&str; 3] = ["-Hypnogram.edf", "-Hypnogram.tsv", "-Hypnogram.txt"];

fn list_dir(dir: &Path) -> Result<Vec<String>, IngestError> {
    let io = |source| IngestError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let entry = entry.map_err(io)?;
        if let Some(name) = entry.file_name().to_str() {
            names.push(name.to_string());
        }
    }
    names.sort();
    Ok(names)
}

/// Finds the files of each recording id in `dir`. Files match on the
/// six-character Sleep-EDF stem; all missing ids are reported together.
pub fn locate_recordings(dir: &Path, ids: &[String]) -> Result<Vec<RecordingFiles>, IngestError> {
    let names = list_dir(dir)?;
    let find = |id: &str, suffixes: &[&str]| {
        names
            .iter()
            .find(|n| n.starts_with(id) && suffixes.iter().any(|s| n.ends_with(s)))
            .map(|n| dir.join(n))
    };
    let mut found = Vec::with_capacity(ids.len());
    let mut missing = Vec::new();
    for id in ids {
        match (find(id, &[PSG_SUFFIX]), find(id, &HYPNOGRAM_SUFFIXES)) {
            (Some(psg), Some(hypnogram)) => found.push(RecordingFiles {
                recording_id: id.clone(),
                psg,
                hypnogram,
            }),
            _ => missing.push(id.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(IngestError::MissingRecordings(missing));
    }
    Ok(found)
}

/// Recording ids of every PSG file in `dir`, sorted.
pub fn discover_recordings(dir: &Path) -> Result<Vec<String>, IngestError> {
    let mut ids: Vec<String> = list_dir(dir)?
        .iter()
        .filter(|n| n.ends_with(PSG_SUFFIX))
        .filter_map(|n| RecordingMeta::from_sleep_edf_name(n).ok())
        .map(|m| m.recording_id)
        .collect();
    ids.dedup();
    if ids.is_empty() {
        return Err(IngestError::EmptyDirectory(dir.to_path_buf()));
    }
    Ok(ids)
}

fn read(path: &Path) -> Result<Vec<u8>, IngestError> {
    std::fs::read(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Epochs of one recording.
pub fn ingest_recording(files: &RecordingFiles, scheme: LabelScheme, channel: &str) -> Result<Vec<Epoch>, IngestError> {
    let at = |path: &Path| {
        let path = path.to_path_buf();
        move |source| IngestError::File { path, source }
    };
    let meta = RecordingMeta::from_sleep_edf_name(&files.recording_id).map_err(at(&files.psg))?;
    let psg = read(&files.psg)?;
    let header = parse_edf_header(&psg).map_err(at(&files.psg))?;
    let (signal, rate) = read_signal_with_rate(&psg, &header, channel).map_err(at(&files.psg))?;
    let annotations = parse_hypnogram(&read(&files.hypnogram)?).map_err(at(&files.hypnogram))?;
    segment_epochs(&signal, rate, &annotations, scheme, &meta).map_err(at(&files.hypnogram))
}

/// Epochs of many recordings, read in parallel and concatenated in the
/// given order.
pub fn ingest_recordings(files: &[RecordingFiles], scheme: LabelScheme, channel: &str) -> Result<Vec<Epoch>, IngestError> {
    let parts = files
        .par_iter()
        .map(|f| ingest_recording(f, scheme, channel))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Per-class epoch counts for the SC subset, the ST subset and their total.
pub fn class_count_table(epochs: &[Epoch], num_classes: usize) -> Vec<(String, Vec<u64>)> {
    let mut rows = vec![
        (Subset::SC.as_str().to_string(), vec![0u64; num_classes]),
        (Subset::ST.as_str().to_string(), vec![0u64; num_classes]),
        ("Total".to_string(), vec![0u64; num_classes]),
    ];
    for e in epochs {
        let r = if e.subset == Subset::SC { 0 } else { 1 };
        rows[r].1[e.label] += 1;
        rows[2].1[e.label] += 1;
    }
    rows
}
