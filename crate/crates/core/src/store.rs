//! Binary epoch store written by ingestion and read by the later stages.
//!
//! Layout (little-endian): 8-byte magic, `u32` version, `u64` record count,
//! then fixed-size records of recording id (16 bytes, NUL padded), subject
//! id (16 bytes), subset (`u8`), label (`u8`), position (`u32`) and 3000
//! `f32` samples. A JSON sidecar (`<store>.index.json`) lists the label
//! scheme and the record range of every recording.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edf::{Epoch, LabelScheme, Subset};
use crate::EPOCH_SAMPLES;

pub const STORE_MAGIC: &[u8; 8] = b"SLPSTORE";
pub const STORE_VERSION: u32 = 1;
const ID_BYTES: usize = 16;
const HEADER_BYTES: u64 = 8 + 4 + 8;
pub const RECORD_BYTES: usize = 2 * ID_BYTES + 1 + 1 + 4 + 4 * EPOCH_SAMPLES;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("epoch store I/O on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("malformed epoch store {path}: {detail}")]
    Malformed { path: PathBuf, detail: String },
    #[error("cannot store epoch: {0}")]
    Unstorable(String),
}

pub type Result<T> = std::result::Result<T, StoreError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordingEntry {
    pub recording_id: String,
    pub subject_id: String,
    pub subset: Subset,
    pub first: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreIndex {
    pub version: u32,
    pub scheme: LabelScheme,
    pub class_names: Vec<String>,
    pub epoch_count: usize,
    pub recordings: Vec<RecordingEntry>,
}

pub fn index_path(store: &Path) -> PathBuf {
    let mut name = store.as_os_str().to_owned();
    name.push(".index.json");
    PathBuf::from(name)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn malformed(path: &Path, detail: impl Into<String>) -> StoreError {
    StoreError::Malformed {
        path: path.to_path_buf(),
        detail: detail.into(),
    }
}

fn put_id(buf: &mut Vec<u8>, id: &str) -> Result<()> {
    if id.len() > ID_BYTES || !id.is_ascii() || id.contains('\0') {
        return Err(StoreError::Unstorable(format!("id {id:?} is not ASCII of at most {ID_BYTES} bytes")));
    }
    buf.extend_from_slice(id.as_bytes());
    buf.resize(buf.len() + ID_BYTES - id.len(), 0);
    Ok(())
}

fn encode(e: &Epoch, buf: &mut Vec<u8>) -> Result<()> {
    if e.samples.len() != EPOCH_SAMPLES {
        return Err(StoreError::Unstorable(format!("{} samples in an epoch", e.samples.len())));
    }
    let label = u8::try_from(e.label).map_err(|_| StoreError::Unstorable(format!("label {}", e.label)))?;
    let position =
        u32::try_from(e.position_index).map_err(|_| StoreError::Unstorable(format!("position {}", e.position_index)))?;
    put_id(buf, &e.recording_id)?;
    put_id(buf, &e.subject_id)?;
    buf.push(match e.subset {
        Subset::SC => 0,
        Subset::ST => 1,
    });
    buf.push(label);
    buf.extend_from_slice(&position.to_le_bytes());
    for v in &e.samples {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    Ok(())
}

fn get_id(bytes: &[u8], path: &Path) -> Result<String> {
    let end = bytes.iter().position(|&b| b == 0).unwrap_or(bytes.len());
    let s = std::str::from_utf8(&bytes[..end]).map_err(|_| malformed(path, "non-UTF-8 id"))?;
    Ok(s.to_string())
}

fn decode(rec: &[u8], path: &Path, num_classes: usize) -> Result<Epoch> {
    let recording_id = get_id(&rec[..ID_BYTES], path)?;
    let subject_id = get_id(&rec[ID_BYTES..2 * ID_BYTES], path)?;
    let mut at = 2 * ID_BYTES;
    let subset = match rec[at] {
        0 => Subset::SC,
        1 => Subset::ST,
        other => return Err(malformed(path, format!("subset byte {other}"))),
    };
    let label = rec[at + 1] as usize;
    if label >= num_classes {
        return Err(malformed(path, format!("label {label} for {num_classes} classes")));
    }
    at += 2;
    let position_index = u32::from_le_bytes(rec[at..at + 4].try_into().expect("4 bytes")) as usize;
    at += 4;
    let samples = rec[at..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    Ok(Epoch {
        samples,
        label,
        recording_id,
        subject_id,
        subset,
        position_index,
    })
}

fn build_index(epochs: &[Epoch], scheme: LabelScheme) -> StoreIndex {
    let mut recordings: Vec<RecordingEntry> = Vec::new();
    for (i, e) in epochs.iter().enumerate() {
        match recordings.last_mut() {
            Some(r) if r.recording_id == e.recording_id => r.count += 1,
            _ => recordings.push(RecordingEntry {
                recording_id: e.recording_id.clone(),
                subject_id: e.subject_id.clone(),
                subset: e.subset,
                first: i,
                count: 1,
            }),
        }
    }
    StoreIndex {
        version: STORE_VERSION,
        scheme,
        class_names: scheme.class_names().iter().map(|s| s.to_string()).collect(),
        epoch_count: epochs.len(),
        recordings,
    }
}

/// Writes `epochs` and the sidecar index. Returns the index.
pub fn write_store(path: &Path, epochs: &[Epoch], scheme: LabelScheme) -> Result<StoreIndex> {
    if let Some(e) = epochs.iter().find(|e| e.label >= scheme.num_classes()) {
        return Err(StoreError::Unstorable(format!("label {} outside the scheme", e.label)));
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    let mut header = Vec::with_capacity(HEADER_BYTES as usize);
    header.extend_from_slice(STORE_MAGIC);
    header.extend_from_slice(&STORE_VERSION.to_le_bytes());
    header.extend_from_slice(&(epochs.len() as u64).to_le_bytes());
    w.write_all(&header).map_err(io_err(path))?;
    let mut buf = Vec::with_capacity(RECORD_BYTES);
    for e in epochs {
        buf.clear();
        encode(e, &mut buf)?;
        w.write_all(&buf).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    let index = build_index(epochs, scheme);
    let ipath = index_path(path);
    let json = serde_json::to_string_pretty(&index).expect("index serializes");
    std::fs::write(&ipath, json + "\n").map_err(io_err(&ipath))?;
    Ok(index)
}

/// Random-access reader over a store file.
pub struct EpochStore {
    path: PathBuf,
    file: BufReader<File>,
    index: StoreIndex,
}

impl EpochStore {
    pub fn open(path: &Path) -> Result<EpochStore> {
        let ipath = index_path(path);
        let text = std::fs::read_to_string(&ipath).map_err(io_err(&ipath))?;
        let index: StoreIndex = serde_json::from_str(&text).map_err(|e| malformed(&ipath, e.to_string()))?;
        let file = File::open(path).map_err(io_err(path))?;
        let len = file.metadata().map_err(io_err(path))?.len();
        let mut file = BufReader::new(file);
        let mut header = [0u8; HEADER_BYTES as usize];
        file.read_exact(&mut header).map_err(|_| malformed(path, "truncated header"))?;
        if &header[..8] != STORE_MAGIC {
            return Err(malformed(path, "bad magic"));
        }
        let version = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes"));
        if version != STORE_VERSION {
            return Err(malformed(path, format!("unsupported version {version}")));
        }
        let count = u64::from_le_bytes(header[12..20].try_into().expect("8 bytes"));
        if count as usize != index.epoch_count {
            return Err(malformed(path, format!("{count} records but the index lists {}", index.epoch_count)));
        }
        let expected = HEADER_BYTES + count * RECORD_BYTES as u64;
        if len != expected {
            return Err(malformed(path, format!("{len} bytes, expected {expected}")));
        }
        Ok(EpochStore {
            path: path.to_path_buf(),
            file,
            index,
        })
    }

    pub fn index(&self) -> &StoreIndex {
        &self.index
    }

    pub fn len(&self) -> usize {
        self.index.epoch_count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&mut self, i: usize) -> Result<Epoch> {
        if i >= self.len() {
            return Err(malformed(&self.path, format!("record {i} of {}", self.len())));
        }
        let offset = HEADER_BYTES + (i * RECORD_BYTES) as u64;
        self.file.seek(SeekFrom::Start(offset)).map_err(io_err(&self.path))?;
        let mut rec = vec![0u8; RECORD_BYTES];
        self.file.read_exact(&mut rec).map_err(io_err(&self.path))?;
        decode(&rec, &self.path, self.index.scheme.num_classes())
    }

    pub fn read_all(&mut self) -> Result<Vec<Epoch>> {
        self.file.seek(SeekFrom::Start(HEADER_BYTES)).map_err(io_err(&self.path))?;
        let mut rec = vec![0u8; RECORD_BYTES];
        let classes = self.index.scheme.num_classes();
        let mut out = Vec::with_capacity(self.len());
        for _ in 0..self.len() {
            self.file.read_exact(&mut rec).map_err(io_err(&self.path))?;
            out.push(decode(&rec, &self.path, classes)?);
        }
        Ok(out)
    }
}

/// Reads a whole store.
pub fn read_store(path: &Path) -> Result<(Vec<Epoch>, StoreIndex)> {
    let mut store = EpochStore::open(path)?;
    let epochs = store.read_all()?;
    Ok((epochs, store.index.clone()))
}
