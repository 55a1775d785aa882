use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ArchitectureSpec, Model, ResnetError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"SLPCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Training metadata stored next to the tensors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub seed: u64,
    pub epoch: u64,
    pub lr: f64,
}

/// Writes `model` as: magic, version, fingerprint, metadata, then
/// `(name, shape, f64 values)` records, all little-endian, followed by a
/// CRC-32 of everything before it.
pub fn save_checkpoint(model: &Model, meta: &CheckpointMeta, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&model.spec().fingerprint());
    buf.extend_from_slice(&meta.seed.to_le_bytes());
    buf.extend_from_slice(&meta.epoch.to_le_bytes());
    buf.extend_from_slice(&meta.lr.to_le_bytes());
    let tensors = model.named_tensors();
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for t in tensors {
        buf.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        buf.extend_from_slice(t.name.as_bytes());
        buf.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
        for d in &t.shape {
            buf.extend_from_slice(&(*d as u64).to_le_bytes());
        }
        for v in t.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    fs::write(path, buf)?;
    Ok(())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            ResnetError::CorruptCheckpoint(format!("record runs past the end at byte {}", self.pos))
        })?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Loads a checkpoint for the shipped architecture with `num_classes`
/// outputs.
pub fn load_checkpoint(path: &Path, num_classes: usize) -> Result<(Model, CheckpointMeta)> {
    load_checkpoint_with_spec(path, ArchitectureSpec::resnet34(num_classes)?)
}

pub fn load_checkpoint_with_spec(path: &Path, spec: ArchitectureSpec) -> Result<(Model, CheckpointMeta)> {
    let bytes = fs::read(path)?;
    if bytes.len() < CHECKPOINT_MAGIC.len() + 4 + 32 + 24 + 4 + 4 {
        return Err(ResnetError::CorruptCheckpoint(format!("only {} bytes", bytes.len())));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(trailer.try_into().expect("4 bytes"));
    if crc32fast::hash(body) != stored {
        return Err(ResnetError::CorruptCheckpoint("CRC-32 mismatch".into()));
    }
    let mut r = Reader { buf: body, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(ResnetError::CorruptCheckpoint("bad magic".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(ResnetError::CorruptCheckpoint(format!("unsupported version {version}")));
    }
    if r.take(32)? != spec.fingerprint() {
        return Err(ResnetError::FingerprintMismatch);
    }
    let meta = CheckpointMeta {
        seed: r.u64()?,
        epoch: r.u64()?,
        lr: r.f64()?,
    };
    let mut model = Model::zeros(spec)?;
    let expected: Vec<(String, Vec<usize>)> =
        model.named_tensors().into_iter().map(|t| (t.name, t.shape)).collect();
    let count = r.u32()? as usize;
    if count != expected.len() {
        return Err(ResnetError::CorruptCheckpoint(format!(
            "{count} tensors, expected {}",
            expected.len()
        )));
    }
    let mut targets = model.tensors_mut();
    for ((name, shape), dst) in expected.iter().zip(targets.iter_mut()) {
        let len = r.u32()? as usize;
        let got = r.take(len)?;
        if got != name.as_bytes() {
            return Err(ResnetError::CorruptCheckpoint(format!(
                "found tensor {:?} where {name} was expected",
                String::from_utf8_lossy(got)
            )));
        }
        let ndim = r.u32()? as usize;
        let dims = (0..ndim).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if &dims != shape {
            return Err(ResnetError::CorruptCheckpoint(format!("{name} has shape {dims:?}, expected {shape:?}")));
        }
        for v in dst.iter_mut() {
            *v = r.f64()?;
        }
    }
    if r.pos != body.len() {
        return Err(ResnetError::CorruptCheckpoint(format!("{} trailing bytes", body.len() - r.pos)));
    }
    Ok((model, meta))
}
