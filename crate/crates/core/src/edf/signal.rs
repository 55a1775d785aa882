use super::{EdfError, EdfHeader, Result};

/// Number of data records, resolving the `-1` sentinel from the file size.
pub(crate) fn resolved_records(file: &[u8], header: &EdfHeader) -> Result<usize> {
    let record_bytes = header.record_bytes();
    let data = file.len().saturating_sub(header.header_bytes);
    if header.num_records >= 0 {
        let n = header.num_records as usize;
        let expected = n.checked_mul(record_bytes).ok_or(EdfError::TruncatedRecords {
            expected: usize::MAX,
            found: data,
        })?;
        if data < expected {
            return Err(EdfError::TruncatedRecords { expected, found: data });
        }
        Ok(n)
    } else if record_bytes == 0 {
        Ok(0)
    } else {
        Ok(data / record_bytes)
    }
}

/// Raw bytes of one signal, concatenated over all data records.
pub(crate) fn signal_bytes(file: &[u8], header: &EdfHeader, signal: usize) -> Result<Vec<u8>> {
    let records = resolved_records(file, header)?;
    let record_bytes = header.record_bytes();
    let offset = header.signal_offset(signal);
    let width = header.signals[signal].samples_per_record * 2;
    let mut out = Vec::with_capacity(records * width);
    for r in 0..records {
        let start = header.header_bytes + r * record_bytes + offset;
        out.extend_from_slice(&file[start..start + width]);
    }
    Ok(out)
}

/// Reads one channel in physical units.
pub fn read_signal(file: &[u8], header: &EdfHeader, channel_label: &str) -> Result<Vec<f64>> {
    read_signal_with_rate(file, header, channel_label).map(|(samples, _)| samples)
}

/// Reads one channel in physical units together with its sampling rate.
pub fn read_signal_with_rate(
    file: &[u8],
    header: &EdfHeader,
    channel_label: &str,
) -> Result<(Vec<f64>, f64)> {
    let idx = header.find_signal(channel_label)?;
    let spec = &header.signals[idx];
    let raw = signal_bytes(file, header, idx)?;
    let samples = raw
        .chunks_exact(2)
        .map(|b| spec.to_physical(i16::from_le_bytes([b[0], b[1]])))
        .collect();
    Ok((samples, spec.sampling_rate(header.record_duration_s)))
}

/// Interleaves per-signal digital samples into EDF data records.
///
/// `signals[i]` must hold `num_records * samples_per_record` values for
/// signal `i`. Used to build synthetic recordings.
pub fn encode_records(header: &EdfHeader, signals: &[Vec<i16>]) -> Result<Vec<u8>> {
    if signals.len() != header.signals.len() {
        return Err(super::malformed(
            "signals",
            format!("{} sample vectors for {} signals", signals.len(), header.signals.len()),
        ));
    }
    let records = usize::try_from(header.num_records)
        .map_err(|_| super::malformed("num_records", "must be known when encoding"))?;
    let mut out = Vec::with_capacity(records * header.record_bytes());
    for r in 0..records {
        for (spec, samples) in header.signals.iter().zip(signals) {
            let spr = spec.samples_per_record;
            let chunk = samples.get(r * spr..(r + 1) * spr).ok_or_else(|| {
                super::malformed(&spec.label, "fewer samples than num_records implies")
            })?;
            for v in chunk {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    Ok(out)
}
