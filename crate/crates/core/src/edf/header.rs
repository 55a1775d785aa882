use chrono::{Datelike, NaiveDate, NaiveDateTime, NaiveTime, Timelike};

use super::{malformed, EdfError, Result};

const FIXED_HEADER_BYTES: usize = 256;
const SIGNAL_HEADER_BYTES: usize = 256;

/// Per-signal block of an EDF header.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub label: String,
    pub transducer: String,
    pub physical_dim: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefilter: String,
    pub samples_per_record: usize,
    pub reserved: String,
}

impl SignalSpec {
    /// Maps a stored digital value to physical units.
    pub fn to_physical(&self, digital: i16) -> f64 {
        let gain = (self.physical_max - self.physical_min)
            / f64::from(self.digital_max - self.digital_min);
        self.physical_min + (f64::from(digital) - f64::from(self.digital_min)) * gain
    }

    pub fn sampling_rate(&self, record_duration_s: f64) -> f64 {
        self.samples_per_record as f64 / record_duration_s
    }

    pub fn is_annotation(&self) -> bool {
        self.label == "EDF Annotations"
    }
}

/// Decoded EDF/EDF+ header.
///
/// `num_records` may be `-1` while a file is still being written; it is
/// resolved from the file size when the data records are read.
#[derive(Debug, Clone, PartialEq)]
pub struct EdfHeader {
    pub version: String,
    pub patient_id: String,
    pub recording_id: String,
    pub start: NaiveDateTime,
    pub header_bytes: usize,
    pub reserved: String,
    pub num_records: i64,
    pub record_duration_s: f64,
    pub signals: Vec<SignalSpec>,
}

impl EdfHeader {
    pub fn num_signals(&self) -> usize {
        self.signals.len()
    }

    /// Bytes occupied by one data record (all signals, 2 bytes per sample).
    pub fn record_bytes(&self) -> usize {
        self.signals.iter().map(|s| s.samples_per_record * 2).sum()
    }

    /// Byte offset of `signal` inside one data record.
    pub fn signal_offset(&self, signal: usize) -> usize {
        self.signals[..signal]
            .iter()
            .map(|s| s.samples_per_record * 2)
            .sum()
    }

    /// Index of the signal whose label equals `label` exactly.
    pub fn find_signal(&self, label: &str) -> Result<usize> {
        let mut hits = self
            .signals
            .iter()
            .enumerate()
            .filter(|(_, s)| s.label == label)
            .map(|(i, _)| i);
        match (hits.next(), hits.next()) {
            (Some(i), None) => Ok(i),
            (Some(_), Some(_)) => Err(EdfError::AmbiguousChannel(label.to_string())),
            _ => Err(EdfError::ChannelNotFound(label.to_string())),
        }
    }

    /// Serialises the header into its fixed-width ASCII form.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let ns = self.signals.len();
        let mut out = Vec::with_capacity(FIXED_HEADER_BYTES + SIGNAL_HEADER_BYTES * ns);
        put(&mut out, "version", &self.version, 8)?;
        put(&mut out, "patient_id", &self.patient_id, 80)?;
        put(&mut out, "recording_id", &self.recording_id, 80)?;
        let year = self.start.year();
        if !(1985..=2084).contains(&year) {
            return Err(EdfError::FieldOverflow {
                field: "start_date".into(),
                width: 8,
                value: year.to_string(),
            });
        }
        let date = format!(
            "{:02}.{:02}.{:02}",
            self.start.day(),
            self.start.month(),
            year % 100
        );
        put(&mut out, "start_date", &date, 8)?;
        let time = format!(
            "{:02}.{:02}.{:02}",
            self.start.hour(),
            self.start.minute(),
            self.start.second()
        );
        put(&mut out, "start_time", &time, 8)?;
        put(&mut out, "header_bytes", &self.header_bytes.to_string(), 8)?;
        put(&mut out, "reserved", &self.reserved, 44)?;
        put(&mut out, "num_records", &self.num_records.to_string(), 8)?;
        put(&mut out, "record_duration", &fmt_real(self.record_duration_s), 8)?;
        put(&mut out, "num_signals", &ns.to_string(), 4)?;

        let fields: [(&str, usize, fn(&SignalSpec) -> String); 10] = [
            ("label", 16, |s| s.label.clone()),
            ("transducer", 80, |s| s.transducer.clone()),
            ("physical_dim", 8, |s| s.physical_dim.clone()),
            ("physical_min", 8, |s| fmt_real(s.physical_min)),
            ("physical_max", 8, |s| fmt_real(s.physical_max)),
            ("digital_min", 8, |s| s.digital_min.to_string()),
            ("digital_max", 8, |s| s.digital_max.to_string()),
            ("prefilter", 80, |s| s.prefilter.clone()),
            ("samples_per_record", 8, |s| s.samples_per_record.to_string()),
            ("signal_reserved", 32, |s| s.reserved.clone()),
        ];
        for (name, width, get) in fields {
            for s in &self.signals {
                put(&mut out, name, &get(s), width)?;
            }
        }
        Ok(out)
    }
}

fn fmt_real(v: f64) -> String {
    format!("{v}")
}

fn put(out: &mut Vec<u8>, field: &str, value: &str, width: usize) -> Result<()> {
    if value.len() > width || !value.is_ascii() {
        return Err(EdfError::FieldOverflow {
            field: field.to_string(),
            width,
            value: value.to_string(),
        });
    }
    out.extend_from_slice(value.as_bytes());
    out.extend(std::iter::repeat_n(b' ', width - value.len()));
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, width: usize) -> &'a [u8] {
        let field = &self.bytes[self.pos..self.pos + width];
        self.pos += width;
        field
    }

    fn text(&mut self, width: usize) -> String {
        String::from_utf8_lossy(self.take(width))
            .trim_end_matches([' ', '\0'])
            .to_string()
    }
}

fn parse_num<T: std::str::FromStr>(field: &str, raw: &str) -> Result<T> {
    raw.trim()
        .parse::<T>()
        .map_err(|_| malformed(field, format!("not a number: {raw:?}")))
}

fn parse_start(date: &str, time: &str) -> Result<NaiveDateTime> {
    let nums = |field: &str, s: &str| -> Result<[u32; 3]> {
        let parts: Vec<&str> = s.trim().split('.').collect();
        if parts.len() != 3 {
            return Err(malformed(field, format!("expected xx.xx.xx, got {s:?}")));
        }
        let mut out = [0u32; 3];
        for (slot, p) in out.iter_mut().zip(&parts) {
            *slot = parse_num(field, p)?;
        }
        Ok(out)
    };
    let [day, month, yy] = nums("start_date", date)?;
    let [hh, mm, ss] = nums("start_time", time)?;
    let year = if yy >= 85 { 1900 + yy } else { 2000 + yy } as i32;
    let d = NaiveDate::from_ymd_opt(year, month, day)
        .ok_or_else(|| malformed("start_date", format!("invalid date {date:?}")))?;
    let t = NaiveTime::from_hms_opt(hh, mm, ss)
        .ok_or_else(|| malformed("start_time", format!("invalid time {time:?}")))?;
    Ok(NaiveDateTime::new(d, t))
}

/// Decodes the fixed 256-byte header plus the 256-byte-per-signal blocks.
pub fn parse_edf_header(bytes: &[u8]) -> Result<EdfHeader> {
    if bytes.len() < FIXED_HEADER_BYTES {
        return Err(EdfError::TruncatedHeader {
            needed: FIXED_HEADER_BYTES,
            available: bytes.len(),
        });
    }
    let mut c = Cursor { bytes, pos: 0 };
    let version = c.text(8);
    let patient_id = c.text(80);
    let recording_id = c.text(80);
    let date = c.text(8);
    let time = c.text(8);
    let header_bytes: usize = parse_num("header_bytes", &c.text(8))?;
    let reserved = c.text(44);
    let num_records: i64 = parse_num("num_records", &c.text(8))?;
    let record_duration_s: f64 = parse_num("record_duration", &c.text(8))?;
    let ns: usize = parse_num("num_signals", &c.text(4))?;
    let start = parse_start(&date, &time)?;

    if ns == 0 {
        return Err(malformed("num_signals", "must be at least 1"));
    }
    let expected = ns
        .checked_mul(SIGNAL_HEADER_BYTES)
        .and_then(|n| n.checked_add(FIXED_HEADER_BYTES))
        .ok_or_else(|| malformed("num_signals", "too large"))?;
    if header_bytes != expected {
        return Err(malformed(
            "header_bytes",
            format!("{header_bytes} != 256 + 256 x {ns}"),
        ));
    }
    if num_records < 1 && num_records != -1 {
        return Err(malformed("num_records", format!("{num_records}")));
    }
    if !(record_duration_s.is_finite() && record_duration_s >= 0.0) {
        return Err(malformed("record_duration", format!("{record_duration_s}")));
    }
    if bytes.len() < header_bytes {
        return Err(EdfError::TruncatedHeader {
            needed: header_bytes,
            available: bytes.len(),
        });
    }

    let texts = |c: &mut Cursor, width| (0..ns).map(|_| c.text(width)).collect::<Vec<_>>();
    let labels = texts(&mut c, 16);
    let transducers = texts(&mut c, 80);
    let dims = texts(&mut c, 8);
    let pmins = texts(&mut c, 8);
    let pmaxs = texts(&mut c, 8);
    let dmins = texts(&mut c, 8);
    let dmaxs = texts(&mut c, 8);
    let prefilters = texts(&mut c, 80);
    let sprs = texts(&mut c, 8);
    let reserveds = texts(&mut c, 32);

    let mut signals = Vec::with_capacity(ns);
    for i in 0..ns {
        let spec = SignalSpec {
            label: labels[i].clone(),
            transducer: transducers[i].clone(),
            physical_dim: dims[i].clone(),
            physical_min: parse_num("physical_min", &pmins[i])?,
            physical_max: parse_num("physical_max", &pmaxs[i])?,
            digital_min: parse_num("digital_min", &dmins[i])?,
            digital_max: parse_num("digital_max", &dmaxs[i])?,
            prefilter: prefilters[i].clone(),
            samples_per_record: parse_num("samples_per_record", &sprs[i])?,
            reserved: reserveds[i].clone(),
        };
        if spec.digital_min >= spec.digital_max {
            return Err(malformed(
                "digital_min",
                format!("signal {i}: {} >= {}", spec.digital_min, spec.digital_max),
            ));
        }
        if !(spec.physical_min.is_finite() && spec.physical_max.is_finite())
            || spec.physical_min == spec.physical_max
        {
            return Err(malformed(
                "physical_min",
                format!("signal {i}: degenerate range {}..{}", spec.physical_min, spec.physical_max),
            ));
        }
        signals.push(spec);
    }

    Ok(EdfHeader {
        version,
        patient_id,
        recording_id,
        start,
        header_bytes,
        reserved,
        num_records,
        record_duration_s,
        signals,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub(crate) fn signal(label: &str, spr: usize) -> SignalSpec {
        SignalSpec {
            label: label.to_string(),
            transducer: "Ag-AgCl electrodes".into(),
            physical_dim: "uV".into(),
            physical_min: -200.0,
            physical_max: 200.0,
            digital_min: -2048,
            digital_max: 2047,
            prefilter: "HP:0.5Hz LP:100Hz".into(),
            samples_per_record: spr,
            reserved: String::new(),
        }
    }

    pub(crate) fn header(signals: Vec<SignalSpec>, num_records: i64, duration: f64) -> EdfHeader {
        EdfHeader {
            version: "0".into(),
            patient_id: "X F X Female_33yr".into(),
            recording_id: "Startdate 24-APR-1989 X X X".into(),
            start: NaiveDate::from_ymd_opt(1989, 4, 24)
                .unwrap()
                .and_hms_opt(16, 13, 0)
                .unwrap(),
            header_bytes: 256 + 256 * signals.len(),
            reserved: String::new(),
            num_records,
            record_duration_s: duration,
            signals,
        }
    }

    #[test]
    fn two_signal_header_is_768_bytes() {
        let h = header(vec![signal("EEG Fpz-Cz", 3000), signal("EEG Pz-Oz", 3000)], 2, 30.0);
        let bytes = h.to_bytes().unwrap();
        assert_eq!(bytes.len(), 768);
        let parsed = parse_edf_header(&bytes).unwrap();
        assert_eq!(parsed.header_bytes, 768);
        assert_eq!(parsed, h);
    }

    #[test]
    fn non_numeric_signal_count_is_malformed() {
        let h = header(vec![signal("EEG Fpz-Cz", 3000)], 1, 30.0);
        let mut bytes = h.to_bytes().unwrap();
        bytes[252..256].copy_from_slice(b"ab  ");
        assert!(matches!(
            parse_edf_header(&bytes),
            Err(EdfError::MalformedField { ref field, .. }) if field == "num_signals"
        ));
    }

    #[test]
    fn short_inputs_are_truncated_headers() {
        assert!(matches!(
            parse_edf_header(&[b' '; 100]),
            Err(EdfError::TruncatedHeader { needed: 256, available: 100 })
        ));
        let h = header(vec![signal("EEG Fpz-Cz", 3000)], 1, 30.0);
        let bytes = h.to_bytes().unwrap();
        assert!(matches!(
            parse_edf_header(&bytes[..400]),
            Err(EdfError::TruncatedHeader { needed: 512, available: 400 })
        ));
    }

    #[test]
    fn inverted_digital_range_is_rejected() {
        let mut s = signal("EEG Fpz-Cz", 3000);
        s.digital_min = 10;
        s.digital_max = 10;
        let bytes = header(vec![s], 1, 30.0).to_bytes().unwrap();
        assert!(parse_edf_header(&bytes).is_err());
    }

    #[test]
    fn unknown_record_count_sentinel_is_accepted() {
        let bytes = header(vec![signal("EEG Fpz-Cz", 3000)], -1, 30.0)
            .to_bytes()
            .unwrap();
        assert_eq!(parse_edf_header(&bytes).unwrap().num_records, -1);
    }

    #[test]
    fn find_signal_reports_missing_and_ambiguous() {
        let h = header(vec![signal("A", 1), signal("B", 1), signal("B", 1)], 1, 1.0);
        assert_eq!(h.find_signal("A").unwrap(), 0);
        assert_eq!(h.find_signal("C"), Err(EdfError::ChannelNotFound("C".into())));
        assert_eq!(h.find_signal("B"), Err(EdfError::AmbiguousChannel("B".into())));
    }

    fn ascii(max: usize) -> impl Strategy<Value = String> {
        proptest::string::string_regex(&format!("[A-Za-z0-9_:.-]([A-Za-z0-9 _:.-]{{0,{}}}[A-Za-z0-9_:.-])?", max - 2))
            .unwrap()
    }

    fn arb_signal() -> impl Strategy<Value = SignalSpec> {
        (
            ascii(16),
            ascii(80),
            ascii(8),
            (-9999i32..0, 1i32..9999),
            (-32768i32..0, 1i32..32767),
            ascii(80),
            1usize..5000,
        )
            .prop_map(|(label, transducer, dim, (pmin, pmax), (dmin, dmax), prefilter, spr)| {
                SignalSpec {
                    label,
                    transducer,
                    physical_dim: dim,
                    physical_min: f64::from(pmin) / 10.0,
                    physical_max: f64::from(pmax) / 10.0,
                    digital_min: dmin,
                    digital_max: dmax,
                    prefilter,
                    samples_per_record: spr,
                    reserved: String::new(),
                }
            })
    }

    proptest! {
        #[test]
        fn header_round_trips(
            signals in proptest::collection::vec(arb_signal(), 1..6),
            patient in ascii(80),
            records in 1i64..99_999,
            duration in prop_oneof![Just(30.0), Just(1.0), Just(0.5)],
            day in 1u32..28, month in 1u32..12, year in 1985i32..2084,
            hh in 0u32..23, mm in 0u32..59,
        ) {
            let mut h = header(signals, records, duration);
            h.patient_id = patient;
            h.start = NaiveDate::from_ymd_opt(year, month, day).unwrap().and_hms_opt(hh, mm, 7).unwrap();
            let bytes = h.to_bytes().unwrap();
            prop_assert_eq!(bytes.len(), h.header_bytes);
            prop_assert_eq!(parse_edf_header(&bytes).unwrap(), h);
        }
    }
}
