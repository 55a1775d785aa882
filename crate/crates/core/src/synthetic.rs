//! Synthetic band-limited epochs and recordings for smoke tests and
//! capacity checks.

use std::path::Path;

use chrono::NaiveDate;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::edf::{
    encode_records, to_tsv, EdfHeader, Epoch, HypnogramAnnotation, SignalSpec, SleepStage, Subset, DEFAULT_CHANNEL,
};
use crate::seed::rng_for;
use crate::{EPOCH_SAMPLES, EPOCH_SECONDS, SAMPLING_RATE_HZ};

/// Frequency range of each synthetic class, in Hz.
pub const CLASS_BANDS: [(f64, f64); 6] = [(0.5, 4.0), (4.0, 8.0), (8.0, 13.0), (13.0, 30.0), (30.0, 45.0), (45.0, 49.0)];

/// `per_class` epochs for each of `num_classes` classes; class `c` is a sum
/// of five random tones inside `CLASS_BANDS[c]` plus white noise. Output is
/// grouped by class, so shuffle before use if order matters.
pub fn band_limited_epochs(per_class: usize, num_classes: usize, seed: u64) -> Vec<Epoch> {
    assert!(num_classes <= CLASS_BANDS.len(), "at most {} synthetic classes", CLASS_BANDS.len());
    let mut rng = rng_for(seed, "synthetic/band-limited");
    let noise = Normal::new(0.0, 0.3).expect("valid std");
    let mut out = Vec::with_capacity(per_class * num_classes);
    for (class, &(lo, hi)) in CLASS_BANDS.iter().enumerate().take(num_classes) {
        for k in 0..per_class {
            let tones: Vec<(f64, f64, f64)> = (0..5)
                .map(|_| {
                    (
                        rng.random_range(lo..hi),
                        rng.random_range(0.0..std::f64::consts::TAU),
                        rng.random_range(0.5..1.5),
                    )
                })
                .collect();
            let samples = (0..EPOCH_SAMPLES)
                .map(|t| {
                    let time = t as f64 / SAMPLING_RATE_HZ;
                    let s: f64 = tones.iter().map(|(f, ph, a)| a * (std::f64::consts::TAU * f * time + ph).sin()).sum();
                    (20.0 * (s / 5.0 + noise.sample(&mut rng))) as f32
                })
                .collect();
            out.push(Epoch {
                samples,
                label: class,
                recording_id: format!("SYN{class}{k:04}"),
                subject_id: format!("SYN{class}"),
                subset: Subset::SC,
                position_index: k,
            });
        }
    }
    out
}

fn stage_band(stage: SleepStage) -> Option<(f64, f64)> {
    match stage {
        SleepStage::W => Some(CLASS_BANDS[0]),
        SleepStage::S1 => Some(CLASS_BANDS[1]),
        SleepStage::S2 => Some(CLASS_BANDS[2]),
        SleepStage::S3 => Some(CLASS_BANDS[3]),
        SleepStage::S4 => Some(CLASS_BANDS[4]),
        SleepStage::Rem => Some(CLASS_BANDS[5]),
        SleepStage::Movement | SleepStage::Unscored => None,
    }
}

/// A small Sleep-EDF style recording: a PSG file with `EEG Fpz-Cz` and
/// `EEG Pz-Oz` at 100 Hz, one 30 s data record per entry of `stages`, and
/// the matching hypnogram in TSV form. Each interval holds tones from the
/// stage's synthetic band; movement and unscored intervals hold noise.
pub fn synthetic_recording(stages: &[SleepStage], seed: u64) -> (Vec<u8>, String) {
    let mut rng = rng_for(seed, "synthetic/recording");
    let noise = Normal::new(0.0, 0.2).expect("valid std");
    let mut fpz = Vec::with_capacity(stages.len() * EPOCH_SAMPLES);
    for &stage in stages {
        let tones: Vec<(f64, f64)> = match stage_band(stage) {
            Some((lo, hi)) => (0..3)
                .map(|_| (rng.random_range(lo..hi), rng.random_range(0.0..std::f64::consts::TAU)))
                .collect(),
            None => Vec::new(),
        };
        for t in 0..EPOCH_SAMPLES {
            let time = t as f64 / SAMPLING_RATE_HZ;
            let s: f64 = tones.iter().map(|(f, ph)| (std::f64::consts::TAU * f * time + ph).sin()).sum();
            let uv = 30.0 * (s / 3.0 + noise.sample(&mut rng));
            fpz.push((uv / 200.0 * 32767.0).round().clamp(-32768.0, 32767.0) as i16);
        }
    }
    let pz: Vec<i16> = fpz.iter().map(|v| v / 2).collect();
    let spec = |label: &str| SignalSpec {
        label: label.to_string(),
        transducer: "Ag-AgCl electrodes".into(),
        physical_dim: "uV".into(),
        physical_min: -200.0,
        physical_max: 200.0,
        digital_min: -32768,
        digital_max: 32767,
        prefilter: "HP:0.5Hz LP:100Hz".into(),
        samples_per_record: EPOCH_SAMPLES,
        reserved: String::new(),
    };
    let header = EdfHeader {
        version: "0".into(),
        patient_id: "X F X Synthetic".into(),
        recording_id: "Startdate 01-JAN-1990 X X X".into(),
        start: NaiveDate::from_ymd_opt(1990, 1, 1)
            .and_then(|d| d.and_hms_opt(22, 0, 0))
            .expect("valid date"),
        header_bytes: 256 * 3,
        reserved: String::new(),
        num_records: stages.len() as i64,
        record_duration_s: EPOCH_SECONDS,
        signals: vec![spec(DEFAULT_CHANNEL), spec("EEG Pz-Oz")],
    };
    let mut psg = header.to_bytes().expect("synthetic header fits");
    psg.extend(encode_records(&header, &[fpz, pz]).expect("record layout matches"));
    let annotations: Vec<HypnogramAnnotation> = stages
        .iter()
        .enumerate()
        .map(|(i, &stage)| HypnogramAnnotation {
            onset_s: i as f64 * EPOCH_SECONDS,
            duration_s: EPOCH_SECONDS,
            stage,
        })
        .collect();
    (psg, to_tsv(&annotations))
}

/// Writes [`synthetic_recording`] as `<id>E0-PSG.edf` and
/// `<id>EC-Hypnogram.tsv` inside `dir`.
pub fn write_synthetic_recording(dir: &Path, recording_id: &str, stages: &[SleepStage], seed: u64) -> std::io::Result<()> {
    let (psg, tsv) = synthetic_recording(stages, seed);
    std::fs::write(dir.join(format!("{recording_id}E0-PSG.edf")), psg)?;
    std::fs::write(dir.join(format!("{recording_id}EC-Hypnogram.tsv")), tsv)
}
