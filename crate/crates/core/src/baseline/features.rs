use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::filter::{design_bandpass, filter_signal, BandSpec, BiquadChain};
use super::{BaselineError, Result};
use crate::edf::Epoch;
use crate::SAMPLING_RATE_HZ;

pub const MMD_WINDOW: usize = 100;
pub const NUM_FEATURES: usize = 10;

/// Sum over consecutive windows of the distance between the first maximum
/// and first minimum, `sqrt((i_max - i_min)^2 + (x_max - x_min)^2)`, with
/// indices counted in samples.
pub fn mmd(x: &[f64], window_len: usize) -> Result<f64> {
    if window_len == 0 || x.len() % window_len != 0 {
        return Err(BaselineError::InvalidWindow {
            len: x.len(),
            window: window_len,
        });
    }
    let mut total = 0.0;
    for w in x.chunks_exact(window_len) {
        let (mut imax, mut imin) = (0, 0);
        for (i, &v) in w.iter().enumerate() {
            if v > w[imax] {
                imax = i;
            }
            if v < w[imin] {
                imin = i;
            }
        }
        let di = imax as f64 - imin as f64;
        let dx = w[imax] - w[imin];
        total += (di * di + dx * dx).sqrt();
    }
    Ok(total)
}

/// Total energy `sum x^2`.
pub fn energy_sis(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Per-band filters, designed once.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    pub bands: Vec<BandSpec>,
    pub chains: Vec<BiquadChain>,
}

impl FilterBank {
    pub fn new(bands: &[BandSpec]) -> Result<FilterBank> {
        let chains = bands
            .iter()
            .map(|b| design_bandpass(b, SAMPLING_RATE_HZ))
            .collect::<Result<Vec<_>>>()?;
        Ok(FilterBank {
            bands: bands.to_vec(),
            chains,
        })
    }

    pub fn default_bands() -> FilterBank {
        FilterBank::new(&BandSpec::default_bands()).expect("default bands are valid")
    }

    /// The epoch filtered into each band, in band order.
    pub fn split(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.chains.iter().map(|c| filter_signal(x, c)).collect()
    }

    /// `[MMD, EnergySis]` per band, concatenated in band order.
    pub fn extract(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(2 * self.chains.len());
        for banded in self.split(x) {
            out.push(mmd(&banded, MMD_WINDOW)?);
            out.push(energy_sis(&banded));
        }
        if let Some(i) = out.iter().position(|v| !v.is_finite()) {
            return Err(BaselineError::NonFiniteFeature(i));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: usize,
    pub recording_id: String,
    pub epoch_idx: usize,
}

/// Band features for one epoch.
pub fn extract_features(epoch: &Epoch, bank: &FilterBank) -> Result<FeatureVector> {
    let x: Vec<f64> = epoch.samples.iter().map(|&v| f64::from(v)).collect();
    Ok(FeatureVector {
        values: bank.extract(&x)?,
        label: epoch.label,
        recording_id: epoch.recording_id.clone(),
        epoch_idx: epoch.position_index,
    })
}

/// Features for many epochs, in parallel, returned in input order.
pub fn extract_all(epochs: &[Epoch], bank: &FilterBank) -> Result<Vec<FeatureVector>> {
    epochs.par_iter().map(|e| extract_features(e, bank)).collect()
}

/// CSV with columns `recording_id,epoch_idx,label,f0..f9`.
pub fn write_features_csv<W: Write>(rows: &[FeatureVector], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let width = rows.first().map_or(NUM_FEATURES, |r| r.values.len());
    let mut header = vec!["recording_id".to_string(), "epoch_idx".into(), "label".into()];
    header.extend((0..width).map(|i| format!("f{i}")));
    out.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.recording_id.clone(), r.epoch_idx.to_string(), r.label.to_string()];
        rec.extend(r.values.iter().map(|v| v.to_string()));
        out.write_record(&rec)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mmd_small_cases() {
        assert_eq!(mmd(&[4.0; 300], 100).unwrap(), 0.0);
        assert!((mmd(&[0.0, 1.0], 2).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!(mmd(&[0.0; 10], 3).is_err());
    }

    #[test]
    fn energy_cases() {
        assert_eq!(energy_sis(&[0.0; 10]), 0.0);
        assert_eq!(energy_sis(&[3.0, 4.0]), 25.0);
        let x = [1.5, -2.0, 0.25];
        let scaled: Vec<f64> = x.iter().map(|v| v * -3.0).collect();
        assert!((energy_sis(&scaled) - 9.0 * energy_sis(&x)).abs() < 1e-12);
    }

    #[test]
    fn ten_hz_tone_lands_in_alpha() {
        let bank = FilterBank::default_bands();
        let x: Vec<f64> = (0..3000).map(|t| (std::f64::consts::TAU * 10.0 * t as f64 / 100.0).sin()).collect();
        let f = bank.extract(&x).unwrap();
        assert_eq!(f.len(), 10);
        let energies: Vec<f64> = f.iter().skip(1).step_by(2).copied().collect();
        for (i, e) in energies.iter().enumerate() {
            if i != 2 {
                assert!(energies[2] > *e, "band {i}: {e} vs alpha {}", energies[2]);
            }
        }
        assert!(bank.extract(&[0.0; 3000]).unwrap().iter().all(|&v| v == 0.0));
    }
}
