use rayon::prelude::*;
use serde::Serialize;

use super::spectral::power_spectrum;
use super::stats::{one_way_anova, AnovaResult};
use super::{AnalysisError, Result};
use crate::baseline::{energy_sis, mmd, BandName, FilterBank, MMD_WINDOW};
use crate::edf::{Epoch, Subset};
use crate::SAMPLING_RATE_HZ;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BandFeature {
    Mmd,
    EnergySis,
    SpectralRolloff,
    SpectralSpread,
}

impl BandFeature {
    pub const ALL: [BandFeature; 4] = [
        BandFeature::Mmd,
        BandFeature::EnergySis,
        BandFeature::SpectralRolloff,
        BandFeature::SpectralSpread,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BandFeature::Mmd => "MMD",
            BandFeature::EnergySis => "EnergySis",
            BandFeature::SpectralRolloff => "SpectralRolloff",
            BandFeature::SpectralSpread => "SpectralSpread",
        }
    }
}

/// `[MMD, EnergySis, rolloff, spread]` for each band of one epoch.
pub fn band_features(x: &[f64], bank: &FilterBank) -> Result<Vec<[f64; 4]>> {
    bank.split(x)
        .iter()
        .map(|b| {
            let s = power_spectrum(b, SAMPLING_RATE_HZ)?;
            Ok([mmd(b, MMD_WINDOW)?, energy_sis(b), s.rolloff(0.85)?, s.spread()?])
        })
        .collect()
}

/// One (feature, band) comparison between the two subsets.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaRow {
    pub feature: BandFeature,
    pub band: BandName,
    pub result: AnovaResult,
}

/// Per-epoch band features split by subset, plus the SC-vs-ST tests.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetComparison {
    pub bands: Vec<BandName>,
    /// `values[subset][feature][band]` holds one value per epoch.
    pub sc: Vec<Vec<Vec<f64>>>,
    pub st: Vec<Vec<Vec<f64>>>,
    pub rows: Vec<AnovaRow>,
    /// Epochs left out because a band carried no energy.
    pub skipped: usize,
}

impl SubsetComparison {
    pub fn values(&self, subset: Subset, feature: usize, band: usize) -> &[f64] {
        match subset {
            Subset::SC => &self.sc[feature][band],
            Subset::ST => &self.st[feature][band],
        }
    }
}

/// Band features for every epoch and one ANOVA per (feature, band), rows
/// ordered feature-major.
pub fn compare_subsets(epochs: &[Epoch], bank: &FilterBank) -> Result<SubsetComparison> {
    let per_epoch: Vec<Option<(Subset, Vec<[f64; 4]>)>> = epochs
        .par_iter()
        .map(|e| {
            let x: Vec<f64> = e.samples.iter().map(|&v| f64::from(v)).collect();
            match band_features(&x, bank) {
                Ok(f) => Ok(Some((e.subset, f))),
                Err(AnalysisError::ZeroSignal) => Ok(None),
                Err(err) => Err(err),
            }
        })
        .collect::<Result<_>>()?;
    let nb = bank.bands.len();
    let empty = || vec![vec![Vec::new(); nb]; 4];
    let (mut sc, mut st) = (empty(), empty());
    let mut skipped = 0;
    for item in per_epoch {
        let Some((subset, feats)) = item else {
            skipped += 1;
            continue;
        };
        let dst = if subset == Subset::SC { &mut sc } else { &mut st };
        for (b, vals) in feats.iter().enumerate() {
            for (f, v) in vals.iter().enumerate() {
                dst[f][b].push(*v);
            }
        }
    }
    if sc[0][0].is_empty() || st[0][0].is_empty() {
        return Err(AnalysisError::SingleSubset);
    }
    let bands: Vec<BandName> = bank.bands.iter().map(|b| b.name).collect();
    let mut rows = Vec::with_capacity(4 * nb);
    for (f, feature) in BandFeature::ALL.iter().enumerate() {
        for (b, band) in bands.iter().enumerate() {
            rows.push(AnovaRow {
                feature: *feature,
                band: *band,
                result: one_way_anova(&[&sc[f][b], &st[f][b]])?,
            });
        }
    }
    Ok(SubsetComparison {
        bands,
        sc,
        st,
        rows,
        skipped,
    })
}
