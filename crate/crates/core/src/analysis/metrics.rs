use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, Result};
use crate::edf::{Epoch, Subset};

/// Counts indexed `[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes()).map(|c| self.counts[c][c]).sum()
    }

    pub fn row_total(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    pub fn col_total(&self, c: usize) -> u64 {
        self.counts.iter().map(|r| r[c]).sum()
    }

    /// Each row as percentages of its total (rows with no examples stay 0).
    pub fn row_percent(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let n: u64 = row.iter().sum();
                row.iter()
                    .map(|&v| if n == 0 { 0.0 } else { 100.0 * v as f64 / n as f64 })
                    .collect()
            })
            .collect()
    }
}

pub fn confusion(preds: &[usize], labels: &[usize], num_classes: usize) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(AnalysisError::LengthMismatch {
            preds: preds.len(),
            labels: labels.len(),
        });
    }
    let mut counts = vec![vec![0u64; num_classes]; num_classes];
    for (&p, &l) in preds.iter().zip(labels) {
        if p >= num_classes || l >= num_classes {
            return Err(AnalysisError::ClassOutOfRange(p.max(l)));
        }
        counts[l][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

/// Predictions and labels of one test recording.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordingPredictions {
    pub recording_id: String,
    pub subject_id: String,
    pub subset: Subset,
    pub preds: Vec<usize>,
    pub labels: Vec<usize>,
}

/// Groups per-epoch predictions by recording, in order of first appearance.
pub fn group_by_recording(epochs: &[Epoch], preds: &[usize]) -> Result<Vec<RecordingPredictions>> {
    if epochs.len() != preds.len() {
        return Err(AnalysisError::LengthMismatch {
            preds: preds.len(),
            labels: epochs.len(),
        });
    }
    let mut slot: BTreeMap<&str, usize> = BTreeMap::new();
    let mut groups: Vec<RecordingPredictions> = Vec::new();
    for (e, &p) in epochs.iter().zip(preds) {
        let i = *slot.entry(&e.recording_id).or_insert_with(|| {
            groups.push(RecordingPredictions {
                recording_id: e.recording_id.clone(),
                subject_id: e.subject_id.clone(),
                subset: e.subset,
                preds: Vec::new(),
                labels: Vec::new(),
            });
            groups.len() - 1
        });
        groups[i].preds.push(p);
        groups[i].labels.push(e.label);
    }
    Ok(groups)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordingAccuracy {
    pub recording_id: String,
    pub subject_id: String,
    pub subset: Subset,
    pub accuracy: f64,
}

/// Percentages throughout. Per-class values are `None` for classes absent
/// from the evaluated labels; those classes are listed in
/// `excluded_classes` and left out of the macro averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub class_names: Vec<String>,
    pub sensitivity: Vec<Option<f64>>,
    pub specificity: Vec<Option<f64>>,
    pub avg_sensitivity: f64,
    pub avg_specificity: f64,
    pub epoch_accuracy: f64,
    /// Mean over subjects of each subject's pooled accuracy.
    pub patient_accuracy: f64,
    /// Mean over recordings of per-recording accuracy.
    pub recording_mean_accuracy: f64,
    pub per_recording: Vec<RecordingAccuracy>,
    pub excluded_classes: Vec<usize>,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn class_sensitivity(&self, name: &str) -> Option<f64> {
        let c = self.class_names.iter().position(|n| n == name)?;
        self.sensitivity[c]
    }
}

fn pct(num: u64, den: u64) -> f64 {
    100.0 * num as f64 / den as f64
}

/// Metrics from the per-recording predictions. The confusion matrix is
/// built from all groups; per-recording and per-subject accuracies come
/// from the grouping.
pub fn metrics(groups: &[RecordingPredictions], class_names: &[&str]) -> Result<MetricsReport> {
    let k = class_names.len();
    let mut cm = ConfusionMatrix {
        counts: vec![vec![0; k]; k],
    };
    for g in groups {
        let part = confusion(&g.preds, &g.labels, k)?;
        for (row, add) in cm.counts.iter_mut().zip(&part.counts) {
            for (a, b) in row.iter_mut().zip(add) {
                *a += b;
            }
        }
    }
    metrics_from(cm, groups, class_names)
}

pub fn metrics_from(cm: ConfusionMatrix, groups: &[RecordingPredictions], class_names: &[&str]) -> Result<MetricsReport> {
    let k = cm.num_classes();
    if k != class_names.len() {
        return Err(AnalysisError::ClassOutOfRange(k.max(class_names.len())));
    }
    let total = cm.total();
    if total == 0 {
        return Err(AnalysisError::EmptyMetrics);
    }
    let mut sensitivity = Vec::with_capacity(k);
    let mut specificity = Vec::with_capacity(k);
    let mut excluded = Vec::new();
    for c in 0..k {
        let row = cm.row_total(c);
        if row == 0 {
            excluded.push(c);
            sensitivity.push(None);
            specificity.push(None);
            continue;
        }
        let tp = cm.counts[c][c];
        let fp = cm.col_total(c) - tp;
        let tn = total - row - fp;
        sensitivity.push(Some(pct(tp, row)));
        specificity.push(Some(if tn + fp == 0 { 100.0 } else { pct(tn, tn + fp) }));
    }
    let mean = |v: &[Option<f64>]| {
        let present: Vec<f64> = v.iter().flatten().copied().collect();
        present.iter().sum::<f64>() / present.len() as f64
    };

    let mut per_recording = Vec::with_capacity(groups.len());
    let mut by_subject: BTreeMap<&str, (u64, u64)> = BTreeMap::new();
    for g in groups {
        let correct = g.preds.iter().zip(&g.labels).filter(|(p, l)| p == l).count() as u64;
        let n = g.labels.len() as u64;
        if n == 0 {
            continue;
        }
        let entry = by_subject.entry(&g.subject_id).or_default();
        entry.0 += correct;
        entry.1 += n;
        per_recording.push(RecordingAccuracy {
            recording_id: g.recording_id.clone(),
            subject_id: g.subject_id.clone(),
            subset: g.subset,
            accuracy: pct(correct, n),
        });
    }
    let patient_accuracy = if by_subject.is_empty() {
        f64::NAN
    } else {
        by_subject.values().map(|&(c, n)| pct(c, n)).sum::<f64>() / by_subject.len() as f64
    };
    let recording_mean_accuracy = if per_recording.is_empty() {
        f64::NAN
    } else {
        per_recording.iter().map(|r| r.accuracy).sum::<f64>() / per_recording.len() as f64
    };
    Ok(MetricsReport {
        class_names: class_names.iter().map(|s| s.to_string()).collect(),
        avg_sensitivity: mean(&sensitivity),
        avg_specificity: mean(&specificity),
        sensitivity,
        specificity,
        epoch_accuracy: pct(cm.trace(), total),
        patient_accuracy,
        recording_mean_accuracy,
        per_recording,
        excluded_classes: excluded,
        confusion: cm,
    })
}
