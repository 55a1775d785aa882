//! Mini-batch training of the residual network.

use std::io::Write;
use std::ops::ControlFlow;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edf::Epoch;
use crate::nn::{adam_step, weighted_softmax_ce, AdamConfig, AdamState, ClassWeights, NnError};
use crate::resnet::{Model, ResnetError};
use crate::seed::rng_for;
use crate::EPOCH_SAMPLES;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("class {0} has no training examples")]
    EmptyClass(usize),
    #[error("label {label} is out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("non-finite loss in training epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error(transparent)]
    Model(#[from] ResnetError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("history I/O: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TrainError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub max_lr: f64,
    pub lr_decay_every: usize,
    pub lr_decay_factor: f64,
    pub batch_size: usize,
    pub num_epochs: usize,
    pub seed: u64,
    pub augmentation: bool,
    pub keep_prob: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let adam = AdamConfig::default();
        TrainConfig {
            max_lr: 1e-3,
            lr_decay_every: 10,
            lr_decay_factor: 10.0,
            batch_size: 64,
            num_epochs: 30,
            seed: 0,
            augmentation: true,
            keep_prob: 0.5,
            adam_beta1: adam.beta1,
            adam_beta2: adam.beta2,
            adam_eps: adam.eps,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(TrainError::InvalidConfig(m));
        if !(self.max_lr > 0.0 && self.max_lr.is_finite()) {
            return bad(format!("max_lr must be positive, got {}", self.max_lr));
        }
        if self.batch_size < 2 {
            return bad(format!("batch_size must be at least 2, got {}", self.batch_size));
        }
        if self.lr_decay_factor.is_nan() || self.lr_decay_factor <= 1.0 {
            return bad(format!("lr_decay_factor must exceed 1, got {}", self.lr_decay_factor));
        }
        if self.lr_decay_every == 0 {
            return bad("lr_decay_every must be positive".into());
        }
        if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
            return bad(format!("keep_prob must be in (0, 1], got {}", self.keep_prob));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<TrainConfig> {
        let cfg: TrainConfig = serde_json::from_str(text).map_err(|e| TrainError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn adam(&self, lr: f64) -> AdamConfig {
        AdamConfig {
            lr,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
        }
    }
}

/// Step schedule: `max_lr / factor^floor(e / every)`.
pub fn lr_at(training_epoch: usize, cfg: &TrainConfig) -> f64 {
    let drops = (training_epoch / cfg.lr_decay_every) as i32;
    cfg.max_lr / cfg.lr_decay_factor.powi(drops)
}

/// Inverse-frequency weights `N / (K * n_c)`; a balanced set gets all ones.
pub fn compute_class_weights(labels: &[usize], num_classes: usize) -> Result<ClassWeights> {
    let mut counts = vec![0usize; num_classes];
    for &l in labels {
        *counts.get_mut(l).ok_or(TrainError::LabelOutOfRange {
            label: l,
            classes: num_classes,
        })? += 1;
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(TrainError::EmptyClass(c));
    }
    let total = labels.len() as f64;
    let k = num_classes as f64;
    Ok(ClassWeights::new(counts.iter().map(|&n| total / (k * n as f64)).collect())?)
}

/// Circular shift to the right by `shift` samples (negative shifts go left).
pub fn rolling_shift<T: Copy>(x: &[T], shift: isize) -> Vec<T> {
    let mut out = x.to_vec();
    if !x.is_empty() {
        out.rotate_right(shift.rem_euclid(x.len() as isize) as usize);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    /// Mean weighted loss over the training examples.
    pub loss: f64,
    /// Accuracy of the TRAIN-mode predictions made while fitting.
    pub train_acc: f64,
    pub val_acc: Option<f64>,
    /// Wall-clock time of the epoch. Not written to the CSV, which stays
    /// byte-identical across reruns.
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub records: Vec<EpochRecord>,
}

impl TrainHistory {
    pub const CSV_HEADER: &'static str = "epoch,lr,loss,train_acc,val_acc";

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.records {
            let val = r.val_acc.map_or(String::new(), |v| v.to_string());
            writeln!(w, "{},{},{},{},{}", r.epoch, r.lr, r.loss, r.train_acc, val)?;
        }
        Ok(())
    }
}

/// Splits a shuffled order into batches of `size`. A trailing batch of one
/// example is merged into the previous batch, since batch statistics need
/// two examples.
pub fn make_batches(order: &[usize], size: usize) -> Vec<Vec<usize>> {
    let mut batches: Vec<Vec<usize>> = order.chunks(size).map(<[usize]>::to_vec).collect();
    if batches.len() > 1 && batches.last().is_some_and(|b| b.len() == 1) {
        let last = batches.pop().expect("non-empty");
        batches.last_mut().expect("non-empty").extend(last);
    }
    batches
}

fn to_f64(samples: &[f32]) -> Vec<f64> {
    samples.iter().map(|&v| f64::from(v)).collect()
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// EVAL-mode class predictions, in input order.
pub fn predict_epochs(model: &Model, epochs: &[Epoch]) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(epochs.len());
    for chunk in epochs.chunks(256) {
        let xs: Vec<Vec<f64>> = chunk.iter().map(|e| to_f64(&e.samples)).collect();
        let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        out.extend(model.predict_batch(&refs)?.iter().map(|p| argmax(p)));
    }
    Ok(out)
}

/// EVAL-mode accuracy on `epochs`.
pub fn accuracy(model: &Model, epochs: &[Epoch]) -> Result<f64> {
    let preds = predict_epochs(model, epochs)?;
    let correct = preds.iter().zip(epochs).filter(|(p, e)| **p == e.label).count();
    Ok(correct as f64 / epochs.len().max(1) as f64)
}

/// [`train_with`] without an observer.
pub fn train(model: &mut Model, data: &[Epoch], cfg: &TrainConfig, validation: Option<&[Epoch]>) -> Result<TrainHistory> {
    train_with(model, data, cfg, validation, |_, _| ControlFlow::Continue(()))
}

/// Trains `model` in place.
///
/// Each training epoch shuffles the examples, draws a uniform circular
/// shift in `[0, 3000)` per example when augmentation is on, and takes one
/// Adam step per mini-batch at `lr_at(epoch)`. The loss is the batch mean
/// of the weighted cross-entropy. `observe` runs after every training epoch
/// and may stop the run early.
pub fn train_with<F>(
    model: &mut Model,
    data: &[Epoch],
    cfg: &TrainConfig,
    validation: Option<&[Epoch]>,
    mut observe: F,
) -> Result<TrainHistory>
where
    F: FnMut(&EpochRecord, &Model) -> ControlFlow<()>,
{
    cfg.validate()?;
    if data.len() < 2 {
        return Err(TrainError::InvalidConfig(format!("need at least 2 training examples, got {}", data.len())));
    }
    if let Some(e) = data.iter().find(|e| e.samples.len() != EPOCH_SAMPLES) {
        return Err(ResnetError::BadInputWidth {
            expected: EPOCH_SAMPLES,
            found: e.samples.len(),
        }
        .into());
    }
    model.set_keep_prob(cfg.keep_prob)?;
    let labels: Vec<usize> = data.iter().map(|e| e.label).collect();
    let weights = compute_class_weights(&labels, model.num_classes())?;
    let mut states: Vec<AdamState> = model
        .trainable_mut()
        .iter()
        .map(|t| AdamState::new(t.len(), cfg.adam(cfg.max_lr)))
        .collect();
    let mut shuffle_rng = rng_for(cfg.seed, "train/shuffle");
    let mut shift_rng = rng_for(cfg.seed, "train/shift");
    let mut dropout_rng = rng_for(cfg.seed, "train/dropout");
    let mut history = TrainHistory::default();

    for epoch in 0..cfg.num_epochs {
        let started = Instant::now();
        let lr = lr_at(epoch, cfg);
        let mut order: Vec<usize> = (0..data.len()).collect();
        order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (b, batch) in make_batches(&order, cfg.batch_size).iter().enumerate() {
            let xs: Vec<Vec<f64>> = batch
                .iter()
                .map(|&i| {
                    let x = to_f64(&data[i].samples);
                    if cfg.augmentation {
                        rolling_shift(&x, shift_rng.random_range(0..EPOCH_SAMPLES) as isize)
                    } else {
                        x
                    }
                })
                .collect();
            let refs: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
            let (logits, tape) = model.forward_train(&refs, &mut dropout_rng)?;
            let scale = 1.0 / batch.len() as f64;
            let mut grads = Vec::with_capacity(batch.len());
            for (l, &i) in logits.iter().zip(batch) {
                let label = data[i].label;
                let (loss, mut g) = match weighted_softmax_ce(l, label, &weights) {
                    Err(NnError::NonFiniteLogit(_)) => (f64::NAN, Vec::new()),
                    other => other?,
                };
                if !loss.is_finite() {
                    log::error!("non-finite loss in epoch {epoch}, batch {b} (examples {batch:?})");
                    return Err(TrainError::NonFiniteLoss { epoch, batch: b });
                }
                loss_sum += loss;
                correct += usize::from(argmax(l) == label);
                g.iter_mut().for_each(|v| *v *= scale);
                grads.push(g);
            }
            let param_grads = model.backward(tape, &grads)?;
            for ((p, g), st) in model.trainable_mut().into_iter().zip(&param_grads).zip(&mut states) {
                st.config.lr = lr;
                adam_step(p, g, st)?;
            }
        }
        let val_acc = validation.map(|v| accuracy(model, v)).transpose()?;
        let record = EpochRecord {
            epoch,
            lr,
            loss: loss_sum / data.len() as f64,
            train_acc: correct as f64 / data.len() as f64,
            val_acc,
            seconds: started.elapsed().as_secs_f64(),
        };
        log::info!(
            "epoch {epoch}: lr {lr:e} loss {:.4} train_acc {:.4}{}",
            record.loss,
            record.train_acc,
            val_acc.map_or(String::new(), |v| format!(" val_acc {v:.4}"))
        );
        history.records.push(record);
        if observe(history.records.last().expect("just pushed"), model).is_break() {
            break;
        }
    }
    Ok(history)
}
