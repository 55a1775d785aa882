use super::{NnError, Result};

/// Per-class loss weights, all strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights(Vec<f64>);

impl ClassWeights {
    pub fn new(weights: Vec<f64>) -> Result<ClassWeights> {
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(NnError::InvalidArgument(format!(
                "class weights must be finite and positive: {weights:?}"
            )));
        }
        Ok(ClassWeights(weights))
    }

    pub fn uniform(classes: usize) -> ClassWeights {
        ClassWeights(vec![1.0; classes])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, class: usize) -> f64 {
        self.0[class]
    }
}

fn check_finite(logits: &[f64]) -> Result<()> {
    match logits.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(NnError::NonFiniteLogit(i)),
        None => Ok(()),
    }
}

/// Max-shifted softmax.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    check_finite(logits)?;
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    Ok(exp.into_iter().map(|e| e / sum).collect())
}

/// Weighted cross-entropy on softmax probabilities.
///
/// Returns `(-w[label] * ln p[label], w[label] * (p - onehot(label)))`.
pub fn weighted_softmax_ce(logits: &[f64], label: usize, weights: &ClassWeights) -> Result<(f64, Vec<f64>)> {
    if logits.len() != weights.num_classes() || label >= logits.len() {
        return Err(NnError::ShapeMismatch(format!(
            "{} logits, {} class weights, label {label}",
            logits.len(),
            weights.num_classes()
        )));
    }
    check_finite(logits)?;
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    let w = weights.get(label);
    let loss = -w * (logits[label] - max - log_sum);
    let mut grad = softmax(logits)?;
    grad[label] -= 1.0;
    grad.iter_mut().for_each(|g| *g *= w);
    Ok((loss, grad))
}
