use super::{Mode, NnError, Result, Tensor};

/// Per-channel normalisation statistics.
///
/// Holds four values per channel (running and last-batch mean and
/// variance). There is no affine part here; gain and shift live in
/// [`ScaleParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct NormState {
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub batch_mean: Vec<f64>,
    pub batch_var: Vec<f64>,
    pub epsilon: f64,
    pub momentum: f64,
}

impl NormState {
    pub const DEFAULT_EPSILON: f64 = 1e-5;
    pub const DEFAULT_MOMENTUM: f64 = 0.99;

    pub fn new(channels: usize) -> NormState {
        NormState {
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            batch_mean: vec![0.0; channels],
            batch_var: vec![1.0; channels],
            epsilon: Self::DEFAULT_EPSILON,
            momentum: Self::DEFAULT_MOMENTUM,
        }
    }

    pub fn channels(&self) -> usize {
        self.running_mean.len()
    }

    pub fn stored_values(&self) -> usize {
        4 * self.channels()
    }
}

/// What the TRAIN-mode backward pass needs besides the normalised output.
#[derive(Debug, Clone, PartialEq)]
pub struct NormCache {
    pub inv_std: Vec<f64>,
}

fn check_channels(batch: &[Tensor], channels: usize) -> Result<()> {
    for x in batch {
        if x.channels() != channels {
            return Err(NnError::ChannelMismatch {
                expected: channels,
                found: x.channels(),
            });
        }
    }
    Ok(())
}

/// Normalises `batch` in place. Returns the cache in TRAIN mode.
pub(crate) fn batchnorm_in_place(
    batch: &mut [Tensor],
    state: &mut NormState,
    mode: Mode,
) -> Result<Option<NormCache>> {
    let ch = state.channels();
    check_channels(batch, ch)?;
    match mode {
        Mode::Eval => {
            let inv: Vec<f64> = state
                .running_var
                .iter()
                .map(|v| 1.0 / (v + state.epsilon).sqrt())
                .collect();
            for x in batch.iter_mut() {
                for row in x.as_mut_slice().chunks_exact_mut(ch) {
                    for c in 0..ch {
                        row[c] = (row[c] - state.running_mean[c]) * inv[c];
                    }
                }
            }
            Ok(None)
        }
        Mode::Train => {
            if batch.len() < 2 {
                return Err(NnError::BatchTooSmall(batch.len()));
            }
            let n = batch.iter().map(Tensor::width).sum::<usize>() as f64;
            let mut mean = vec![0.0; ch];
            for x in batch.iter() {
                for row in x.as_slice().chunks_exact(ch) {
                    for c in 0..ch {
                        mean[c] += row[c];
                    }
                }
            }
            mean.iter_mut().for_each(|m| *m /= n);
            let mut var = vec![0.0; ch];
            for x in batch.iter() {
                for row in x.as_slice().chunks_exact(ch) {
                    for c in 0..ch {
                        let d = row[c] - mean[c];
                        var[c] += d * d;
                    }
                }
            }
            var.iter_mut().for_each(|v| *v /= n);
            let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + state.epsilon).sqrt()).collect();
            for x in batch.iter_mut() {
                for row in x.as_mut_slice().chunks_exact_mut(ch) {
                    for c in 0..ch {
                        row[c] = (row[c] - mean[c]) * inv_std[c];
                    }
                }
            }
            let m = state.momentum;
            for c in 0..ch {
                state.running_mean[c] = m * state.running_mean[c] + (1.0 - m) * mean[c];
                state.running_var[c] = m * state.running_var[c] + (1.0 - m) * var[c];
            }
            state.batch_mean = mean;
            state.batch_var = var;
            Ok(Some(NormCache { inv_std }))
        }
    }
}

/// Batch normalisation without affine parameters.
///
/// TRAIN normalises by the statistics over batch and width and updates the
/// running averages; EVAL normalises by the running averages.
pub fn batchnorm_forward(
    batch: &[Tensor],
    state: &mut NormState,
    mode: Mode,
) -> Result<(Vec<Tensor>, Option<NormCache>)> {
    let mut out = batch.to_vec();
    let cache = batchnorm_in_place(&mut out, state, mode)?;
    Ok((out, cache))
}

/// Input gradient of TRAIN-mode normalisation, given its output `xhat`.
pub fn batchnorm_backward(xhat: &[Tensor], cache: &NormCache, grad_y: &[Tensor]) -> Result<Vec<Tensor>> {
    let ch = cache.inv_std.len();
    if xhat.len() != grad_y.len() || xhat.iter().zip(grad_y).any(|(a, b)| a.shape() != b.shape()) {
        return Err(NnError::ShapeMismatch("normalised output vs gradient".into()));
    }
    check_channels(xhat, ch)?;
    let n = xhat.iter().map(Tensor::width).sum::<usize>() as f64;
    let mut sum_g = vec![0.0; ch];
    let mut sum_gx = vec![0.0; ch];
    for (x, g) in xhat.iter().zip(grad_y) {
        for (xr, gr) in x.as_slice().chunks_exact(ch).zip(g.as_slice().chunks_exact(ch)) {
            for c in 0..ch {
                sum_g[c] += gr[c];
                sum_gx[c] += gr[c] * xr[c];
            }
        }
    }
    let mean_g: Vec<f64> = sum_g.iter().map(|s| s / n).collect();
    let mean_gx: Vec<f64> = sum_gx.iter().map(|s| s / n).collect();
    Ok(xhat
        .iter()
        .zip(grad_y)
        .map(|(x, g)| {
            let mut out = g.clone();
            for (o, xr) in out.as_mut_slice().chunks_exact_mut(ch).zip(x.as_slice().chunks_exact(ch)) {
                for c in 0..ch {
                    o[c] = cache.inv_std[c] * (o[c] - mean_g[c] - xr[c] * mean_gx[c]);
                }
            }
            out
        })
        .collect())
}

/// Trainable per-channel gain and shift.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleParams {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl ScaleParams {
    pub fn identity(channels: usize) -> ScaleParams {
        ScaleParams {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn param_count(&self) -> usize {
        self.gamma.len() + self.beta.len()
    }

    fn check(&self, x: &Tensor) -> Result<()> {
        if x.channels() != self.channels() {
            return Err(NnError::ChannelMismatch {
                expected: self.channels(),
                found: x.channels(),
            });
        }
        Ok(())
    }

    pub(crate) fn apply_in_place(&self, x: &mut Tensor) -> Result<()> {
        self.check(x)?;
        let ch = self.channels();
        for row in x.as_mut_slice().chunks_exact_mut(ch) {
            for c in 0..ch {
                row[c] = self.gamma[c] * row[c] + self.beta[c];
            }
        }
        Ok(())
    }

    /// Accumulates parameter gradients and turns `grad` into the input
    /// gradient in place.
    pub(crate) fn backward_in_place(
        &self,
        x: &Tensor,
        grad: &mut Tensor,
        grad_gamma: &mut [f64],
        grad_beta: &mut [f64],
    ) -> Result<()> {
        self.check(x)?;
        x.same_shape(grad)?;
        let ch = self.channels();
        for (g, xr) in grad.as_mut_slice().chunks_exact_mut(ch).zip(x.as_slice().chunks_exact(ch)) {
            for c in 0..ch {
                grad_gamma[c] += xr[c] * g[c];
                grad_beta[c] += g[c];
                g[c] *= self.gamma[c];
            }
        }
        Ok(())
    }
}

/// `y[t][c] = gamma[c] * x[t][c] + beta[c]`.
pub fn scale_forward(x: &Tensor, p: &ScaleParams) -> Result<Tensor> {
    let mut y = x.clone();
    p.apply_in_place(&mut y)?;
    Ok(y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaleGrads {
    pub grad_x: Tensor,
    pub grad_gamma: Vec<f64>,
    pub grad_beta: Vec<f64>,
}

pub fn scale_backward(x: &Tensor, p: &ScaleParams, grad_y: &Tensor) -> Result<ScaleGrads> {
    let mut grad_x = grad_y.clone();
    let mut grad_gamma = vec![0.0; p.channels()];
    let mut grad_beta = vec![0.0; p.channels()];
    p.backward_in_place(x, &mut grad_x, &mut grad_gamma, &mut grad_beta)?;
    Ok(ScaleGrads {
        grad_x,
        grad_gamma,
        grad_beta,
    })
}
