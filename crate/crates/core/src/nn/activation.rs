use rand::Rng;

use super::{Mode, NnError, Result, Tensor};

pub fn relu(x: &Tensor) -> Tensor {
    let mut y = x.clone();
    relu_in_place(&mut y);
    y
}

pub(crate) fn relu_in_place(x: &mut Tensor) {
    for v in x.as_mut_slice() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Derivative mask of ReLU at `x`: 1 where `x > 0`, else 0 (including at 0).
pub fn relu_mask(x: &Tensor) -> Vec<bool> {
    x.as_slice().iter().map(|&v| v > 0.0).collect()
}

/// Applies a ReLU (or dropout) mask to an upstream gradient in place.
pub(crate) fn mask_in_place(grad: &mut Tensor, mask: &[bool], scale: f64) {
    for (g, &keep) in grad.as_mut_slice().iter_mut().zip(mask) {
        *g = if keep { *g * scale } else { 0.0 };
    }
}

pub fn relu_backward(x: &Tensor, grad_y: &Tensor) -> Result<Tensor> {
    x.same_shape(grad_y)?;
    let mut g = grad_y.clone();
    mask_in_place(&mut g, &relu_mask(x), 1.0);
    Ok(g)
}

pub(crate) fn check_keep_prob(keep_prob: f64) -> Result<()> {
    if !(keep_prob > 0.0 && keep_prob <= 1.0) {
        return Err(NnError::InvalidArgument(format!(
            "keep_prob must be in (0, 1], got {keep_prob}"
        )));
    }
    Ok(())
}

/// Inverted dropout in place. Returns the keep mask in TRAIN mode.
pub(crate) fn dropout_in_place<R: Rng + ?Sized>(
    x: &mut Tensor,
    keep_prob: f64,
    mode: Mode,
    rng: &mut R,
) -> Option<Vec<bool>> {
    if mode == Mode::Eval || keep_prob >= 1.0 {
        return None;
    }
    let scale = 1.0 / keep_prob;
    let mask: Vec<bool> = (0..x.as_slice().len()).map(|_| rng.random_bool(keep_prob)).collect();
    mask_in_place(x, &mask, scale);
    Some(mask)
}

/// Inverted dropout: in TRAIN mode each activation is zeroed with
/// probability `1 - keep_prob` and survivors are scaled by `1 / keep_prob`.
/// EVAL mode, or `keep_prob == 1`, is the identity.
pub fn dropout<R: Rng + ?Sized>(
    x: &Tensor,
    keep_prob: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Tensor, Option<Vec<bool>>)> {
    check_keep_prob(keep_prob)?;
    let mut y = x.clone();
    let mask = dropout_in_place(&mut y, keep_prob, mode, rng);
    Ok((y, mask))
}

pub fn dropout_backward(mask: Option<&[bool]>, keep_prob: f64, grad_y: &Tensor) -> Tensor {
    let mut g = grad_y.clone();
    if let Some(mask) = mask {
        mask_in_place(&mut g, mask, 1.0 / keep_prob);
    }
    g
}
