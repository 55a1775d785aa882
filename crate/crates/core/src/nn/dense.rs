use rand::Rng;

use super::{he_normal, NnError, Result};

/// Fully connected layer. Weights are stored `[input][output]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseParams {
    pub fn zeros(inputs: usize, outputs: usize) -> DenseParams {
        DenseParams {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    pub fn he_init<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> DenseParams {
        DenseParams {
            weights: he_normal(inputs, inputs * outputs, rng),
            ..DenseParams::zeros(inputs, outputs)
        }
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.inputs {
            return Err(NnError::ShapeMismatch(format!(
                "dense layer expects {} inputs, got {}",
                self.inputs,
                x.len()
            )));
        }
        Ok(())
    }
}

/// `logits = x^T W + b`.
pub fn dense_forward(x: &[f64], p: &DenseParams) -> Result<Vec<f64>> {
    p.check_input(x)?;
    let mut out = p.bias.clone();
    for (xi, row) in x.iter().zip(p.weights.chunks_exact(p.outputs)) {
        for (o, w) in out.iter_mut().zip(row) {
            *o += xi * w;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrads {
    pub grad_x: Vec<f64>,
    pub grad_weights: Vec<f64>,
    pub grad_bias: Vec<f64>,
}

pub(crate) fn dense_accumulate(x: &[f64], p: &DenseParams, grad_y: &[f64], gw: &mut [f64], gb: &mut [f64]) -> Vec<f64> {
    let mut gx = vec![0.0; p.inputs];
    for ((xi, row), (gwrow, g)) in x
        .iter()
        .zip(p.weights.chunks_exact(p.outputs))
        .zip(gw.chunks_exact_mut(p.outputs).zip(gx.iter_mut()))
    {
        for o in 0..p.outputs {
            gwrow[o] += xi * grad_y[o];
            *g += row[o] * grad_y[o];
        }
    }
    for (b, g) in gb.iter_mut().zip(grad_y) {
        *b += g;
    }
    gx
}

pub fn dense_backward(x: &[f64], p: &DenseParams, grad_y: &[f64]) -> Result<DenseGrads> {
    p.check_input(x)?;
    if grad_y.len() != p.outputs {
        return Err(NnError::ShapeMismatch(format!(
            "dense layer has {} outputs, gradient has {}",
            p.outputs,
            grad_y.len()
        )));
    }
    let mut grad_weights = vec![0.0; p.weights.len()];
    let mut grad_bias = vec![0.0; p.outputs];
    let grad_x = dense_accumulate(x, p, grad_y, &mut grad_weights, &mut grad_bias);
    Ok(DenseGrads {
        grad_x,
        grad_weights,
        grad_bias,
    })
}
