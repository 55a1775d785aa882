use super::{NnError, Result};

/// A `width x channels` activation map, stored row-major (position-major).
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(width: usize, channels: usize, data: Vec<f64>) -> Result<Tensor> {
        if width == 0 || channels == 0 {
            return Err(NnError::ShapeMismatch(format!(
                "tensor dims must be positive, got {width}x{channels}"
            )));
        }
        if data.len() != width * channels {
            return Err(NnError::ShapeMismatch(format!(
                "{} values for a {width}x{channels} tensor",
                data.len()
            )));
        }
        Ok(Tensor {
            width,
            channels,
            data,
        })
    }

    pub fn zeros(width: usize, channels: usize) -> Tensor {
        Tensor::new(width, channels, vec![0.0; width * channels]).expect("positive dims")
    }

    /// A single-channel tensor holding `samples`.
    pub fn from_signal(samples: &[f64]) -> Result<Tensor> {
        Tensor::new(samples.len(), 1, samples.to_vec())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.width, self.channels)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, t: usize, c: usize) -> f64 {
        self.data[t * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, t: usize, c: usize, v: f64) {
        self.data[t * self.channels + c] = v;
    }

    pub(crate) fn same_shape(&self, other: &Tensor) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(NnError::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(())
    }

    pub(crate) fn add_assign(&mut self, other: &Tensor) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }
}

/// Elementwise sum of two equally shaped tensors.
///
/// The backward pass hands the incoming gradient unchanged to both inputs.
pub fn residual_add(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    a.same_shape(b)?;
    let mut out = a.clone();
    out.add_assign(b);
    Ok(out)
}
