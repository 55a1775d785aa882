use rand::Rng;
use rayon::prelude::*;

use super::{he_normal, NnError, Result, Tensor};

/// Weights of a stride-1 SAME-padded 1D convolution.
///
/// `weights` is laid out `[kernel][in][out]`. The bias is optional: the
/// residual body convolutions carry none.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams {
    pub kernel_size: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub weights: Vec<f64>,
    pub bias: Option<Vec<f64>>,
}

impl ConvParams {
    pub fn zeros(kernel_size: usize, in_channels: usize, out_channels: usize, bias: bool) -> Self {
        ConvParams {
            kernel_size,
            in_channels,
            out_channels,
            weights: vec![0.0; kernel_size * in_channels * out_channels],
            bias: bias.then(|| vec![0.0; out_channels]),
        }
    }

    pub fn he_init<R: Rng + ?Sized>(
        kernel_size: usize,
        in_channels: usize,
        out_channels: usize,
        bias: bool,
        rng: &mut R,
    ) -> Self {
        let mut p = Self::zeros(kernel_size, in_channels, out_channels, bias);
        p.weights = he_normal(kernel_size * in_channels, p.weights.len(), rng);
        p
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.bias.as_ref().map_or(0, Vec::len)
    }

    /// Left zero padding; the remaining `kernel_size - 1 - left` goes right.
    pub fn pad_left(&self) -> usize {
        (self.kernel_size - 1) / 2
    }

    #[inline]
    pub fn weight(&self, k: usize, i: usize, o: usize) -> f64 {
        self.weights[(k * self.in_channels + i) * self.out_channels + o]
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.channels() != self.in_channels {
            return Err(NnError::ChannelMismatch {
                expected: self.in_channels,
                found: x.channels(),
            });
        }
        Ok(())
    }

    /// Kernel reversed in time with the channel axes swapped: `[k'][out][in]`
    /// holding `w[K-1-k'][in][out]`. Turns the input gradient into a
    /// forward-style correlation.
    fn flipped(&self) -> Vec<f64> {
        let (kk, ci, co) = (self.kernel_size, self.in_channels, self.out_channels);
        let mut out = vec![0.0; self.weights.len()];
        for k in 0..kk {
            for i in 0..ci {
                for o in 0..co {
                    out[((kk - 1 - k) * co + o) * ci + i] = self.weight(k, i, o);
                }
            }
        }
        out
    }
}

/// Copies `x` into a zero-padded buffer with `left` leading and
/// `kernel - 1 - left` trailing rows.
fn padded(x: &[f64], width: usize, channels: usize, kernel: usize, left: usize) -> Vec<f64> {
    let mut buf = vec![0.0; (width + kernel - 1) * channels];
    buf[left * channels..(left + width) * channels].copy_from_slice(&x[..width * channels]);
    buf
}

/// `out[t][o] += sum_{k,i} pad[(t+k)][i] * w[k][i][o]` for `t < width`.
///
/// Reads the padded rows as an overlapping `width x (kernel*cin)` matrix
/// with row stride `cin`, so the correlation is a single GEMM.
fn correlate_into(pad: &[f64], width: usize, cin: usize, kernel: usize, w: &[f64], cout: usize, out: &mut [f64]) {
    debug_assert!(pad.len() >= (width + kernel - 1) * cin);
    debug_assert_eq!(w.len(), kernel * cin * cout);
    debug_assert_eq!(out.len(), width * cout);
    // SAFETY: row t of A spans pad[t*cin .. t*cin + kernel*cin], in bounds for
    // t < width by the assertion above; B and C are dense row-major and C
    // does not alias A or B.
    unsafe {
        matrixmultiply::dgemm(
            width,
            kernel * cin,
            cout,
            1.0,
            pad.as_ptr(),
            cin as isize,
            1,
            w.as_ptr(),
            cout as isize,
            1,
            1.0,
            out.as_mut_ptr(),
            cout as isize,
            1,
        );
    }
}

fn forward_one(x: &Tensor, p: &ConvParams) -> Tensor {
    let width = x.width();
    let mut out = match &p.bias {
        Some(b) => b.iter().copied().cycle().take(width * p.out_channels).collect(),
        None => vec![0.0; width * p.out_channels],
    };
    let pad = padded(x.as_slice(), width, p.in_channels, p.kernel_size, p.pad_left());
    correlate_into(&pad, width, p.in_channels, p.kernel_size, &p.weights, p.out_channels, &mut out);
    Tensor::new(width, p.out_channels, out).expect("shape")
}

/// SAME-padded, stride-1 convolution (cross-correlation, as in Keras).
///
/// `y[t][o] = b[o] + sum_{k,i} x[t + k - (K-1)/2][i] * w[k][i][o]`, with
/// zeros outside the signal.
pub fn conv1d_forward(x: &Tensor, p: &ConvParams) -> Result<Tensor> {
    p.check_input(x)?;
    Ok(forward_one(x, p))
}

pub(crate) fn conv_forward_batch(xs: &[Tensor], p: &ConvParams) -> Result<Vec<Tensor>> {
    for x in xs {
        p.check_input(x)?;
    }
    Ok(xs.par_iter().map(|x| forward_one(x, p)).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvGrads {
    pub grad_x: Tensor,
    pub grad_weights: Vec<f64>,
    pub grad_bias: Option<Vec<f64>>,
}

/// Adds `x`'s contribution to the weight and bias gradients.
fn accumulate_weight_grads(x: &Tensor, gy: &Tensor, p: &ConvParams, gw: &mut [f64], gb: Option<&mut [f64]>) {
    let (width, cin, cout, kk) = (x.width(), p.in_channels, p.out_channels, p.kernel_size);
    let pad = padded(x.as_slice(), width, cin, kk, p.pad_left());
    // gw[(k*cin + i)][o] += sum_t pad[(t+k)*cin + i] * gy[t][o]
    // SAFETY: A is the transposed overlapping view of `pad` (row stride 1,
    // column stride cin); its largest index is (width-1)*cin + kk*cin - 1,
    // inside `pad`. C = gw is dense and disjoint from A and B.
    unsafe {
        matrixmultiply::dgemm(
            kk * cin,
            width,
            cout,
            1.0,
            pad.as_ptr(),
            1,
            cin as isize,
            gy.as_slice().as_ptr(),
            cout as isize,
            1,
            1.0,
            gw.as_mut_ptr(),
            cout as isize,
            1,
        );
    }
    if let Some(gb) = gb {
        for t in 0..width {
            for (o, g) in gb.iter_mut().enumerate() {
                *g += gy.get(t, o);
            }
        }
    }
}

fn input_grad_one(gy: &Tensor, p: &ConvParams, flipped: &[f64]) -> Tensor {
    let (width, cin, cout, kk) = (gy.width(), p.in_channels, p.out_channels, p.kernel_size);
    // gx[s][i] = sum_{k', o} gpad[s + k'][o] * w[K-1-k'][i][o], with the
    // gradient padded by the mirrored amounts.
    let pad = padded(gy.as_slice(), width, cout, kk, kk - 1 - p.pad_left());
    let mut out = vec![0.0; width * cin];
    correlate_into(&pad, width, cout, kk, flipped, cin, &mut out);
    Tensor::new(width, cin, out).expect("shape")
}

pub(crate) fn conv_input_grad_batch(grads: &[Tensor], p: &ConvParams) -> Vec<Tensor> {
    let flipped = p.flipped();
    grads.par_iter().map(|g| input_grad_one(g, p, &flipped)).collect()
}

/// Accumulates weight gradients over a batch in example order.
pub(crate) fn conv_weight_grads_batch(
    xs: &[Tensor],
    grads: &[Tensor],
    p: &ConvParams,
    gw: &mut [f64],
    mut gb: Option<&mut [f64]>,
) {
    for (x, g) in xs.iter().zip(grads) {
        accumulate_weight_grads(x, g, p, gw, gb.as_deref_mut());
    }
}

/// Exact gradients of [`conv1d_forward`] for a single example.
pub fn conv1d_backward(x: &Tensor, p: &ConvParams, grad_y: &Tensor) -> Result<ConvGrads> {
    p.check_input(x)?;
    if grad_y.shape() != (x.width(), p.out_channels) {
        return Err(NnError::ShapeMismatch(format!(
            "grad_y {:?} for output {:?}",
            grad_y.shape(),
            (x.width(), p.out_channels)
        )));
    }
    let mut grad_weights = vec![0.0; p.weights.len()];
    let mut grad_bias = p.bias.as_ref().map(|b| vec![0.0; b.len()]);
    accumulate_weight_grads(x, grad_y, p, &mut grad_weights, grad_bias.as_deref_mut());
    let grad_x = input_grad_one(grad_y, p, &p.flipped());
    Ok(ConvGrads {
        grad_x,
        grad_weights,
        grad_bias,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Direct summation, k-major then i, zero outside the signal.
    pub(crate) fn conv_oracle(x: &Tensor, p: &ConvParams) -> Tensor {
        let left = (p.kernel_size - 1) / 2;
        let mut y = Tensor::zeros(x.width(), p.out_channels);
        for t in 0..x.width() {
            for o in 0..p.out_channels {
                let mut acc = 0.0;
                for k in 0..p.kernel_size {
                    let src = t as isize + k as isize - left as isize;
                    if src < 0 || src >= x.width() as isize {
                        continue;
                    }
                    for i in 0..p.in_channels {
                        acc += x.get(src as usize, i) * p.weights[(k * p.in_channels + i) * p.out_channels + o];
                    }
                }
                let b = p.bias.as_ref().map_or(0.0, |b| b[o]);
                y.set(t, o, b + acc);
            }
        }
        y
    }

    fn random_case(rng: &mut ChaCha8Rng, width: usize, cin: usize, cout: usize, k: usize) -> (Tensor, ConvParams) {
        let x = Tensor::new(width, cin, (0..width * cin).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let mut p = ConvParams::he_init(k, cin, cout, true, rng);
        for b in p.bias.as_mut().unwrap() {
            *b = rng.random_range(-1.0..1.0);
        }
        (x, p)
    }

    #[test]
    fn zero_input_gives_bias() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (_, p) = random_case(&mut rng, 5, 2, 3, 16);
        let y = conv1d_forward(&Tensor::zeros(5, 2), &p).unwrap();
        for t in 0..5 {
            for o in 0..3 {
                assert_eq!(y.get(t, o), p.bias.as_ref().unwrap()[o]);
            }
        }
    }

    #[test]
    fn first_layer_parameter_count() {
        assert_eq!(ConvParams::zeros(16, 1, 64, true).param_count(), 1088);
        assert_eq!(ConvParams::zeros(16, 64, 64, false).param_count(), 65536);
    }

    #[test]
    fn matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (x, p) = random_case(&mut rng, 7, 2, 2, 3);
        let fast = conv1d_forward(&x, &p).unwrap();
        let slow = conv_oracle(&x, &p);
        for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn same_padding_preserves_width() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for width in 1..40 {
            let (x, p) = random_case(&mut rng, width, 1, 2, 16);
            assert_eq!(conv1d_forward(&x, &p).unwrap().width(), width);
        }
    }

    #[test]
    fn channel_mismatch() {
        let p = ConvParams::zeros(3, 2, 2, false);
        assert_eq!(
            conv1d_forward(&Tensor::zeros(4, 3), &p),
            Err(NnError::ChannelMismatch { expected: 2, found: 3 })
        );
    }

    #[test]
    fn zero_upstream_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (x, p) = random_case(&mut rng, 6, 2, 3, 4);
        let g = conv1d_backward(&x, &p, &Tensor::zeros(6, 3)).unwrap();
        assert!(g.grad_x.as_slice().iter().all(|&v| v == 0.0));
        assert!(g.grad_weights.iter().all(|&v| v == 0.0));
        assert!(g.grad_bias.unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bias_gradient_sums_over_positions() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (x, p) = random_case(&mut rng, 6, 2, 3, 4);
        let gy = Tensor::new(6, 3, (0..18).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let g = conv1d_backward(&x, &p, &gy).unwrap();
        for o in 0..3 {
            let s: f64 = (0..6).map(|t| gy.get(t, o)).sum();
            assert!((g.grad_bias.as_ref().unwrap()[o] - s).abs() < 1e-12);
        }
    }
}
