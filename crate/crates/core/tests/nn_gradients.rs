use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sleepstack::nn::{
    batchnorm_backward, batchnorm_forward, conv1d_backward, conv1d_forward, dense_backward, dense_forward,
    maxpool_backward, maxpool_forward, relu, relu_backward, scale_backward, scale_forward, softmax,
    weighted_softmax_ce, ClassWeights, ConvParams, DenseParams, Mode, NormState, ScaleParams, Tensor,
};

const H: f64 = 1e-5;

fn close(analytic: f64, numeric: f64) -> bool {
    (analytic - numeric).abs() <= 1e-4 * analytic.abs().max(numeric.abs()) + 1e-8
}

/// Values kept away from zero so ReLU kinks are not crossed.
fn away_from_zero(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let v: f64 = rng.random_range(-2.0..2.0);
        if v.abs() >= 1e-3 {
            return v;
        }
    }
}

fn random_tensor(rng: &mut ChaCha8Rng, w: usize, c: usize) -> Tensor {
    Tensor::new(w, c, (0..w * c).map(|_| away_from_zero(rng)).collect()).unwrap()
}

fn dot(a: &Tensor, b: &Tensor) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

/// Direct nested-loop convolution, k-major then input channel.
fn conv_reference(x: &Tensor, p: &ConvParams) -> Tensor {
    let (w, cin) = x.shape();
    let k_len = p.kernel_size;
    let left = (k_len - 1) / 2;
    let mut y = Tensor::zeros(w, p.out_channels);
    for t in 0..w {
        for o in 0..p.out_channels {
            let mut acc = p.bias.as_ref().map_or(0.0, |b| b[o]);
            for k in 0..k_len {
                let src = t as isize + k as isize - left as isize;
                if src < 0 || src >= w as isize {
                    continue;
                }
                for i in 0..cin {
                    acc += x.get(src as usize, i) * p.weights[(k * cin + i) * p.out_channels + o];
                }
            }
            y.set(t, o, acc);
        }
    }
    y
}

fn random_conv(rng: &mut ChaCha8Rng, k: usize, cin: usize, cout: usize, bias: bool) -> ConvParams {
    let mut p = ConvParams::zeros(k, cin, cout, bias);
    p.weights.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    if let Some(b) = &mut p.bias {
        b.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    }
    p
}

#[test]
fn conv_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for (w, cin, cout, k) in [(7, 2, 2, 3), (8, 3, 2, 16), (5, 1, 3, 4), (6, 2, 1, 1)] {
        let x = random_tensor(&mut rng, w, cin);
        let p = random_conv(&mut rng, k, cin, cout, true);
        let gy = random_tensor(&mut rng, w, cout);
        let g = conv1d_backward(&x, &p, &gy).unwrap();
        let loss = |x: &Tensor, p: &ConvParams| dot(&conv1d_forward(x, p).unwrap(), &gy);
        for idx in 0..x.as_slice().len() {
            let (mut a, mut b) = (x.clone(), x.clone());
            a.as_mut_slice()[idx] += H;
            b.as_mut_slice()[idx] -= H;
            let num = (loss(&a, &p) - loss(&b, &p)) / (2.0 * H);
            assert!(close(g.grad_x.as_slice()[idx], num), "grad_x[{idx}]");
        }
        for idx in 0..p.weights.len() {
            let (mut a, mut b) = (p.clone(), p.clone());
            a.weights[idx] += H;
            b.weights[idx] -= H;
            let num = (loss(&x, &a) - loss(&x, &b)) / (2.0 * H);
            assert!(close(g.grad_weights[idx], num), "grad_w[{idx}]");
        }
        let gb = g.grad_bias.unwrap();
        for o in 0..cout {
            let (mut a, mut b) = (p.clone(), p.clone());
            a.bias.as_mut().unwrap()[o] += H;
            b.bias.as_mut().unwrap()[o] -= H;
            let num = (loss(&x, &a) - loss(&x, &b)) / (2.0 * H);
            assert!(close(gb[o], num));
            let sum: f64 = (0..w).map(|t| gy.get(t, o)).sum();
            assert!((gb[o] - sum).abs() < 1e-12);
        }
    }
}

#[test]
fn batchnorm_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (b, w, c) in [(2, 5, 1), (3, 4, 3), (4, 8, 2)] {
        let xs: Vec<Tensor> = (0..b).map(|_| random_tensor(&mut rng, w, c)).collect();
        let gys: Vec<Tensor> = (0..b).map(|_| random_tensor(&mut rng, w, c)).collect();
        let loss = |xs: &[Tensor]| {
            let (y, _) = batchnorm_forward(xs, &mut NormState::new(c), Mode::Train).unwrap();
            y.iter().zip(&gys).map(|(a, g)| dot(a, g)).sum::<f64>()
        };
        let (y, cache) = batchnorm_forward(&xs, &mut NormState::new(c), Mode::Train).unwrap();
        let gx = batchnorm_backward(&y, &cache.unwrap(), &gys).unwrap();
        for e in 0..b {
            for idx in 0..w * c {
                let (mut p, mut m) = (xs.clone(), xs.clone());
                p[e].as_mut_slice()[idx] += H;
                m[e].as_mut_slice()[idx] -= H;
                let num = (loss(&p) - loss(&m)) / (2.0 * H);
                assert!(close(gx[e].as_slice()[idx], num), "example {e} index {idx}");
            }
        }
    }
}

#[test]
fn scale_relu_dense_and_pool_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = random_tensor(&mut rng, 6, 3);
    let gy = random_tensor(&mut rng, 6, 3);
    let p = ScaleParams {
        gamma: vec![0.5, -1.5, 2.0],
        beta: vec![0.1, 0.0, -0.3],
    };
    let g = scale_backward(&x, &p, &gy).unwrap();
    for c in 0..3 {
        let (mut a, mut b) = (p.clone(), p.clone());
        a.gamma[c] += H;
        b.gamma[c] -= H;
        let num = (dot(&scale_forward(&x, &a).unwrap(), &gy) - dot(&scale_forward(&x, &b).unwrap(), &gy)) / (2.0 * H);
        assert!(close(g.grad_gamma[c], num));
    }
    for idx in 0..18 {
        let (mut a, mut b) = (x.clone(), x.clone());
        a.as_mut_slice()[idx] += H;
        b.as_mut_slice()[idx] -= H;
        let num = (dot(&scale_forward(&a, &p).unwrap(), &gy) - dot(&scale_forward(&b, &p).unwrap(), &gy)) / (2.0 * H);
        assert!(close(g.grad_x.as_slice()[idx], num));
        let num = (dot(&relu(&a), &gy) - dot(&relu(&b), &gy)) / (2.0 * H);
        assert!(close(relu_backward(&x, &gy).unwrap().as_slice()[idx], num));
    }

    let mut d = DenseParams::zeros(8, 3);
    d.weights.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
    d.bias = vec![0.2, -0.1, 0.4];
    let xv: Vec<f64> = (0..8).map(|_| away_from_zero(&mut rng)).collect();
    let gl = [0.3, -1.2, 0.7];
    let f = |x: &[f64], d: &DenseParams| dense_forward(x, d).unwrap().iter().zip(&gl).map(|(a, b)| a * b).sum::<f64>();
    let g = dense_backward(&xv, &d, &gl).unwrap();
    for idx in 0..8 {
        let (mut a, mut b) = (xv.clone(), xv.clone());
        a[idx] += H;
        b[idx] -= H;
        assert!(close(g.grad_x[idx], (f(&a, &d) - f(&b, &d)) / (2.0 * H)));
    }
    for idx in 0..24 {
        let (mut a, mut b) = (d.clone(), d.clone());
        a.weights[idx] += H;
        b.weights[idx] -= H;
        assert!(close(g.grad_weights[idx], (f(&xv, &a) - f(&xv, &b)) / (2.0 * H)));
    }

    // Distinct values, so no ties within a pooling pair.
    let xp = Tensor::new(7, 2, (0..14).map(|i| ((i * 7919) % 23) as f64 * 0.37 - 3.0).collect()).unwrap();
    let (y, arg) = maxpool_forward(&xp).unwrap();
    let gp = random_tensor(&mut rng, y.width(), 2);
    let gx = maxpool_backward(&arg, &gp, 7).unwrap();
    for idx in 0..14 {
        let (mut a, mut b) = (xp.clone(), xp.clone());
        a.as_mut_slice()[idx] += H;
        b.as_mut_slice()[idx] -= H;
        let num = (dot(&maxpool_forward(&a).unwrap().0, &gp) - dot(&maxpool_forward(&b).unwrap().0, &gp)) / (2.0 * H);
        assert!(close(gx.as_slice()[idx], num), "pool {idx}");
    }
}

#[test]
fn cross_entropy_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let weights = ClassWeights::new(vec![0.4, 2.0, 1.0, 0.9, 3.1]).unwrap();
    for _ in 0..50 {
        let logits: Vec<f64> = (0..5).map(|_| rng.random_range(-5.0..5.0)).collect();
        let label = rng.random_range(0..5);
        let (_, grad) = weighted_softmax_ce(&logits, label, &weights).unwrap();
        for k in 0..5 {
            let (mut a, mut b) = (logits.clone(), logits.clone());
            a[k] += H;
            b[k] -= H;
            let num = (weighted_softmax_ce(&a, label, &weights).unwrap().0
                - weighted_softmax_ce(&b, label, &weights).unwrap().0)
                / (2.0 * H);
            assert!((grad[k] - num).abs() < 1e-6);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn conv_matches_direct_summation(
        seed in any::<u64>(),
        width in 1usize..40,
        cin in 1usize..4,
        cout in 1usize..4,
        k in prop::sample::select(vec![1usize, 2, 3, 5, 16]),
        bias in any::<bool>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Tensor::new(width, cin, (0..width * cin).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
        let p = random_conv(&mut rng, k, cin, cout, bias);
        let fast = conv1d_forward(&x, &p).unwrap();
        let slow = conv_reference(&x, &p);
        prop_assert_eq!(fast.shape(), (width, cout));
        for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
            prop_assert!((a - b).abs() <= 1e-12, "{} vs {}", a, b);
        }
    }

    #[test]
    fn unit_weights_equal_plain_cross_entropy(logits in prop::collection::vec(-20.0f64..20.0, 2..7), pick in any::<prop::sample::Index>()) {
        let label = pick.index(logits.len());
        let (loss, _) = weighted_softmax_ce(&logits, label, &ClassWeights::uniform(logits.len())).unwrap();
        let plain = -softmax(&logits).unwrap()[label].ln();
        prop_assert!((loss - plain).abs() <= 1e-12 * plain.abs().max(1.0));
    }

    #[test]
    fn same_padding_preserves_width(width in 1usize..300) {
        let x = Tensor::zeros(width, 1);
        let p = ConvParams::zeros(16, 1, 2, true);
        prop_assert_eq!(conv1d_forward(&x, &p).unwrap().width(), width);
    }

    #[test]
    fn pooling_halves_rounding_down(width in 2usize..5000) {
        let (y, _) = maxpool_forward(&Tensor::zeros(width, 1)).unwrap();
        prop_assert_eq!(y.width(), width / 2);
    }
}
