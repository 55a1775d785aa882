use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::spec::{ArchitectureSpec, LayerKind};
use super::{ResnetError, Result};
use crate::nn::activation::{check_keep_prob, dropout_in_place, mask_in_place, relu_in_place, relu_mask};
use crate::nn::dense::dense_accumulate;
use crate::nn::norm::batchnorm_in_place;
use crate::nn::{
    batchnorm_backward, conv_forward_batch, conv_input_grad_batch, conv_weight_grads_batch, dense_forward,
    maxpool_backward, maxpool_forward, softmax, ConvParams, DenseParams, Mode, NnError, NormCache, NormState,
    ScaleParams, Tensor,
};

type Batch = Vec<Tensor>;

/// Parameters and state of one table row.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Input,
    Conv(ConvParams),
    Norm(NormState),
    Scale(ScaleParams),
    Activation,
    Dropout,
    MaxPool,
    Add,
    Flatten,
    Dense(DenseParams),
}

impl Layer {
    /// Parameter count as derived from tensor shapes. Norm layers count
    /// their four stored statistics per channel.
    pub fn param_count(&self) -> usize {
        match self {
            Layer::Conv(p) => p.param_count(),
            Layer::Norm(s) => s.stored_values(),
            Layer::Scale(p) => p.param_count(),
            Layer::Dense(p) => p.param_count(),
            _ => 0,
        }
    }
}

/// A named parameter or statistics tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor<'a> {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: &'a [f64],
}

fn named<'a>(out: &mut Vec<NamedTensor<'a>>, layer: &str, suffix: &str, shape: Vec<usize>, values: &'a [f64]) {
    out.push(NamedTensor {
        name: format!("{layer}/{suffix}"),
        shape,
        values,
    });
}

/// The residual network described by an [`ArchitectureSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ArchitectureSpec,
    inputs: Vec<Vec<usize>>,
    layers: Vec<Layer>,
    keep_prob: f64,
}

/// Per-layer values kept by a TRAIN-mode forward pass for the backward pass.
enum Saved {
    Nothing,
    Conv(Arc<Batch>),
    Norm { xhat: Arc<Batch>, cache: NormCache },
    Scale(Arc<Batch>),
    Relu(Vec<Vec<bool>>),
    Dropout(Vec<Vec<bool>>),
    Pool { argmax: Vec<Vec<u32>>, width: usize },
    Flatten { width: usize, channels: usize },
    Dense(Arc<Batch>),
}

/// Backward-pass record of one TRAIN-mode batch.
pub struct Tape {
    saved: Vec<Saved>,
    batch: usize,
}

impl Tape {
    pub fn batch_size(&self) -> usize {
        self.batch
    }
}

struct Run {
    logits: Vec<Vec<f64>>,
    saved: Option<Vec<Saved>>,
    norm_updates: Vec<(usize, NormState)>,
    shapes: Vec<(usize, usize)>,
}

fn take_input(values: &mut [Option<Arc<Batch>>], uses: &mut [usize], j: usize) -> Arc<Batch> {
    uses[j] -= 1;
    if uses[j] == 0 {
        values[j].take().expect("inputs precede their consumers")
    } else {
        values[j].clone().expect("inputs precede their consumers")
    }
}

/// EVAL passes draw no random numbers; this only satisfies the signature.
fn unused_rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(0)
}

fn owned(x: Arc<Batch>) -> Batch {
    Arc::try_unwrap(x).unwrap_or_else(|shared| (*shared).clone())
}

fn accumulate(slot: &mut Option<Batch>, g: Batch) {
    match slot {
        None => *slot = Some(g),
        Some(acc) => {
            for (a, b) in acc.iter_mut().zip(&g) {
                a.add_assign(b);
            }
        }
    }
}

impl Model {
    /// A model with zero weights, identity scales and default statistics.
    pub fn zeros(spec: ArchitectureSpec) -> Result<Model> {
        let inputs = spec.input_indices()?;
        let rows = spec.layers();
        let mut shapes: Vec<(usize, usize)> = Vec::with_capacity(rows.len());
        let mut layers = Vec::with_capacity(rows.len());
        for (row, ins) in rows.iter().zip(&inputs) {
            let prev = ins.first().map(|&j| shapes[j]).unwrap_or((row.width, row.channels));
            let (layer, shape) = match row.kind {
                LayerKind::InputLayer => (Layer::Input, (row.width, row.channels)),
                LayerKind::Conv1D => {
                    let k = row
                        .kernel_size
                        .ok_or_else(|| ResnetError::InvalidSpec(format!("{} has no kernel size", row.name)))?;
                    let p = ConvParams::zeros(k, prev.1, row.channels, row.use_bias);
                    (Layer::Conv(p), (prev.0, row.channels))
                }
                LayerKind::BatchNorm => (Layer::Norm(NormState::new(prev.1)), prev),
                LayerKind::Scale => (Layer::Scale(ScaleParams::identity(prev.1)), prev),
                LayerKind::Activation => (Layer::Activation, prev),
                LayerKind::Dropout => (Layer::Dropout, prev),
                LayerKind::MaxPooling1D => (Layer::MaxPool, (prev.0 / 2, prev.1)),
                LayerKind::Add => {
                    let other = shapes[ins[1]];
                    if other != prev {
                        return Err(ResnetError::InvalidSpec(format!(
                            "{} adds {prev:?} and {other:?}",
                            row.name
                        )));
                    }
                    (Layer::Add, prev)
                }
                LayerKind::Flatten => (Layer::Flatten, (prev.0 * prev.1.max(1), 0)),
                LayerKind::Dense => (Layer::Dense(DenseParams::zeros(prev.0, row.width)), (row.width, 0)),
            };
            if layer.param_count() != row.params {
                return Err(ResnetError::InvalidSpec(format!(
                    "{} declares {} parameters but its wiring gives {}",
                    row.name,
                    row.params,
                    layer.param_count()
                )));
            }
            shapes.push(shape);
            layers.push(layer);
        }
        Ok(Model {
            spec,
            inputs,
            layers,
            keep_prob: 0.5,
        })
    }

    /// He-normal weights, zero biases, identity scales.
    pub fn new<R: Rng + ?Sized>(spec: ArchitectureSpec, rng: &mut R) -> Result<Model> {
        let mut model = Model::zeros(spec)?;
        for layer in &mut model.layers {
            match layer {
                Layer::Conv(p) => *p = ConvParams::he_init(p.kernel_size, p.in_channels, p.out_channels, p.bias.is_some(), rng),
                Layer::Dense(p) => *p = DenseParams::he_init(p.inputs, p.outputs, rng),
                _ => {}
            }
        }
        Ok(model)
    }

    pub fn spec(&self) -> &ArchitectureSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_classes(&self) -> usize {
        self.spec.num_classes()
    }

    pub fn keep_prob(&self) -> f64 {
        self.keep_prob
    }

    pub fn set_keep_prob(&mut self, keep_prob: f64) -> Result<()> {
        check_keep_prob(keep_prob)?;
        self.keep_prob = keep_prob;
        Ok(())
    }

    /// One `(layer name, parameter count)` row per table row.
    pub fn param_report(&self) -> Vec<(String, usize)> {
        self.spec
            .layers()
            .iter()
            .zip(&self.layers)
            .map(|(row, layer)| (row.name.clone(), layer.param_count()))
            .collect()
    }

    /// Every stored tensor in table order: conv `kernel`/`bias`, norm
    /// `running_mean`/`running_var`/`batch_mean`/`batch_var`, scale
    /// `gamma`/`beta`, dense `kernel`/`bias`.
    pub fn named_tensors(&self) -> Vec<NamedTensor<'_>> {
        let mut out = Vec::new();
        for (row, layer) in self.spec.layers().iter().zip(&self.layers) {
            let mut push = |suffix: &str, shape: Vec<usize>, values| named(&mut out, &row.name, suffix, shape, values);
            match layer {
                Layer::Conv(p) => {
                    push("kernel", vec![p.kernel_size, p.in_channels, p.out_channels], &p.weights);
                    if let Some(b) = &p.bias {
                        push("bias", vec![b.len()], b);
                    }
                }
                Layer::Norm(s) => {
                    let c = s.channels();
                    push("running_mean", vec![c], &s.running_mean);
                    push("running_var", vec![c], &s.running_var);
                    push("batch_mean", vec![c], &s.batch_mean);
                    push("batch_var", vec![c], &s.batch_var);
                }
                Layer::Scale(p) => {
                    push("gamma", vec![p.channels()], &p.gamma);
                    push("beta", vec![p.channels()], &p.beta);
                }
                Layer::Dense(p) => {
                    push("kernel", vec![p.inputs, p.outputs], &p.weights);
                    push("bias", vec![p.outputs], &p.bias);
                }
                _ => {}
            }
        }
        out
    }

    /// Mutable views of the tensors listed by [`Model::named_tensors`], in
    /// the same order.
    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Conv(p) => {
                    out.push(&mut p.weights);
                    if let Some(b) = &mut p.bias {
                        out.push(b);
                    }
                }
                Layer::Norm(s) => {
                    out.push(&mut s.running_mean);
                    out.push(&mut s.running_var);
                    out.push(&mut s.batch_mean);
                    out.push(&mut s.batch_var);
                }
                Layer::Scale(p) => {
                    out.push(&mut p.gamma);
                    out.push(&mut p.beta);
                }
                Layer::Dense(p) => {
                    out.push(&mut p.weights);
                    out.push(&mut p.bias);
                }
                _ => {}
            }
        }
        out
    }

    /// Mutable view of one named tensor.
    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [f64]> {
        let idx = self.named_tensors().iter().position(|t| t.name == name)?;
        self.tensors_mut().into_iter().nth(idx)
    }

    /// Trainable tensors (conv, scale, dense) in table order. Gradients
    /// from [`Model::backward`] use the same order.
    pub fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for layer in &mut self.layers {
            match layer {
                Layer::Conv(p) => {
                    out.push(&mut p.weights);
                    if let Some(b) = &mut p.bias {
                        out.push(b);
                    }
                }
                Layer::Scale(p) => {
                    out.push(&mut p.gamma);
                    out.push(&mut p.beta);
                }
                Layer::Dense(p) => {
                    out.push(&mut p.weights);
                    out.push(&mut p.bias);
                }
                _ => {}
            }
        }
        out
    }

    /// Names of the trainable tensors, aligned with [`Model::trainable_mut`].
    pub fn trainable_names(&self) -> Vec<String> {
        self.named_tensors()
            .into_iter()
            .map(|t| t.name)
            .filter(|n| !n.contains("/running_") && !n.contains("/batch_"))
            .collect()
    }

    fn zero_gradients(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for layer in &self.layers {
            match layer {
                Layer::Conv(p) => {
                    out.push(vec![0.0; p.weights.len()]);
                    if let Some(b) = &p.bias {
                        out.push(vec![0.0; b.len()]);
                    }
                }
                Layer::Scale(p) => {
                    out.push(vec![0.0; p.channels()]);
                    out.push(vec![0.0; p.channels()]);
                }
                Layer::Dense(p) => {
                    out.push(vec![0.0; p.weights.len()]);
                    out.push(vec![0.0; p.outputs]);
                }
                _ => {}
            }
        }
        out
    }

    fn to_batch(&self, inputs: &[&[f64]]) -> Result<Batch> {
        let width = self.spec.input_width();
        if inputs.is_empty() {
            return Err(NnError::InvalidArgument("empty batch".into()).into());
        }
        inputs
            .iter()
            .map(|x| {
                if x.len() != width {
                    return Err(ResnetError::BadInputWidth {
                        expected: width,
                        found: x.len(),
                    });
                }
                Ok(Tensor::from_signal(x)?)
            })
            .collect()
    }

    fn run<R: Rng + ?Sized>(&self, batch: Batch, mode: Mode, rng: &mut R, record: bool) -> Result<Run> {
        let n = self.layers.len();
        let batch_size = batch.len();
        let mut uses = vec![0usize; n];
        for ins in &self.inputs {
            for &j in ins {
                uses[j] += 1;
            }
        }
        let mut values: Vec<Option<Arc<Batch>>> = vec![None; n];
        let mut saved: Vec<Saved> = Vec::new();
        let mut norm_updates = Vec::new();
        let mut shapes = Vec::with_capacity(n);
        let mut input = Some(batch);
        for i in 0..n {
            let mut keep = Saved::Nothing;
            let first = self.inputs[i].first().copied();
            macro_rules! arg {
                () => {
                    take_input(&mut values, &mut uses, first.expect("layer has an input"))
                };
            }
            let out: Arc<Batch> = match &self.layers[i] {
                Layer::Input => Arc::new(input.take().expect("single input layer")),
                Layer::Conv(p) => {
                    let x = arg!();
                    let y = conv_forward_batch(&x, p)?;
                    if record {
                        keep = Saved::Conv(x);
                    }
                    Arc::new(y)
                }
                Layer::Norm(state) => {
                    let mut x = owned(arg!());
                    let mut st = state.clone();
                    let cache = batchnorm_in_place(&mut x, &mut st, mode)?;
                    if mode == Mode::Train {
                        norm_updates.push((i, st));
                    }
                    let x = Arc::new(x);
                    if let (true, Some(cache)) = (record, cache) {
                        keep = Saved::Norm { xhat: x.clone(), cache };
                    }
                    x
                }
                Layer::Scale(p) => {
                    let x = arg!();
                    if record {
                        keep = Saved::Scale(x.clone());
                    }
                    let mut y = owned(x);
                    for t in &mut y {
                        p.apply_in_place(t)?;
                    }
                    Arc::new(y)
                }
                Layer::Activation => {
                    let mut y = owned(arg!());
                    if record {
                        keep = Saved::Relu(y.iter().map(relu_mask).collect());
                    }
                    y.iter_mut().for_each(relu_in_place);
                    Arc::new(y)
                }
                Layer::Dropout => {
                    let mut y = owned(arg!());
                    let masks: Vec<Vec<bool>> = y
                        .iter_mut()
                        .filter_map(|t| dropout_in_place(t, self.keep_prob, mode, rng))
                        .collect();
                    if record {
                        keep = Saved::Dropout(masks);
                    }
                    Arc::new(y)
                }
                Layer::MaxPool => {
                    let x = arg!();
                    let width = x.first().map_or(0, Tensor::width);
                    let (y, argmax): (Batch, Vec<Vec<u32>>) =
                        x.iter().map(maxpool_forward).collect::<std::result::Result<Vec<_>, _>>()?.into_iter().unzip();
                    if record {
                        keep = Saved::Pool { argmax, width };
                    }
                    Arc::new(y)
                }
                Layer::Add => {
                    let mut a = owned(arg!());
                    let b = take_input(&mut values, &mut uses, self.inputs[i][1]);
                    for (x, y) in a.iter_mut().zip(b.iter()) {
                        x.same_shape(y)?;
                        x.add_assign(y);
                    }
                    Arc::new(a)
                }
                Layer::Flatten => {
                    let x = owned(arg!());
                    let (width, channels) = x.first().map_or((0, 0), Tensor::shape);
                    if record {
                        keep = Saved::Flatten { width, channels };
                    }
                    let y = x
                        .into_iter()
                        .map(|t| Tensor::new(width * channels, 1, t.into_vec()))
                        .collect::<std::result::Result<Batch, _>>()?;
                    Arc::new(y)
                }
                Layer::Dense(p) => {
                    let x = arg!();
                    let y = x
                        .iter()
                        .map(|t| dense_forward(t.as_slice(), p).and_then(|l| Tensor::new(l.len(), 1, l)))
                        .collect::<std::result::Result<Batch, _>>()?;
                    if record {
                        keep = Saved::Dense(x);
                    }
                    Arc::new(y)
                }
            };
            let shape = out.first().map_or((0, 0), |t| match self.layers[i] {
                Layer::Flatten | Layer::Dense(_) => (t.width(), 0),
                _ => t.shape(),
            });
            shapes.push(shape);
            if record {
                saved.push(keep);
            }
            if uses[i] > 0 || i + 1 == n {
                values[i] = Some(out);
            }
        }
        let logits: Vec<Vec<f64>> = owned(values[n - 1].take().expect("output layer ran"))
            .into_iter()
            .map(Tensor::into_vec)
            .collect();
        debug_assert_eq!(logits.len(), batch_size);
        Ok(Run {
            logits,
            saved: record.then_some(saved),
            norm_updates,
            shapes,
        })
    }

    /// EVAL-mode logits for one example.
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        let batch = self.to_batch(&[x])?;
        let mut run = self.run(batch, Mode::Eval, &mut unused_rng(), false)?;
        Ok(run.logits.pop().expect("one example"))
    }

    /// EVAL-mode class probabilities for one example.
    pub fn predict_proba(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?)?)
    }

    /// EVAL-mode probabilities for many examples, in parallel. Each example
    /// is computed independently, so results do not depend on thread count.
    pub fn predict_batch(&self, xs: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        xs.par_iter().map(|x| self.predict_proba(x)).collect()
    }

    /// Probabilities for a batch in either mode. TRAIN mode updates the
    /// running statistics and needs at least two examples.
    pub fn forward_batch<R: Rng + ?Sized>(&mut self, xs: &[&[f64]], mode: Mode, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        let batch = self.to_batch(xs)?;
        let run = self.run(batch, mode, rng, false)?;
        self.apply_norm_updates(run.norm_updates);
        run.logits.iter().map(|l| Ok(softmax(l)?)).collect()
    }

    /// `(width, channels)` of every layer output for one EVAL pass; flat
    /// layers report `(length, 0)`.
    pub fn trace_shapes(&self, x: &[f64]) -> Result<Vec<(String, usize, usize)>> {
        let batch = self.to_batch(&[x])?;
        let run = self.run(batch, Mode::Eval, &mut unused_rng(), false)?;
        Ok(self
            .spec
            .layers()
            .iter()
            .zip(run.shapes)
            .map(|(row, (w, c))| (row.name.clone(), w, c))
            .collect())
    }

    /// TRAIN-mode forward pass that records a tape. Returns logits.
    pub fn forward_train<R: Rng + ?Sized>(&mut self, xs: &[&[f64]], rng: &mut R) -> Result<(Vec<Vec<f64>>, Tape)> {
        let batch = self.to_batch(xs)?;
        let batch_size = batch.len();
        let run = self.run(batch, Mode::Train, rng, true)?;
        self.apply_norm_updates(run.norm_updates);
        let tape = Tape {
            saved: run.saved.expect("recorded"),
            batch: batch_size,
        };
        Ok((run.logits, tape))
    }

    fn apply_norm_updates(&mut self, updates: Vec<(usize, NormState)>) {
        for (i, st) in updates {
            self.layers[i] = Layer::Norm(st);
        }
    }

    /// Gradients of `sum_b grad_logits[b] . logits[b]` with respect to the
    /// trainable tensors, in [`Model::trainable_mut`] order. Per-example
    /// contributions are summed in batch order.
    pub fn backward(&self, tape: Tape, grad_logits: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        let n = self.layers.len();
        if grad_logits.len() != tape.batch || tape.saved.len() != n {
            return Err(NnError::ShapeMismatch(format!(
                "{} logit gradients for a batch of {}",
                grad_logits.len(),
                tape.batch
            ))
            .into());
        }
        let mut slot = Vec::with_capacity(n);
        let mut next = 0;
        for layer in &self.layers {
            slot.push(next);
            next += match layer {
                Layer::Conv(p) => 1 + usize::from(p.bias.is_some()),
                Layer::Scale(_) | Layer::Dense(_) => 2,
                _ => 0,
            };
        }
        let mut grads_out = self.zero_gradients();
        let mut grads: Vec<Option<Batch>> = vec![None; n];
        grads[n - 1] = Some(
            grad_logits
                .iter()
                .map(|g| Tensor::new(g.len(), 1, g.clone()))
                .collect::<std::result::Result<Batch, _>>()?,
        );
        let mut saved = tape.saved;
        for i in (0..n).rev() {
            let Some(mut g) = grads[i].take() else { continue };
            let ins = &self.inputs[i];
            let wants_input = ins.first().is_some_and(|&j| !matches!(self.layers[j], Layer::Input));
            let record = std::mem::replace(&mut saved[i], Saved::Nothing);
            let passed: Option<Batch> = match (&self.layers[i], record) {
                (Layer::Input, _) => None,
                (Layer::Dense(p), Saved::Dense(x)) => {
                    let (gw, rest) = grads_out[slot[i]..].split_at_mut(1);
                    let mut gx = Vec::with_capacity(g.len());
                    for (xe, ge) in x.iter().zip(&g) {
                        if ge.width() != p.outputs {
                            return Err(NnError::ShapeMismatch("logit gradient length".into()).into());
                        }
                        let v = dense_accumulate(xe.as_slice(), p, ge.as_slice(), &mut gw[0], &mut rest[0]);
                        gx.push(Tensor::new(v.len(), 1, v)?);
                    }
                    Some(gx)
                }
                (Layer::Flatten, Saved::Flatten { width, channels }) => Some(
                    g.into_iter()
                        .map(|t| Tensor::new(width, channels, t.into_vec()))
                        .collect::<std::result::Result<Batch, _>>()?,
                ),
                (Layer::Activation, Saved::Relu(masks)) => {
                    for (t, m) in g.iter_mut().zip(&masks) {
                        mask_in_place(t, m, 1.0);
                    }
                    Some(g)
                }
                (Layer::Dropout, Saved::Dropout(masks)) => {
                    for (t, m) in g.iter_mut().zip(&masks) {
                        mask_in_place(t, m, 1.0 / self.keep_prob);
                    }
                    Some(g)
                }
                (Layer::Scale(p), Saved::Scale(x)) => {
                    let (gg, rest) = grads_out[slot[i]..].split_at_mut(1);
                    for (xe, ge) in x.iter().zip(g.iter_mut()) {
                        p.backward_in_place(xe, ge, &mut gg[0], &mut rest[0])?;
                    }
                    Some(g)
                }
                (Layer::Norm(_), Saved::Norm { xhat, cache }) => Some(batchnorm_backward(&xhat, &cache, &g)?),
                (Layer::Conv(p), Saved::Conv(x)) => {
                    let (gw, rest) = grads_out[slot[i]..].split_at_mut(1);
                    let gb = p.bias.as_ref().map(|_| &mut rest[0][..]);
                    conv_weight_grads_batch(&x, &g, p, &mut gw[0], gb);
                    drop(x);
                    wants_input.then(|| conv_input_grad_batch(&g, p))
                }
                (Layer::MaxPool, Saved::Pool { argmax, width }) => Some(
                    argmax
                        .iter()
                        .zip(&g)
                        .map(|(a, ge)| maxpool_backward(a, ge, width))
                        .collect::<std::result::Result<Batch, _>>()?,
                ),
                (Layer::Add, _) => {
                    accumulate(&mut grads[ins[1]], g.clone());
                    Some(g)
                }
                _ => {
                    return Err(NnError::InvalidArgument(format!(
                        "tape entry for {} does not match the model (was it recorded in TRAIN mode?)",
                        self.spec.layers()[i].name
                    ))
                    .into())
                }
            };
            if let (Some(gx), Some(&j)) = (passed, ins.first()) {
                accumulate(&mut grads[j], gx);
            }
        }
        Ok(grads_out)
    }
}

/// Builds the 34-layer network with `num_classes` outputs and He-normal
/// weights.
pub fn build_model<R: Rng + ?Sized>(num_classes: usize, rng: &mut R) -> Result<Model> {
    Model::new(ArchitectureSpec::resnet34(num_classes)?, rng)
}

/// `(layer name, parameter count)` for every table row.
pub fn param_report(model: &Model) -> Vec<(String, usize)> {
    model.param_report()
}
