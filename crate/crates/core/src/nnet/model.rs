use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::NnetError;
use crate::math;
use crate::rng::{self, Rng};

/// Activation shape: `len` positions by `channels` values, stored
/// position-major (`[l][c]`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub len: usize,
    pub channels: usize,
}

impl Shape {
    pub const fn new(len: usize, channels: usize) -> Self {
        Self { len, channels }
    }

    pub fn size(self) -> usize {
        self.len * self.channels
    }
}

/// Shape of a 128-sample I/Q frame.
pub const FRAME_SHAPE: Shape = Shape::new(crate::sigsynth::FRAME_LEN, 2);

/// SELU constants. `scale = 1.0` gives the unscaled `x` / `a(e^x - 1)` form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeluConfig {
    pub a: f64,
    pub scale: f64,
}

impl Default for SeluConfig {
    fn default() -> Self {
        Self {
            a: 1.6733,
            scale: 1.0507,
        }
    }
}

impl SeluConfig {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.scale * x
        } else {
            self.scale * self.a * (math::exp(x) - 1.0)
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        if x > 0.0 {
            self.scale
        } else {
            self.scale * self.a * math::exp(x)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Linear,
    Selu,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayerSpec {
    /// Zero padding on both ends of the position axis.
    ZeroPad { pad: usize },
    Conv1d {
        filters: usize,
        kernel: usize,
        stride: usize,
        activation: Activation,
    },
    MaxPool { size: usize, stride: usize },
    /// Fully connected; flattens its input.
    Dense { units: usize, activation: Activation },
    /// Inverted dropout, active only in training mode.
    Dropout { p: f64 },
}

impl LayerSpec {
    fn output_shape(&self, input: Shape) -> Result<Shape, NnetError> {
        let bad = |why: &'static str| NnetError::BadArchitecture(why);
        match *self {
            LayerSpec::ZeroPad { pad } => Ok(Shape::new(input.len + 2 * pad, input.channels)),
            LayerSpec::Conv1d {
                filters,
                kernel,
                stride,
                ..
            } => {
                if filters == 0 || kernel == 0 || stride == 0 {
                    return Err(bad("conv1d needs positive filters, kernel and stride"));
                }
                if kernel > input.len {
                    return Err(bad("conv1d kernel longer than its input"));
                }
                if !(input.len - kernel).is_multiple_of(stride) {
                    return Err(bad("conv1d stride must divide the swept extent"));
                }
                Ok(Shape::new((input.len - kernel) / stride + 1, filters))
            }
            LayerSpec::MaxPool { size, stride } => {
                if size == 0 || stride == 0 || size > input.len {
                    return Err(bad("invalid pooling window"));
                }
                if !(input.len - size).is_multiple_of(stride) {
                    return Err(bad("pooling stride must divide the pooled extent"));
                }
                Ok(Shape::new((input.len - size) / stride + 1, input.channels))
            }
            LayerSpec::Dense { units, .. } => {
                if units == 0 {
                    return Err(bad("dense layer needs at least one unit"));
                }
                Ok(Shape::new(1, units))
            }
            LayerSpec::Dropout { p } => {
                if !(0.0..1.0).contains(&p) {
                    return Err(bad("dropout probability must lie in [0, 1)"));
                }
                Ok(input)
            }
        }
    }

    fn param_count(&self, input: Shape) -> usize {
        match *self {
            LayerSpec::Conv1d { filters, kernel, .. } => filters * kernel * input.channels + filters,
            LayerSpec::Dense { units, .. } => units * input.size() + units,
            _ => 0,
        }
    }
}

/// Widths for [`NeuralModel::reduced`].
#[derive(Debug, Clone, PartialEq)]
pub struct ArchConfig {
    /// Filters of the first conv block, then of each further block.
    pub conv_filters: Vec<usize>,
    pub kernel: usize,
    pub dense_units: Vec<usize>,
    pub dropout: f64,
}

impl Default for ArchConfig {
    fn default() -> Self {
        Self {
            conv_filters: vec![16, 32, 32],
            kernel: 3,
            dense_units: vec![64, 32],
            dropout: 0.5,
        }
    }
}

impl ArchConfig {
    pub fn layers(&self, outputs: usize) -> Vec<LayerSpec> {
        let mut layers = Vec::new();
        for &filters in &self.conv_filters {
            layers.push(LayerSpec::ZeroPad { pad: self.kernel / 2 });
            layers.push(LayerSpec::Conv1d {
                filters,
                kernel: self.kernel,
                stride: 1,
                activation: Activation::Selu,
            });
            layers.push(LayerSpec::MaxPool { size: 2, stride: 2 });
        }
        for &units in &self.dense_units {
            layers.push(LayerSpec::Dense {
                units,
                activation: Activation::Selu,
            });
            if self.dropout > 0.0 {
                layers.push(LayerSpec::Dropout { p: self.dropout });
            }
        }
        layers.push(LayerSpec::Dense {
            units: outputs,
            activation: Activation::Linear,
        });
        layers
    }
}

/// A layered classifier with a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuralModel {
    input: Shape,
    layers: Vec<LayerSpec>,
    shapes: Vec<Shape>,
    offsets: Vec<usize>,
    params: Vec<f64>,
    labels: Vec<String>,
    selu: SeluConfig,
}

impl NeuralModel {
    /// Zero-initialized model. Fails if the layer shapes do not chain or the
    /// last layer's width differs from the number of labels.
    pub fn new(input: Shape, layers: Vec<LayerSpec>, labels: Vec<String>, selu: SeluConfig) -> Result<Self, NnetError> {
        if selu.a <= 0.0 || selu.scale <= 0.0 {
            return Err(NnetError::BadArchitecture("SELU constants must be positive"));
        }
        if input.size() == 0 {
            return Err(NnetError::BadArchitecture("empty input shape"));
        }
        let mut shapes = Vec::with_capacity(layers.len() + 1);
        let mut offsets = Vec::with_capacity(layers.len() + 1);
        shapes.push(input);
        let mut total = 0;
        for layer in &layers {
            let inp = *shapes.last().unwrap();
            offsets.push(total);
            total += layer.param_count(inp);
            shapes.push(layer.output_shape(inp)?);
        }
        offsets.push(total);
        let out = *shapes.last().unwrap();
        if out.size() != labels.len() || labels.len() < 2 {
            return Err(NnetError::BadArchitecture("output width must equal label count (at least 2)"));
        }
        Ok(Self {
            input,
            layers,
            shapes,
            offsets,
            params: vec![0.0; total],
            labels,
            selu,
        })
    }

    /// The default reduced architecture over I/Q frames, He-initialized.
    pub fn reduced(arch: &ArchConfig, labels: Vec<String>, seed: u64) -> Result<Self, NnetError> {
        let layers = arch.layers(labels.len());
        let mut m = Self::new(FRAME_SHAPE, layers, labels, SeluConfig::default())?;
        m.init_he(seed);
        Ok(m)
    }

    /// Seeded He-style initialization: weights `N(0, 2/fan_in)`, zero biases.
    pub fn init_he(&mut self, seed: u64) {
        let mut rng = rng::stream(seed, &[rng::tag::INIT]);
        for (i, layer) in self.layers.iter().enumerate() {
            let inp = self.shapes[i];
            let (fan_in, weights) = match *layer {
                LayerSpec::Conv1d { filters, kernel, .. } => {
                    (kernel * inp.channels, filters * kernel * inp.channels)
                }
                LayerSpec::Dense { units, .. } => (inp.size(), units * inp.size()),
                _ => continue,
            };
            let sd = math::sqrt(2.0 / fan_in as f64);
            let start = self.offsets[i];
            for w in &mut self.params[start..start + weights] {
                *w = sd * rng::normal(&mut rng);
            }
            for b in &mut self.params[start + weights..self.offsets[i + 1]] {
                *b = 0.0;
            }
        }
    }

    pub fn input_shape(&self) -> Shape {
        self.input
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn num_outputs(&self) -> usize {
        self.labels.len()
    }

    pub fn selu(&self) -> SeluConfig {
        self.selu
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<(), NnetError> {
        if params.len() != self.params.len() {
            return Err(NnetError::ParamMismatch {
                expected: self.params.len(),
                got: params.len(),
            });
        }
        self.params.copy_from_slice(params);
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    /// Parameter range `[start, end)` owned by layer `i`.
    pub fn layer_params(&self, i: usize) -> core::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    /// Index of the first dense layer; features are taken just before it.
    pub fn head_start(&self) -> usize {
        self.layers
            .iter()
            .position(|l| matches!(l, LayerSpec::Dense { .. }))
            .unwrap_or(self.layers.len())
    }

    /// Size of the flattened feature vector from [`NeuralModel::features`].
    pub fn feature_len(&self) -> usize {
        self.shapes[self.head_start()].size()
    }

    pub(crate) fn check_input(&self, x: &[f64]) -> Result<(), NnetError> {
        if x.len() != self.input.size() {
            return Err(NnetError::ShapeMismatch {
                expected: self.input.size(),
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Logits for one sample in inference mode.
    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>, NnetError> {
        self.check_input(x)?;
        let mut trace = Trace::new(self);
        self.forward_into(x, &mut trace, None);
        Ok(trace.acts.last().unwrap().clone())
    }

    /// Activations entering the dense head, flattened.
    pub fn features(&self, x: &[f64]) -> Result<Vec<f64>, NnetError> {
        self.check_input(x)?;
        let mut trace = Trace::new(self);
        let stop = self.head_start();
        self.forward_range(x, &mut trace, None, stop);
        Ok(trace.acts[stop].clone())
    }

    /// Inference-mode output of layer `upto - 1` (`upto = 0` is the input).
    pub fn activations(&self, x: &[f64], upto: usize) -> Result<Vec<f64>, NnetError> {
        self.check_input(x)?;
        if upto > self.layers.len() {
            return Err(NnetError::BadArchitecture("layer index past the end of the model"));
        }
        let mut trace = Trace::new(self);
        self.forward_range(x, &mut trace, None, upto);
        Ok(trace.acts[upto].clone())
    }

    pub(crate) fn forward_into(&self, x: &[f64], trace: &mut Trace, dropout: Option<&mut Rng>) {
        self.forward_range(x, trace, dropout, self.layers.len());
    }

    fn forward_range(&self, x: &[f64], trace: &mut Trace, mut dropout: Option<&mut Rng>, stop: usize) {
        trace.acts[0].copy_from_slice(x);
        for i in 0..stop {
            let (before, after) = trace.acts.split_at_mut(i + 1);
            let input = &before[i];
            let output = &mut after[0];
            let inp = self.shapes[i];
            let out = self.shapes[i + 1];
            let p = &self.params[self.offsets[i]..self.offsets[i + 1]];
            match self.layers[i] {
                LayerSpec::ZeroPad { pad } => {
                    output.fill(0.0);
                    let c = inp.channels;
                    output[pad * c..pad * c + input.len()].copy_from_slice(input);
                }
                LayerSpec::Conv1d {
                    filters,
                    kernel,
                    stride,
                    activation,
                } => {
                    let span = kernel * inp.channels;
                    let (w, b) = p.split_at(filters * span);
                    let pre = &mut trace.pre[i];
                    for l in 0..out.len {
                        let window = &input[l * stride * inp.channels..l * stride * inp.channels + span];
                        let row = &mut pre[l * filters..(l + 1) * filters];
                        for (f, z) in row.iter_mut().enumerate() {
                            *z = b[f] + dot(&w[f * span..(f + 1) * span], window);
                        }
                    }
                    activate(&self.selu, activation, pre, output);
                }
                LayerSpec::MaxPool { size, stride } => {
                    let c = inp.channels;
                    let arg = &mut trace.argmax[i];
                    for l in 0..out.len {
                        for ch in 0..c {
                            let mut best = (l * stride) * c + ch;
                            for s in 1..size {
                                let idx = (l * stride + s) * c + ch;
                                if input[idx] > input[best] {
                                    best = idx;
                                }
                            }
                            output[l * c + ch] = input[best];
                            arg[l * c + ch] = best as u32;
                        }
                    }
                }
                LayerSpec::Dense { units, activation } => {
                    let n = inp.size();
                    let (w, b) = p.split_at(units * n);
                    let pre = &mut trace.pre[i];
                    for (u, z) in pre.iter_mut().enumerate() {
                        *z = b[u] + dot(&w[u * n..(u + 1) * n], input);
                    }
                    activate(&self.selu, activation, pre, output);
                }
                LayerSpec::Dropout { p: rate } => {
                    let mask = &mut trace.mask[i];
                    match dropout.as_deref_mut() {
                        Some(rng) if rate > 0.0 => {
                            let keep = 1.0 / (1.0 - rate);
                            for m in mask.iter_mut() {
                                *m = if rng.random::<f64>() < rate { 0.0 } else { keep };
                            }
                        }
                        _ => mask.fill(1.0),
                    }
                    for ((o, x), m) in output.iter_mut().zip(input).zip(mask.iter()) {
                        *o = x * m;
                    }
                }
            }
        }
    }

    /// Backpropagates `dlogits` through a trace filled by `forward_into`,
    /// accumulating into `grad`.
    pub(crate) fn backward(&self, trace: &mut Trace, dlogits: &[f64], grad: &mut [f64]) {
        let n = self.layers.len();
        trace.dacts[n].copy_from_slice(dlogits);
        for i in (0..n).rev() {
            let (lower, upper) = trace.dacts.split_at_mut(i + 1);
            let din = &mut lower[i];
            let dout = &mut upper[0];
            let input = &trace.acts[i];
            let inp = self.shapes[i];
            let out = self.shapes[i + 1];
            let p = &self.params[self.offsets[i]..self.offsets[i + 1]];
            let g = &mut grad[self.offsets[i]..self.offsets[i + 1]];
            // Gradients into layer 0 are never needed.
            let need_din = i > 0;
            match self.layers[i] {
                LayerSpec::ZeroPad { pad } => {
                    let c = inp.channels;
                    let n = din.len();
                    din.copy_from_slice(&dout[pad * c..pad * c + n]);
                }
                LayerSpec::Conv1d {
                    filters,
                    kernel,
                    stride,
                    activation,
                } => {
                    let span = kernel * inp.channels;
                    activation_grad(&self.selu, activation, &trace.pre[i], dout);
                    let (w, _) = p.split_at(filters * span);
                    let (gw, gb) = g.split_at_mut(filters * span);
                    if need_din {
                        din.fill(0.0);
                    }
                    for l in 0..out.len {
                        let start = l * stride * inp.channels;
                        let window = &input[start..start + span];
                        let drow = &dout[l * filters..(l + 1) * filters];
                        for (f, &d) in drow.iter().enumerate() {
                            if d == 0.0 {
                                continue;
                            }
                            gb[f] += d;
                            axpy(d, window, &mut gw[f * span..(f + 1) * span]);
                            if need_din {
                                axpy(d, &w[f * span..(f + 1) * span], &mut din[start..start + span]);
                            }
                        }
                    }
                }
                LayerSpec::MaxPool { .. } => {
                    din.fill(0.0);
                    for (d, &a) in dout.iter().zip(&trace.argmax[i]) {
                        din[a as usize] += d;
                    }
                }
                LayerSpec::Dense { units, activation } => {
                    let m = inp.size();
                    activation_grad(&self.selu, activation, &trace.pre[i], dout);
                    let (w, _) = p.split_at(units * m);
                    let (gw, gb) = g.split_at_mut(units * m);
                    if need_din {
                        din.fill(0.0);
                    }
                    for (u, &d) in dout.iter().enumerate().take(units) {
                        if d == 0.0 {
                            continue;
                        }
                        gb[u] += d;
                        axpy(d, input, &mut gw[u * m..(u + 1) * m]);
                        if need_din {
                            axpy(d, &w[u * m..(u + 1) * m], din);
                        }
                    }
                }
                LayerSpec::Dropout { .. } => {
                    for ((di, d), m) in din.iter_mut().zip(dout.iter()).zip(&trace.mask[i]) {
                        *di = d * m;
                    }
                }
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators let the compiler vectorize without reassociation.
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        for k in 0..4 {
            acc[k] += a[4 * c + k] * b[4 * c + k];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn activate(selu: &SeluConfig, act: Activation, pre: &[f64], out: &mut [f64]) {
    match act {
        Activation::Linear => out.copy_from_slice(pre),
        Activation::Selu => {
            for (o, &z) in out.iter_mut().zip(pre) {
                *o = selu.apply(z);
            }
        }
    }
}

fn activation_grad(selu: &SeluConfig, act: Activation, pre: &[f64], dout: &mut [f64]) {
    if act == Activation::Selu {
        for (d, &z) in dout.iter_mut().zip(pre) {
            *d *= selu.derivative(z);
        }
    }
}

/// Per-layer buffers for one forward/backward pass.
pub(crate) struct Trace {
    pub acts: Vec<Vec<f64>>,
    pub dacts: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    argmax: Vec<Vec<u32>>,
    mask: Vec<Vec<f64>>,
}

impl Trace {
    pub fn new(model: &NeuralModel) -> Self {
        let acts: Vec<Vec<f64>> = model.shapes.iter().map(|s| vec![0.0; s.size()]).collect();
        let dacts = acts.clone();
        let mut pre = Vec::with_capacity(model.layers.len());
        let mut argmax = Vec::with_capacity(model.layers.len());
        let mut mask = Vec::with_capacity(model.layers.len());
        for (i, layer) in model.layers.iter().enumerate() {
            let out = model.shapes[i + 1].size();
            pre.push(match layer {
                LayerSpec::Conv1d { .. } | LayerSpec::Dense { .. } => vec![0.0; out],
                _ => Vec::new(),
            });
            argmax.push(match layer {
                LayerSpec::MaxPool { .. } => vec![0; out],
                _ => Vec::new(),
            });
            mask.push(match layer {
                LayerSpec::Dropout { .. } => vec![1.0; out],
                _ => Vec::new(),
            });
        }
        Self {
            acts,
            dacts,
            pre,
            argmax,
            mask,
        }
    }

    pub fn logits(&self) -> &[f64] {
        self.acts.last().unwrap()
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| math::exp(z - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}
