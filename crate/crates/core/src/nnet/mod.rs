//! A small trainable 1-D CNN classifier.
//!
//! Parameters live in one flat vector so the optimizers and the elastic
//! weight consolidation penalty work on plain slices. The default
//! architecture is `[pad, conv, pool] x 3 -> dense(SELU) -> dropout ->
//! dense(SELU) -> dropout -> dense(logits)` over 128x2 I/Q input.

mod eval;
mod ewc;
mod model;
mod optim;
mod train;

use alloc::vec;
use alloc::vec::Vec;

pub use eval::{accuracy, classify, confusion_matrix, extract_features, hit_rate, predict, predict_restricted, scores_for, Confusion};
pub use ewc::{ewc_gradient, ewc_loss, fisher_diagonal, FisherDiag, DEFAULT_LAMBDA};
pub use model::{softmax, Activation, ArchConfig, LayerSpec, NeuralModel, SeluConfig, Shape, FRAME_SHAPE};
pub use optim::{adam_step, sgd_step, AdamState};
pub use train::{split, train, train_with_validation, EarlyStopping, EpochRecord, History, OptimizerKind, StopDecision, TrainConfig};

use crate::math;
use crate::rng::Rng;
use crate::sigsynth::{LabeledFrame, SignalClass};
use model::Trace;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum NnetError {
    #[error("input has {got} values, model expects {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("parameter vector has {got} entries, model has {expected}")]
    ParamMismatch { expected: usize, got: usize },
    #[error("invalid architecture: {0}")]
    BadArchitecture(&'static str),
    #[error("label {label} out of range for {classes} classes")]
    BadLabel { label: usize, classes: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset contains a single class")]
    SingleClass,
    #[error("no samples for Fisher estimation")]
    EmptySamples,
    #[error("invalid training configuration: {0}")]
    BadConfig(&'static str),
    #[error("scores do not form a probability vector")]
    BadScores,
}

/// Likelihoods for (idle, in-network, jammer, out-network).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreVector([f64; 4]);

impl ScoreVector {
    pub fn new(p: [f64; 4]) -> Result<Self, NnetError> {
        let sum: f64 = p.iter().sum();
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) || (sum - 1.0).abs() > 1e-9 {
            return Err(NnetError::BadScores);
        }
        Ok(Self(p))
    }

    /// All mass on `class`.
    pub fn certain(class: SignalClass) -> Self {
        let mut p = [0.0; 4];
        p[class.index()] = 1.0;
        Self(p)
    }

    pub fn uniform() -> Self {
        Self([0.25; 4])
    }

    /// `confidence` on `class`, the rest spread evenly.
    pub fn peaked(class: SignalClass, confidence: f64) -> Self {
        let c = confidence.clamp(0.0, 1.0);
        let mut p = [(1.0 - c) / 3.0; 4];
        p[class.index()] = c;
        Self(p)
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn get(&self, class: SignalClass) -> f64 {
        self.0[class.index()]
    }

    /// Argmax; exact ties go to the earlier class in
    /// idle < in-network < jammer < out-network.
    pub fn argmax(&self) -> SignalClass {
        let mut best = 0;
        for i in 1..4 {
            if self.0[i] > self.0[best] {
                best = i;
            }
        }
        SignalClass::ALL[best]
    }
}

/// Inputs with integer labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LabeledSet {
    pub inputs: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl LabeledSet {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Vec<usize>) -> Self {
        assert_eq!(inputs.len(), labels.len(), "inputs and labels differ in length");
        Self { inputs, labels }
    }

    /// Frames labeled by signal class index.
    pub fn from_frames_by_class(frames: &[LabeledFrame]) -> Self {
        Self::from_frames(frames, |f| f.class.index())
    }

    pub fn from_frames(frames: &[LabeledFrame], label: impl Fn(&LabeledFrame) -> usize) -> Self {
        Self {
            inputs: frames.iter().map(|f| f.frame.interleaved()).collect(),
            labels: frames.iter().map(label).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn push(&mut self, input: Vec<f64>, label: usize) {
        self.inputs.push(input);
        self.labels.push(label);
    }

    pub fn extend(&mut self, other: &LabeledSet) {
        self.inputs.extend(other.inputs.iter().cloned());
        self.labels.extend(&other.labels);
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn distinct_labels(&self) -> usize {
        let mut seen: Vec<usize> = self.labels.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }
}

/// Output of [`forward`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    pub logits: Vec<Vec<f64>>,
    pub probs: Vec<Vec<f64>>,
}

/// Runs a batch through the model. Dropout is applied only when
/// `train_mode` is set and a generator is supplied.
pub fn forward(model: &NeuralModel, batch: &[Vec<f64>], train_mode: bool, rng: Option<&mut Rng>) -> Result<ForwardOutput, NnetError> {
    let mut trace = Trace::new(model);
    let mut rng = if train_mode { rng } else { None };
    let mut logits = Vec::with_capacity(batch.len());
    for x in batch {
        model.check_input(x)?;
        model.forward_into(x, &mut trace, rng.as_deref_mut());
        logits.push(trace.logits().to_vec());
    }
    let probs = logits.iter().map(|z| softmax(z)).collect();
    Ok(ForwardOutput { logits, probs })
}

/// Floor applied before taking logarithms.
pub const LOG_CLAMP: f64 = 1e-12;

/// Mean of `-ln y_label` over the batch.
pub fn cross_entropy(probs: &[Vec<f64>], labels: &[usize]) -> f64 {
    if probs.is_empty() {
        return 0.0;
    }
    let total: f64 = probs
        .iter()
        .zip(labels)
        .map(|(p, &l)| -math::ln(p[l].max(LOG_CLAMP)))
        .sum();
    total / probs.len() as f64
}

fn check_labels(model: &NeuralModel, labels: &[usize]) -> Result<(), NnetError> {
    let classes = model.num_outputs();
    match labels.iter().find(|&&l| l >= classes) {
        Some(&label) => Err(NnetError::BadLabel { label, classes }),
        None => Ok(()),
    }
}

/// Accumulates the gradient of the summed loss over `idx` into `grad` and
/// returns (summed loss, correct count). Samples are visited in order, so the
/// reduction is bit-stable.
pub(crate) fn accumulate_gradient(
    model: &NeuralModel,
    trace: &mut Trace,
    inputs: &[Vec<f64>],
    labels: &[usize],
    idx: impl Iterator<Item = usize>,
    scale: f64,
    mut dropout: Option<&mut Rng>,
    grad: &mut [f64],
) -> (f64, usize) {
    let mut loss = 0.0;
    let mut correct = 0;
    let mut dlogits = vec![0.0; model.num_outputs()];
    for i in idx {
        model.forward_into(&inputs[i], trace, dropout.as_deref_mut());
        let p = softmax(trace.logits());
        let label = labels[i];
        loss += -math::ln(p[label].max(LOG_CLAMP));
        if argmax(&p) == label {
            correct += 1;
        }
        for (k, d) in dlogits.iter_mut().enumerate() {
            *d = scale * (p[k] - if k == label { 1.0 } else { 0.0 });
        }
        model.backward(trace, &dlogits, grad);
    }
    (loss, correct)
}

/// Analytic gradient of the mean cross-entropy (inference mode, no dropout).
pub fn gradient(model: &NeuralModel, batch: &[Vec<f64>], labels: &[usize]) -> Result<Vec<f64>, NnetError> {
    if batch.len() != labels.len() {
        return Err(NnetError::ShapeMismatch {
            expected: batch.len(),
            got: labels.len(),
        });
    }
    if batch.is_empty() {
        return Err(NnetError::EmptyDataset);
    }
    for x in batch {
        model.check_input(x)?;
    }
    check_labels(model, labels)?;
    let mut grad = vec![0.0; model.param_count()];
    let mut trace = Trace::new(model);
    let scale = 1.0 / batch.len() as f64;
    accumulate_gradient(model, &mut trace, batch, labels, 0..batch.len(), scale, None, &mut grad);
    Ok(grad)
}

/// Mean cross-entropy of the model on a batch (inference mode).
pub fn loss(model: &NeuralModel, batch: &[Vec<f64>], labels: &[usize]) -> Result<f64, NnetError> {
    let out = forward(model, batch, false, None)?;
    Ok(cross_entropy(&out.probs, labels))
}

/// Index of the largest entry; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests;
