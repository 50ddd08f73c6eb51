use alloc::vec;
use alloc::vec::Vec;

use super::model::Trace;
use super::{accumulate_gradient, check_labels, gradient, loss, NeuralModel, NnetError};

/// Default penalty weight.
pub const DEFAULT_LAMBDA: f64 = 100.0;

/// Diagonal Fisher information with the parameter snapshot it was taken at.
#[derive(Debug, Clone, PartialEq)]
pub struct FisherDiag {
    values: Vec<f64>,
    anchor: Vec<f64>,
    pub lambda: f64,
}

impl FisherDiag {
    pub fn new(values: Vec<f64>, anchor: Vec<f64>, lambda: f64) -> Result<Self, NnetError> {
        if values.len() != anchor.len() {
            return Err(NnetError::ParamMismatch {
                expected: anchor.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !(*v >= 0.0)) || !(lambda >= 0.0) {
            return Err(NnetError::BadConfig("Fisher values and lambda must be non-negative"));
        }
        Ok(Self { values, anchor, lambda })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda.max(0.0);
        self
    }

    pub fn check_aligned(&self, model: &NeuralModel) -> Result<(), NnetError> {
        if self.values.len() != model.param_count() {
            return Err(NnetError::ParamMismatch {
                expected: model.param_count(),
                got: self.values.len(),
            });
        }
        Ok(())
    }

    /// `sum_i lambda/2 * F_i * (theta_i - anchor_i)^2`
    pub fn penalty(&self, params: &[f64]) -> f64 {
        let s: f64 = self
            .values
            .iter()
            .zip(params.iter().zip(&self.anchor))
            .map(|(f, (t, a))| f * (t - a) * (t - a))
            .sum();
        0.5 * self.lambda * s
    }

    pub(crate) fn add_penalty_gradient(&self, params: &[f64], grad: &mut [f64]) {
        for ((g, f), (t, a)) in grad.iter_mut().zip(&self.values).zip(params.iter().zip(&self.anchor)) {
            *g += self.lambda * f * (t - a);
        }
    }

    /// SGD step on the data loss with the penalty applied as an exact
    /// proximal update, which stays stable however stiff `lambda * F` is.
    pub(crate) fn proximal_sgd_step(&self, params: &mut [f64], data_grad: &[f64], lr: f64) {
        assert_eq!(params.len(), data_grad.len(), "gradient not aligned with parameters");
        for ((t, g), (f, a)) in params.iter_mut().zip(data_grad).zip(self.values.iter().zip(&self.anchor)) {
            let k = lr * self.lambda * f;
            *t = (*t - lr * g + k * a) / (1.0 + k);
        }
    }
}

/// Empirical Fisher diagonal: the mean over samples of the squared gradient
/// of the true-label log-likelihood. The current parameters become the anchor.
pub fn fisher_diagonal(model: &NeuralModel, inputs: &[Vec<f64>], labels: &[usize]) -> Result<FisherDiag, NnetError> {
    if inputs.is_empty() {
        return Err(NnetError::EmptySamples);
    }
    if inputs.len() != labels.len() {
        return Err(NnetError::ShapeMismatch {
            expected: inputs.len(),
            got: labels.len(),
        });
    }
    for x in inputs {
        model.check_input(x)?;
    }
    check_labels(model, labels)?;
    let n = model.param_count();
    let mut sum = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut trace = Trace::new(model);
    for i in 0..inputs.len() {
        g.fill(0.0);
        accumulate_gradient(model, &mut trace, inputs, labels, core::iter::once(i), 1.0, None, &mut g);
        for (s, v) in sum.iter_mut().zip(&g) {
            *s += v * v;
        }
    }
    let inv = 1.0 / inputs.len() as f64;
    sum.iter_mut().for_each(|s| *s *= inv);
    FisherDiag::new(sum, model.params().to_vec(), DEFAULT_LAMBDA)
}

/// Task-B cross-entropy plus the consolidation penalty.
pub fn ewc_loss(model: &NeuralModel, batch: &[Vec<f64>], labels: &[usize], fisher: &FisherDiag) -> Result<f64, NnetError> {
    fisher.check_aligned(model)?;
    let l = loss(model, batch, labels)?;
    if fisher.lambda == 0.0 {
        return Ok(l);
    }
    Ok(l + fisher.penalty(model.params()))
}

/// Gradient of [`ewc_loss`].
pub fn ewc_gradient(model: &NeuralModel, batch: &[Vec<f64>], labels: &[usize], fisher: &FisherDiag) -> Result<Vec<f64>, NnetError> {
    fisher.check_aligned(model)?;
    let mut g = gradient(model, batch, labels)?;
    fisher.add_penalty_gradient(model.params(), &mut g);
    Ok(g)
}
