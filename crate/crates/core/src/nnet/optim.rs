use alloc::vec;
use alloc::vec::Vec;

use super::TrainConfig;
use crate::math;

/// First and second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(params: &mut [f64], grads: &[f64], state: &mut AdamState, cfg: &TrainConfig) {
    assert_eq!(params.len(), grads.len(), "gradient not aligned with parameters");
    assert_eq!(params.len(), state.m.len(), "optimizer state not aligned with parameters");
    state.t += 1;
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let c1 = 1.0 - math::powf(b1, state.t as f64);
    let c2 = 1.0 - math::powf(b2, state.t as f64);
    for ((p, &g), (m, v)) in params
        .iter_mut()
        .zip(grads)
        .zip(state.m.iter_mut().zip(state.v.iter_mut()))
    {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= cfg.learning_rate * m_hat / (math::sqrt(v_hat) + cfg.epsilon);
    }
}

/// Plain gradient descent.
pub fn sgd_step(params: &mut [f64], grads: &[f64], learning_rate: f64) {
    assert_eq!(params.len(), grads.len(), "gradient not aligned with parameters");
    for (p, g) in params.iter_mut().zip(grads) {
        *p -= learning_rate * g;
    }
}
