use alloc::vec;
use alloc::vec::Vec;

use super::{argmax, softmax, LabeledSet, NeuralModel, NnetError, ScoreVector};
use crate::sigsynth::{IqFrame, SignalClass};

/// Softmax scores of a 4-output model for one frame.
pub fn scores_for(model: &NeuralModel, frame: &IqFrame) -> Result<ScoreVector, NnetError> {
    if model.num_outputs() != 4 {
        return Err(NnetError::BadArchitecture("signal-class scoring needs a 4-output model"));
    }
    let p = softmax(&model.logits(&frame.interleaved())?);
    let mut s = [0.0; 4];
    s.copy_from_slice(&p);
    // Rounding can leave the sum a few ulps off; the softmax is already
    // normalized well inside the tolerance.
    ScoreVector::new(s)
}

/// Class (argmax with the fixed tie order) and the score vector.
pub fn classify(model: &NeuralModel, frame: &IqFrame) -> Result<(SignalClass, ScoreVector), NnetError> {
    let s = scores_for(model, frame)?;
    Ok((s.argmax(), s))
}

/// Predicted label per input.
pub fn predict(model: &NeuralModel, inputs: &[Vec<f64>]) -> Result<Vec<usize>, NnetError> {
    inputs.iter().map(|x| model.logits(x).map(|z| argmax(&z))).collect()
}

/// Predicted label when only the outputs in `allowed` may win.
pub fn predict_restricted(model: &NeuralModel, inputs: &[Vec<f64>], allowed: &[usize]) -> Result<Vec<usize>, NnetError> {
    if allowed.is_empty() || allowed.iter().any(|&a| a >= model.num_outputs()) {
        return Err(NnetError::BadConfig("restricted label set is empty or out of range"));
    }
    inputs
        .iter()
        .map(|x| {
            let z = model.logits(x)?;
            let mut best = allowed[0];
            for &a in &allowed[1..] {
                if z[a] > z[best] {
                    best = a;
                }
            }
            Ok(best)
        })
        .collect()
}

/// Fraction of correctly predicted labels.
pub fn accuracy(model: &NeuralModel, set: &LabeledSet) -> Result<f64, NnetError> {
    if set.is_empty() {
        return Err(NnetError::EmptyDataset);
    }
    let pred = predict(model, &set.inputs)?;
    Ok(hit_rate(&pred, &set.labels))
}

pub fn hit_rate(pred: &[usize], truth: &[usize]) -> f64 {
    if truth.is_empty() {
        return 0.0;
    }
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// Counts with rows indexed by true label and columns by prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Confusion {
    counts: Vec<Vec<usize>>,
}

impl Confusion {
    pub fn from_predictions(m: usize, truth: &[usize], pred: &[usize]) -> Result<Self, NnetError> {
        if truth.is_empty() {
            return Err(NnetError::EmptyDataset);
        }
        let mut counts = vec![vec![0; m]; m];
        for (&t, &p) in truth.iter().zip(pred) {
            if t >= m || p >= m {
                return Err(NnetError::BadLabel {
                    label: t.max(p),
                    classes: m,
                });
            }
            counts[t][p] += 1;
        }
        Ok(Self { counts })
    }

    pub fn size(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<usize>] {
        &self.counts
    }

    /// Row-normalized; rows with no samples stay zero.
    pub fn normalized(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let n: usize = row.iter().sum();
                row.iter()
                    .map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 })
                    .collect()
            })
            .collect()
    }

    pub fn accuracy(&self) -> f64 {
        let total: usize = self.counts.iter().flatten().sum();
        let diag: usize = (0..self.size()).map(|i| self.counts[i][i]).sum();
        diag as f64 / total.max(1) as f64
    }

    /// Per-class recall; `None` for classes with no samples.
    pub fn recall(&self) -> Vec<Option<f64>> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let n: usize = row.iter().sum();
                (n > 0).then(|| row[i] as f64 / n as f64)
            })
            .collect()
    }
}

pub fn confusion_matrix(model: &NeuralModel, set: &LabeledSet) -> Result<Confusion, NnetError> {
    if set.is_empty() {
        return Err(NnetError::EmptyDataset);
    }
    let pred = predict(model, &set.inputs)?;
    Confusion::from_predictions(model.num_outputs(), &set.labels, &pred)
}

/// Activations entering the dense head for one frame.
pub fn extract_features(model: &NeuralModel, frame: &IqFrame) -> Result<Vec<f64>, NnetError> {
    model.features(&frame.interleaved())
}
