use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::model::Trace;
use super::optim::{adam_step, sgd_step, AdamState};
use super::{accumulate_gradient, check_labels, forward, cross_entropy, argmax, FisherDiag, LabeledSet, NeuralModel, NnetError};
use crate::math;
use crate::rng::{self, tag};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Adam,
    Sgd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation-loss improvement before stopping.
    pub patience: usize,
    /// Fraction of the data used for training by [`train`].
    pub split: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            max_epochs: 200,
            patience: 8,
            split: 0.8,
            optimizer: OptimizerKind::Adam,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NnetError> {
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(NnetError::BadConfig("split must lie in (0, 1)"));
        }
        if self.patience == 0 {
            return Err(NnetError::BadConfig("patience must be at least 1"));
        }
        if self.batch_size == 0 || self.max_epochs == 0 {
            return Err(NnetError::BadConfig("batch size and epoch budget must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(NnetError::BadConfig("learning rate must be positive"));
        }
        Ok(())
    }
}

/// One row of the training history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub records: Vec<EpochRecord>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl History {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.records.iter().find(|r| r.epoch == self.best_epoch)
    }
}

/// Patience-based early stopping on a loss that should decrease.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    stale: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, loss: f64) -> StopDecision {
        if loss < self.best {
            self.best = loss;
            self.best_epoch = epoch;
            self.stale = 0;
            StopDecision::Improved
        } else {
            self.stale += 1;
            if self.stale >= self.patience {
                StopDecision::Stop
            } else {
                StopDecision::Continue
            }
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }
}

/// Shuffles and splits `data` by `cfg.split`, then trains with early
/// stopping on the held-out part.
pub fn train(model: NeuralModel, data: &LabeledSet, cfg: &TrainConfig) -> Result<(NeuralModel, History), NnetError> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(NnetError::EmptyDataset);
    }
    if data.distinct_labels() < 2 {
        return Err(NnetError::SingleClass);
    }
    let (tr, va) = split(data, cfg.split, cfg.seed);
    train_with_validation(model, &tr, &va, cfg, None, &mut |_, _| {})
}

/// Deterministic shuffled split; the first part holds `fraction` of the data.
pub fn split(data: &LabeledSet, fraction: f64, seed: u64) -> (LabeledSet, LabeledSet) {
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut rng::stream(seed, &[tag::SPLIT]));
    let cut = math::round(data.len() as f64 * fraction) as usize;
    let cut = cut.clamp(1, data.len().saturating_sub(1).max(1));
    (data.subset(&idx[..cut]), data.subset(&idx[cut..]))
}

/// Mini-batch training with an optional EWC penalty. `observer` sees every
/// epoch's record and the parameters at the end of that epoch. On return the
/// model holds the parameters of the best validation epoch.
pub fn train_with_validation(
    mut model: NeuralModel,
    train: &LabeledSet,
    val: &LabeledSet,
    cfg: &TrainConfig,
    penalty: Option<&FisherDiag>,
    observer: &mut dyn FnMut(&EpochRecord, &NeuralModel),
) -> Result<(NeuralModel, History), NnetError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(NnetError::EmptyDataset);
    }
    for x in train.inputs.iter().chain(&val.inputs) {
        model.check_input(x)?;
    }
    check_labels(&model, &train.labels)?;
    check_labels(&model, &val.labels)?;
    if let Some(f) = penalty {
        f.check_aligned(&model)?;
    }

    let n_params = model.param_count();
    let mut grad = vec![0.0; n_params];
    let mut adam = AdamState::new(n_params);
    let mut trace = Trace::new(&model);
    let mut shuffle_rng = rng::stream(cfg.seed, &[tag::SHUFFLE]);
    let mut dropout_rng = rng::stream(cfg.seed, &[tag::DROPOUT]);
    let mut stopper = EarlyStopping::new(cfg.patience);
    let mut best_params = model.params().to_vec();
    let mut history = History::default();
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            grad.fill(0.0);
            let scale = 1.0 / batch.len() as f64;
            let (l, c) = accumulate_gradient(
                &model,
                &mut trace,
                &train.inputs,
                &train.labels,
                batch.iter().copied(),
                scale,
                Some(&mut dropout_rng),
                &mut grad,
            );
            loss_sum += l;
            correct += c;
            match (cfg.optimizer, penalty) {
                (OptimizerKind::Adam, _) => {
                    if let Some(f) = penalty {
                        f.add_penalty_gradient(model.params(), &mut grad);
                    }
                    adam_step(model.params_mut(), &grad, &mut adam, cfg)
                }
                (OptimizerKind::Sgd, Some(f)) => f.proximal_sgd_step(model.params_mut(), &grad, cfg.learning_rate),
                (OptimizerKind::Sgd, None) => sgd_step(model.params_mut(), &grad, cfg.learning_rate),
            }
        }
        let train_loss = loss_sum / train.len() as f64;
        let train_acc = correct as f64 / train.len() as f64;
        let (val_loss, val_acc) = if val.is_empty() {
            (train_loss, train_acc)
        } else {
            evaluate(&model, val)?
        };
        let record = EpochRecord {
            epoch,
            train_loss,
            train_acc,
            val_loss,
            val_acc,
        };
        history.records.push(record);
        observer(&record, &model);
        match stopper.observe(epoch, val_loss) {
            StopDecision::Improved => best_params.copy_from_slice(model.params()),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                history.stopped_early = true;
                break;
            }
        }
    }
    history.best_epoch = stopper.best_epoch();
    model.set_params(&best_params)?;
    Ok((model, history))
}

/// Inference-mode (loss, accuracy).
pub(crate) fn evaluate(model: &NeuralModel, set: &LabeledSet) -> Result<(f64, f64), NnetError> {
    let out = forward(model, &set.inputs, false, None)?;
    let loss = cross_entropy(&out.probs, &set.labels);
    let correct = out
        .probs
        .iter()
        .zip(&set.labels)
        .filter(|(p, &l)| argmax(p) == l)
        .count();
    Ok((loss, correct as f64 / set.len().max(1) as f64))
}
