use rand::seq::SliceRandom as _;
use rfdsa_core::nnet::{ArchConfig, LabeledSet, OptimizerKind, TrainConfig};
use rfdsa_core::rng::{self, tag};
use rfdsa_core::sigsynth::{LabeledFrame, SignalClass};

use crate::config::{join, parse_list, parse_value};
use crate::error::{Error, Result};

/// Training knobs shared by the experiments that fit a network.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainSettings {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub conv_filters: Vec<usize>,
    pub dense_units: Vec<usize>,
    pub dropout: f64,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let arch = ArchConfig::default();
        Self {
            epochs: 30,
            learning_rate: 1e-3,
            batch_size: 32,
            patience: 8,
            conv_filters: arch.conv_filters,
            dense_units: arch.dense_units,
            // With the architecture's 0.5, desk-scale runs stay underfit.
            dropout: 0.2,
        }
    }
}

impl TrainSettings {
    /// Returns `Ok(false)` when `key` is not a training key.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "epochs" => self.epochs = parse_value(key, value)?,
            "learning_rate" => self.learning_rate = parse_value(key, value)?,
            "batch_size" => self.batch_size = parse_value(key, value)?,
            "patience" => self.patience = parse_value(key, value)?,
            "conv_filters" => self.conv_filters = parse_list(key, value)?,
            "dense_units" => self.dense_units = parse_list(key, value)?,
            "dropout" => self.dropout = parse_value(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn pairs(&self) -> Vec<(String, String)> {
        vec![
            ("epochs".into(), self.epochs.to_string()),
            ("learning_rate".into(), self.learning_rate.to_string()),
            ("batch_size".into(), self.batch_size.to_string()),
            ("patience".into(), self.patience.to_string()),
            ("conv_filters".into(), join(&self.conv_filters)),
            ("dense_units".into(), join(&self.dense_units)),
            ("dropout".into(), self.dropout.to_string()),
        ]
    }

    pub fn arch(&self) -> ArchConfig {
        ArchConfig {
            conv_filters: self.conv_filters.clone(),
            dense_units: self.dense_units.clone(),
            dropout: self.dropout,
            ..ArchConfig::default()
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.epochs,
            patience: self.patience,
            seed,
            ..TrainConfig::default()
        }
    }

    pub fn sgd_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            optimizer: OptimizerKind::Sgd,
            ..self.train_config(seed)
        }
    }
}

/// Random split of `0..n` into a `fraction` part and the rest.
pub fn index_split(n: usize, fraction: f64, seed: u64, purpose: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::stream(seed, &[tag::SPLIT, purpose]));
    let k = ((n as f64) * fraction).round() as usize;
    let rest = idx.split_off(k.min(n));
    (idx, rest)
}

pub fn subset(frames: &[LabeledFrame], idx: &[usize]) -> Vec<LabeledFrame> {
    idx.iter().map(|&i| frames[i].clone()).collect()
}

pub fn class_set(frames: &[LabeledFrame]) -> LabeledSet {
    LabeledSet::from_frames_by_class(frames)
}

pub fn class_labels() -> Vec<String> {
    SignalClass::ALL.iter().map(|c| c.name().to_string()).collect()
}

pub fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Config(msg.into()))
    }
}
