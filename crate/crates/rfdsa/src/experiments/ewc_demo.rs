//! Continual learning: train Task A, then retrain on Task B with plain SGD
//! and with the EWC penalty, tracking both tasks' accuracy every epoch.

use std::path::Path;

use rfdsa_core::nnet::{fisher_diagonal, predict, predict_restricted, split, train_with_validation, LabeledSet, NeuralModel};
use rfdsa_core::sigsynth::{make_dataset, DatasetSpec, LabeledFrame, ModulationKind};
use serde::{Deserialize, Serialize};

use super::common::{index_split, require, subset, TrainSettings};
use crate::config::{join, on_off, parse_bool, parse_list, parse_modulations, parse_value, unknown_key, Configurable};
use crate::error::Result;
use crate::manifest::Check;
use crate::tables;

#[derive(Debug, Clone, PartialEq)]
pub struct EwcDemoConfig {
    pub task_a: Vec<ModulationKind>,
    pub task_b: Vec<ModulationKind>,
    pub snr_grid_db: Vec<f64>,
    pub per_mod_count: usize,
    pub test_fraction: f64,
    pub lambda: f64,
    /// Task-A samples used for the Fisher estimate.
    pub fisher_samples: usize,
    /// Task-B retraining epochs and step size (SGD for both strategies).
    pub retrain_epochs: usize,
    pub retrain_learning_rate: f64,
    /// Score each task by the argmax over its own outputs only, rather than
    /// over the whole shared head.
    pub restricted_eval: bool,
    /// Task-A training.
    pub train: TrainSettings,
}

impl Default for EwcDemoConfig {
    fn default() -> Self {
        use ModulationKind::*;
        Self {
            task_a: vec![Qpsk, Psk8, Cpfsk, AmSsb, Gfsk],
            task_b: vec![Qam16, Pam4, Wbfm],
            snr_grid_db: vec![18.0],
            per_mod_count: 600,
            test_fraction: 0.2,
            lambda: 1e4,
            fisher_samples: 500,
            retrain_epochs: 20,
            retrain_learning_rate: 0.01,
            restricted_eval: true,
            train: TrainSettings {
                epochs: 30,
                ..TrainSettings::default()
            },
        }
    }
}

impl Configurable for EwcDemoConfig {
    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "task_a" => self.task_a = parse_modulations(key, value)?,
            "task_b" => self.task_b = parse_modulations(key, value)?,
            "snr_grid_db" => self.snr_grid_db = parse_list(key, value)?,
            "per_mod_count" => self.per_mod_count = parse_value(key, value)?,
            "test_fraction" => self.test_fraction = parse_value(key, value)?,
            "lambda" => self.lambda = parse_value(key, value)?,
            "fisher_samples" => self.fisher_samples = parse_value(key, value)?,
            "retrain_epochs" => self.retrain_epochs = parse_value(key, value)?,
            "retrain_learning_rate" => self.retrain_learning_rate = parse_value(key, value)?,
            "restricted_eval" => self.restricted_eval = parse_bool(key, value)?,
            _ if self.train.apply(key, value)? => {}
            _ => return Err(unknown_key(key)),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("task_a".into(), join(&self.task_a)),
            ("task_b".into(), join(&self.task_b)),
            ("snr_grid_db".into(), join(&self.snr_grid_db)),
            ("per_mod_count".into(), self.per_mod_count.to_string()),
            ("test_fraction".into(), self.test_fraction.to_string()),
            ("lambda".into(), self.lambda.to_string()),
            ("fisher_samples".into(), self.fisher_samples.to_string()),
            ("retrain_epochs".into(), self.retrain_epochs.to_string()),
            ("retrain_learning_rate".into(), self.retrain_learning_rate.to_string()),
            ("restricted_eval".into(), on_off(self.restricted_eval)),
        ];
        v.extend(self.train.pairs());
        v
    }
}

/// One point of the accuracy time series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EwcRow {
    pub strategy: String,
    pub phase: String,
    /// Counts across both phases.
    pub epoch: usize,
    pub task_a_acc: f64,
    pub task_b_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategySummary {
    pub task_a_before: f64,
    pub task_a_after: f64,
    pub task_b_after: f64,
}

impl StrategySummary {
    pub fn task_a_drop(&self) -> f64 {
        self.task_a_before - self.task_a_after
    }
}

pub struct EwcDemoReport {
    pub rows: Vec<EwcRow>,
    pub sgd: StrategySummary,
    pub ewc: StrategySummary,
}

impl EwcDemoReport {
    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_least("sgd_task_a_drop", self.sgd.task_a_drop(), 0.25),
            Check::at_most("ewc_task_a_drop", self.ewc.task_a_drop(), 0.10),
            Check::at_least("ewc_task_b_accuracy", self.ewc.task_b_after, 0.80),
        ]
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        tables::write_rows(&dir.join("ewc_timeseries.csv"), &self.rows)?;
        Ok(vec!["ewc_timeseries.csv".into()])
    }
}

struct TaskData {
    train: LabeledSet,
    test: LabeledSet,
    /// Output indices of this task; empty scores over the whole head.
    outputs: Vec<usize>,
}

fn task_data(mods: &[ModulationKind], offset: usize, cfg: &EwcDemoConfig, seed: u64, purpose: u64) -> Result<TaskData> {
    let frames = make_dataset(&DatasetSpec {
        snr_grid_db: cfg.snr_grid_db.clone(),
        per_mod_count: cfg.per_mod_count,
        modulations: mods.to_vec(),
        include_idle: false,
        seed,
    })?;
    let label = |f: &LabeledFrame| {
        let m = match f.kind {
            rfdsa_core::sigsynth::SourceKind::Modulated(m) => m,
            rfdsa_core::sigsynth::SourceKind::Idle => unreachable!("no idle frames requested"),
        };
        offset + mods.iter().position(|&x| x == m).unwrap()
    };
    let (test_idx, train_idx) = index_split(frames.len(), cfg.test_fraction, seed, purpose);
    Ok(TaskData {
        train: LabeledSet::from_frames(&subset(&frames, &train_idx), label),
        test: LabeledSet::from_frames(&subset(&frames, &test_idx), label),
        outputs: if cfg.restricted_eval {
            (offset..offset + mods.len()).collect()
        } else {
            Vec::new()
        },
    })
}

fn acc(model: &NeuralModel, task: &TaskData) -> Result<f64> {
    let pred = if task.outputs.is_empty() {
        predict(model, &task.test.inputs)?
    } else {
        predict_restricted(model, &task.test.inputs, &task.outputs)?
    };
    Ok(rfdsa_core::nnet::hit_rate(&pred, &task.test.labels))
}

fn point(epoch: usize, m: &NeuralModel, a: &TaskData, b: &TaskData) -> Result<(usize, f64, f64)> {
    Ok((epoch, acc(m, a)?, acc(m, b)?))
}

pub fn run(cfg: &EwcDemoConfig, seed: u64) -> Result<EwcDemoReport> {
    require(!cfg.task_a.is_empty() && !cfg.task_b.is_empty(), "both tasks need modulations")?;
    require(
        cfg.task_a.iter().all(|m| !cfg.task_b.contains(m)),
        "task_a and task_b must not share modulations",
    )?;
    require(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0, "test_fraction must lie in (0, 1)")?;
    require(cfg.retrain_epochs > 0, "retrain_epochs must be positive")?;

    let a = task_data(&cfg.task_a, 0, cfg, seed, 1)?;
    let b = task_data(&cfg.task_b, cfg.task_a.len(), cfg, seed, 2)?;
    let labels: Vec<String> = cfg.task_a.iter().chain(&cfg.task_b).map(|m| m.name().to_string()).collect();

    let mut rows = Vec::new();
    let model = NeuralModel::reduced(&cfg.train.arch(), labels, seed)?;
    let train_a = cfg.train.train_config(seed);
    let (fit_a, val_a) = split(&a.train, 0.9, seed);
    let mut phase_a = Vec::new();
    let (model, _) = train_with_validation(model, &fit_a, &val_a, &train_a, None, &mut |r, m| {
        phase_a.push(point(r.epoch, m, &a, &b));
    })?;
    let phase_a: Vec<(usize, f64, f64)> = phase_a.into_iter().collect::<Result<_>>()?;
    for strategy in ["sgd", "ewc"] {
        for &(epoch, task_a_acc, task_b_acc) in &phase_a {
            rows.push(EwcRow {
                strategy: strategy.into(),
                phase: "task_a".into(),
                epoch,
                task_a_acc,
                task_b_acc,
            });
        }
    }
    let base_epoch = phase_a.len();
    let task_a_before = acc(&model, &a)?;

    let k = cfg.fisher_samples.min(a.train.len()).max(1);
    let fisher = fisher_diagonal(&model, &a.train.inputs[..k], &a.train.labels[..k])?.with_lambda(cfg.lambda);

    let retrain = TrainSettings {
        epochs: cfg.retrain_epochs,
        learning_rate: cfg.retrain_learning_rate,
        // Retraining runs a fixed budget; the time series shows the whole run.
        patience: cfg.retrain_epochs + 1,
        ..cfg.train.clone()
    }
    .sgd_config(seed ^ 0x5eed);

    let (fit_b, val_b) = split(&b.train, 0.9, seed);
    let mut summaries = Vec::new();
    for (strategy, penalty) in [("sgd", None), ("ewc", Some(&fisher))] {
        let mut series = Vec::new();
        let (m, _) = train_with_validation(model.clone(), &fit_b, &val_b, &retrain, penalty, &mut |r, m| {
            series.push(point(r.epoch, m, &a, &b));
        })?;
        for p in series {
            let (epoch, task_a_acc, task_b_acc) = p?;
            rows.push(EwcRow {
                strategy: strategy.into(),
                phase: "task_b".into(),
                epoch: base_epoch + epoch,
                task_a_acc,
                task_b_acc,
            });
        }
        summaries.push(StrategySummary {
            task_a_before,
            task_a_after: acc(&m, &a)?,
            task_b_after: acc(&m, &b)?,
        });
    }
    let ewc = summaries.pop().unwrap();
    let sgd = summaries.pop().unwrap();
    Ok(EwcDemoReport { rows, sgd, ewc })
}
