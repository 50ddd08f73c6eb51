//! Baseline 4-class classifier: synthesize, train, report accuracy by SNR
//! and confusion matrices.

use std::path::Path;

use rfdsa_core::nnet::{confusion_matrix, predict, train, Confusion, History, NeuralModel};
use rfdsa_core::sigsynth::{make_dataset, DatasetSpec, LabeledFrame, ModulationKind};

use super::common::{class_labels, class_set, index_split, require, subset, TrainSettings};
use crate::checkpoint;
use crate::config::{join, on_off, parse_bool, parse_list, parse_modulations, parse_value, unknown_key, Configurable};
use crate::error::Result;
use crate::manifest::Check;
use crate::tables::{self, HistoryRow, SnrAccuracyRow};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainBaseConfig {
    pub modulations: Vec<ModulationKind>,
    pub snr_grid_db: Vec<f64>,
    /// Frames per modulation per SNR.
    pub per_mod_count: usize,
    /// Idle frames per SNR; zero leaves idle out.
    pub idle_count: usize,
    pub test_fraction: f64,
    pub confusion_snrs: Vec<f64>,
    pub dump_dataset: bool,
    pub train: TrainSettings,
}

impl Default for TrainBaseConfig {
    fn default() -> Self {
        Self {
            modulations: ModulationKind::ALL.to_vec(),
            snr_grid_db: DatasetSpec::default_snr_grid(),
            per_mod_count: 20,
            idle_count: 20,
            test_fraction: 0.2,
            confusion_snrs: vec![0.0, 10.0, 18.0],
            dump_dataset: false,
            // Early stopping usually ends the run well before this.
            train: TrainSettings {
                epochs: 100,
                ..TrainSettings::default()
            },
        }
    }
}

impl Configurable for TrainBaseConfig {
    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "modulations" => self.modulations = parse_modulations(key, value)?,
            "snr_grid_db" => self.snr_grid_db = parse_list(key, value)?,
            "per_mod_count" => self.per_mod_count = parse_value(key, value)?,
            "idle_count" => self.idle_count = parse_value(key, value)?,
            "test_fraction" => self.test_fraction = parse_value(key, value)?,
            "confusion_snrs" => self.confusion_snrs = parse_list(key, value)?,
            "dump_dataset" => self.dump_dataset = parse_bool(key, value)?,
            _ if self.train.apply(key, value)? => {}
            _ => return Err(unknown_key(key)),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("modulations".into(), join(&self.modulations)),
            ("snr_grid_db".into(), join(&self.snr_grid_db)),
            ("per_mod_count".into(), self.per_mod_count.to_string()),
            ("idle_count".into(), self.idle_count.to_string()),
            ("test_fraction".into(), self.test_fraction.to_string()),
            ("confusion_snrs".into(), join(&self.confusion_snrs)),
            ("dump_dataset".into(), on_off(self.dump_dataset)),
        ];
        v.extend(self.train.pairs());
        v
    }
}

/// The synthetic dataset described by `cfg`: modulated frames first, then
/// idle frames.
pub fn build_dataset(cfg: &TrainBaseConfig, seed: u64) -> Result<Vec<LabeledFrame>> {
    require(!cfg.snr_grid_db.is_empty(), "snr_grid_db is empty")?;
    let mut frames = Vec::new();
    if !cfg.modulations.is_empty() {
        frames = make_dataset(&DatasetSpec {
            snr_grid_db: cfg.snr_grid_db.clone(),
            per_mod_count: cfg.per_mod_count,
            modulations: cfg.modulations.clone(),
            include_idle: false,
            seed,
        })?;
    }
    if cfg.idle_count > 0 {
        frames.extend(make_dataset(&DatasetSpec {
            snr_grid_db: cfg.snr_grid_db.clone(),
            per_mod_count: cfg.idle_count,
            modulations: Vec::new(),
            include_idle: true,
            seed,
        })?);
    }
    Ok(frames)
}

pub struct TrainBaseReport {
    pub model: NeuralModel,
    pub history: History,
    pub test_accuracy: f64,
    pub per_snr: Vec<SnrAccuracyRow>,
    pub confusions: Vec<(f64, Confusion)>,
    pub dataset: Option<Vec<LabeledFrame>>,
}

impl TrainBaseReport {
    pub fn checkpoint_hash(&self) -> String {
        checkpoint::sha256_hex(&checkpoint::encode(&self.model))
    }

    /// Accuracy on the highest-SNR test frames.
    pub fn top_snr_accuracy(&self) -> f64 {
        self.per_snr.last().map_or(0.0, |r| r.accuracy)
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![Check::at_least("accuracy_at_top_snr", self.top_snr_accuracy(), 0.90)]
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        let mut files = vec!["model.ckpt".to_string(), "history.csv".into(), "accuracy_by_snr.csv".into()];
        checkpoint::save(&dir.join("model.ckpt"), &self.model)?;
        let hist: Vec<HistoryRow> = self.history.records.iter().map(HistoryRow::from).collect();
        tables::write_rows(&dir.join("history.csv"), &hist)?;
        tables::write_rows(&dir.join("accuracy_by_snr.csv"), &self.per_snr)?;
        for (snr, c) in &self.confusions {
            let name = format!("confusion_{snr}db.csv");
            tables::write_confusion(&dir.join(&name), &class_labels(), c)?;
            files.push(name);
        }
        if let Some(d) = &self.dataset {
            tables::write_dataset(&dir.join("dataset.csv"), d)?;
            files.push("dataset.csv".into());
        }
        Ok(files)
    }
}

pub fn run(cfg: &TrainBaseConfig, seed: u64) -> Result<TrainBaseReport> {
    require(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0, "test_fraction must lie in (0, 1)")?;
    let frames = build_dataset(cfg, seed)?;
    let (test_idx, train_idx) = index_split(frames.len(), cfg.test_fraction, seed, 0);
    let train_frames = subset(&frames, &train_idx);
    let test_frames = subset(&frames, &test_idx);

    let model = NeuralModel::reduced(&cfg.train.arch(), class_labels(), seed)?;
    let (model, history) = train(model, &class_set(&train_frames), &cfg.train.train_config(seed))?;

    let test = class_set(&test_frames);
    let pred = predict(&model, &test.inputs)?;
    let test_accuracy = rfdsa_core::nnet::hit_rate(&pred, &test.labels);

    let mut snrs = cfg.snr_grid_db.clone();
    snrs.sort_by(f64::total_cmp);
    snrs.dedup();
    let mut per_snr = Vec::new();
    for &snr in &snrs {
        let idx: Vec<usize> = (0..test_frames.len()).filter(|&i| test_frames[i].frame.snr_db == snr).collect();
        if idx.is_empty() {
            continue;
        }
        let hits = idx.iter().filter(|&&i| pred[i] == test.labels[i]).count();
        per_snr.push(SnrAccuracyRow {
            snr_db: snr,
            samples: idx.len(),
            accuracy: hits as f64 / idx.len() as f64,
        });
    }
    let mut confusions = Vec::new();
    for &snr in &cfg.confusion_snrs {
        let at: Vec<LabeledFrame> = test_frames.iter().filter(|f| f.frame.snr_db == snr).cloned().collect();
        if !at.is_empty() {
            confusions.push((snr, confusion_matrix(&model, &class_set(&at))?));
        }
    }
    Ok(TrainBaseReport {
        model,
        history,
        test_accuracy,
        per_snr,
        confusions,
        dataset: cfg.dump_dataset.then_some(frames),
    })
}
