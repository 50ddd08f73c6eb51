//! Replay detection: a replayed QAM64 frame carries an extra phase rotation
//! `e^{j k pi / 16}`. A classifier with one output per rotation tells them
//! apart using the known preamble at the start of each frame.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng as _;
use rfdsa_core::nnet::{confusion_matrix, predict, train, Confusion, History, LabeledSet, NeuralModel};
use rfdsa_core::rng::{self, tag};
use rfdsa_core::sigsynth::{apply_awgn, constellation, rotate_frame, synth_clean_with_preamble, ModulationKind};
use rfdsa_core::Complex64;

use super::common::{index_split, require, TrainSettings};
use crate::config::{parse_value, unknown_key, Configurable};
use crate::error::Result;
use crate::manifest::Check;
use crate::tables::{self, HistoryRow};

/// Source tag for replay frames, distinct from the dataset tags.
const REPLAY_SOURCE: u64 = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayEvalConfig {
    /// Rotations `k pi / 16` for `k = 0..rotations`.
    pub rotations: usize,
    pub frames_per_rotation: usize,
    pub snr_db: f64,
    pub preamble_symbols: usize,
    pub test_fraction: f64,
    pub train: TrainSettings,
}

impl Default for ReplayEvalConfig {
    fn default() -> Self {
        Self {
            rotations: 17,
            frames_per_rotation: 1000,
            snr_db: 18.0,
            preamble_symbols: 8,
            test_fraction: 0.2,
            train: TrainSettings {
                epochs: 200,
                ..TrainSettings::default()
            },
        }
    }
}

impl Configurable for ReplayEvalConfig {
    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "rotations" => self.rotations = parse_value(key, value)?,
            "frames_per_rotation" => self.frames_per_rotation = parse_value(key, value)?,
            "snr_db" => self.snr_db = parse_value(key, value)?,
            "preamble_symbols" => self.preamble_symbols = parse_value(key, value)?,
            "test_fraction" => self.test_fraction = parse_value(key, value)?,
            _ if self.train.apply(key, value)? => {}
            _ => return Err(unknown_key(key)),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("rotations".into(), self.rotations.to_string()),
            ("frames_per_rotation".into(), self.frames_per_rotation.to_string()),
            ("snr_db".into(), self.snr_db.to_string()),
            ("preamble_symbols".into(), self.preamble_symbols.to_string()),
            ("test_fraction".into(), self.test_fraction.to_string()),
        ];
        v.extend(self.train.pairs());
        v
    }
}

/// Fixed QAM64 preamble shared by the legitimate transmitter and the
/// detector. Independent of the run seed.
pub fn preamble(len: usize) -> Vec<Complex64> {
    let pts = constellation(ModulationKind::Qam64).expect("QAM64 is linear");
    let mut r = rng::stream(0x9e_a3b1e, &[]);
    (0..len).map(|_| pts[r.random_range(0..pts.len())]).collect()
}

/// `frames_per_rotation` frames per rotation, labeled by `k`.
pub fn replay_dataset(cfg: &ReplayEvalConfig, seed: u64) -> LabeledSet {
    let pre = preamble(cfg.preamble_symbols);
    let mut set = LabeledSet::default();
    for k in 0..cfg.rotations {
        let theta = k as f64 * PI / 16.0;
        for i in 0..cfg.frames_per_rotation {
            let mut r = rng::stream(seed, &[tag::DATASET, REPLAY_SOURCE, k as u64, i as u64]);
            let clean = synth_clean_with_preamble(ModulationKind::Qam64, &pre, &mut r);
            let frame = apply_awgn(&rotate_frame(&clean, theta), cfg.snr_db, &mut r);
            set.push(frame.interleaved(), k);
        }
    }
    set
}

pub struct ReplayEvalReport {
    pub dataset_size: usize,
    pub test_accuracy: f64,
    pub confusion: Confusion,
    pub history: History,
    pub labels: Vec<String>,
}

impl ReplayEvalReport {
    pub fn checks(&self) -> Vec<Check> {
        vec![Check::at_least("rotation_accuracy", self.test_accuracy, 0.90)]
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        tables::write_confusion(&dir.join("replay_confusion.csv"), &self.labels, &self.confusion)?;
        let hist: Vec<HistoryRow> = self.history.records.iter().map(HistoryRow::from).collect();
        tables::write_rows(&dir.join("replay_history.csv"), &hist)?;
        Ok(vec!["replay_confusion.csv".into(), "replay_history.csv".into()])
    }
}

pub fn run(cfg: &ReplayEvalConfig, seed: u64) -> Result<ReplayEvalReport> {
    require(cfg.rotations >= 2, "need at least two rotations")?;
    require(cfg.frames_per_rotation >= 2, "need at least two frames per rotation")?;
    require(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0, "test_fraction must lie in (0, 1)")?;
    let data = replay_dataset(cfg, seed);
    let (test_idx, train_idx) = index_split(data.len(), cfg.test_fraction, seed, 6);
    let (train_set, test_set) = (data.subset(&train_idx), data.subset(&test_idx));
    let labels: Vec<String> = (0..cfg.rotations).map(|k| format!("k{k}")).collect();
    let model = NeuralModel::reduced(&cfg.train.arch(), labels.clone(), seed)?;
    let (model, history) = train(model, &train_set, &cfg.train.train_config(seed))?;
    let pred = predict(&model, &test_set.inputs)?;
    Ok(ReplayEvalReport {
        dataset_size: data.len(),
        test_accuracy: rfdsa_core::nnet::hit_rate(&pred, &test_set.labels),
        confusion: confusion_matrix(&model, &test_set)?,
        history,
        labels,
    })
}
