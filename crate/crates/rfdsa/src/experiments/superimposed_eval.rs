//! Two-signal mixtures: separate with FastICA, then classify each component.

use std::path::Path;

use rand::Rng as _;
use rfdsa_core::nnet::{train, NeuralModel};
use rfdsa_core::rng::{self, tag};
use rfdsa_core::separation::{matched_correlations, same_pair, separate, separate_and_classify, IcaConfig, MixtureObservation};
use rfdsa_core::sigsynth::{apply_awgn, class_of, superimpose, synth_clean, ModulationKind, SignalClass, SourceKind};
use serde::{Deserialize, Serialize};

use super::common::{class_labels, class_set, require, TrainSettings};
use super::train_base::{build_dataset, TrainBaseConfig};
use crate::config::{join, parse_list, parse_value, unknown_key, Configurable};
use crate::error::{Error, Result};
use crate::manifest::Check;
use crate::tables::{self, SeparationRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModPair(pub ModulationKind, pub ModulationKind);

impl std::fmt::Display for ModPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}+{}", self.0, self.1)
    }
}

impl std::str::FromStr for ModPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once('+')
            .ok_or_else(|| Error::Config(format!("pair {s:?}: expected A+B")))?;
        let m = |x: &str| parse_value::<ModulationKind>("pairs", x.trim());
        Ok(ModPair(m(a)?, m(b)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperimposedEvalConfig {
    pub pairs: Vec<ModPair>,
    pub snr_grid_db: Vec<f64>,
    /// Mixtures per pair per SNR.
    pub trials: usize,
    /// Smallest allowed `|det|` of a drawn mixing matrix.
    pub min_det: f64,
    /// Frames per modulation per SNR for the classifier.
    pub classifier_per_mod: usize,
    /// SNRs the classifier trains on. Unmixing amplifies noise, so this
    /// reaches below the evaluation grid.
    pub classifier_snr_grid_db: Vec<f64>,
    pub train: TrainSettings,
}

impl Default for SuperimposedEvalConfig {
    fn default() -> Self {
        use ModulationKind::*;
        Self {
            pairs: vec![ModPair(Qpsk, Qam16), ModPair(Pam4, Gfsk)],
            snr_grid_db: vec![10.0, 14.0, 18.0],
            trials: 250,
            min_det: 0.2,
            classifier_per_mod: 500,
            classifier_snr_grid_db: (0..=9).map(|i| 2.0 * i as f64).collect(),
            train: TrainSettings {
                epochs: 20,
                ..TrainSettings::default()
            },
        }
    }
}

impl Configurable for SuperimposedEvalConfig {
    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "pairs" => {
                self.pairs = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::parse)
                    .collect::<Result<_>>()?
            }
            "snr_grid_db" => self.snr_grid_db = parse_list(key, value)?,
            "trials" => self.trials = parse_value(key, value)?,
            "min_det" => self.min_det = parse_value(key, value)?,
            "classifier_per_mod" => self.classifier_per_mod = parse_value(key, value)?,
            "classifier_snr_grid_db" => self.classifier_snr_grid_db = parse_list(key, value)?,
            _ if self.train.apply(key, value)? => {}
            _ => return Err(unknown_key(key)),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("pairs".into(), join(&self.pairs)),
            ("snr_grid_db".into(), join(&self.snr_grid_db)),
            ("trials".into(), self.trials.to_string()),
            ("min_det".into(), self.min_det.to_string()),
            ("classifier_per_mod".into(), self.classifier_per_mod.to_string()),
            ("classifier_snr_grid_db".into(), join(&self.classifier_snr_grid_db)),
        ];
        v.extend(self.train.pairs());
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryRow {
    pub trial_id: usize,
    pub pair: String,
    pub corr_first: f64,
    pub corr_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAccuracyRow {
    pub pair: String,
    pub snr_db: f64,
    pub trials: usize,
    pub accuracy: f64,
}

pub struct SuperimposedEvalReport {
    pub trials: Vec<SeparationRow>,
    pub recovery: Vec<RecoveryRow>,
    pub summary: Vec<PairAccuracyRow>,
}

impl SuperimposedEvalReport {
    pub fn pair_accuracy(&self) -> f64 {
        self.trials.iter().filter(|t| t.correct).count() as f64 / self.trials.len().max(1) as f64
    }

    pub fn mean_recovery(&self) -> f64 {
        let s: f64 = self.recovery.iter().map(|r| (r.corr_first + r.corr_second) / 2.0).sum();
        s / self.recovery.len().max(1) as f64
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_least("ica_recovery_correlation", self.mean_recovery(), 0.95),
            Check::at_least("pair_accuracy", self.pair_accuracy(), 0.75),
        ]
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        tables::write_rows(&dir.join("separation_trials.csv"), &self.trials)?;
        tables::write_rows(&dir.join("separation_recovery.csv"), &self.recovery)?;
        tables::write_rows(&dir.join("superimposed_accuracy.csv"), &self.summary)?;
        Ok(vec![
            "separation_trials.csv".into(),
            "separation_recovery.csv".into(),
            "superimposed_accuracy.csv".into(),
        ])
    }
}

fn pair_name(p: [SignalClass; 2]) -> String {
    format!("{}+{}", p[0].name(), p[1].name())
}

fn draw_mixing(r: &mut rng::Rng, min_det: f64) -> [[f64; 2]; 2] {
    loop {
        let m = [
            [r.random_range(0.2f64..1.0), r.random_range(0.2f64..1.0)],
            [r.random_range(0.2f64..1.0), r.random_range(0.2f64..1.0)],
        ];
        if (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs() >= min_det {
            return m;
        }
    }
}

/// Trains the 4-class classifier used on separated components: the pair
/// modulations plus idle.
fn component_classifier(cfg: &SuperimposedEvalConfig, seed: u64) -> Result<NeuralModel> {
    let mut mods: Vec<ModulationKind> = cfg.pairs.iter().flat_map(|p| [p.0, p.1]).collect();
    mods.sort();
    mods.dedup();
    let frames = build_dataset(
        &TrainBaseConfig {
            modulations: mods,
            snr_grid_db: cfg.classifier_snr_grid_db.clone(),
            per_mod_count: cfg.classifier_per_mod,
            idle_count: cfg.classifier_per_mod,
            ..TrainBaseConfig::default()
        },
        seed,
    )?;
    let model = NeuralModel::reduced(&cfg.train.arch(), class_labels(), seed)?;
    Ok(train(model, &class_set(&frames), &cfg.train.train_config(seed))?.0)
}

pub fn run(cfg: &SuperimposedEvalConfig, seed: u64) -> Result<SuperimposedEvalReport> {
    require(!cfg.pairs.is_empty(), "pairs is empty")?;
    require(!cfg.snr_grid_db.is_empty(), "snr_grid_db is empty")?;
    require(!cfg.classifier_snr_grid_db.is_empty(), "classifier_snr_grid_db is empty")?;
    require(cfg.trials > 0, "trials must be positive")?;
    require(cfg.min_det > 0.0 && cfg.min_det < 0.6, "min_det must lie in (0, 0.6)")?;
    let model = component_classifier(cfg, seed)?;
    let ica = IcaConfig {
        seed,
        ..IcaConfig::default()
    };

    let (mut trials, mut recovery, mut summary) = (Vec::new(), Vec::new(), Vec::new());
    for (pi, pair) in cfg.pairs.iter().enumerate() {
        let mut truth = [class_of(SourceKind::Modulated(pair.0)), class_of(SourceKind::Modulated(pair.1))];
        truth.sort_by_key(|c| c.index());
        for &snr in &cfg.snr_grid_db {
            let snr_key = (snr * 1000.0) as i64 as u64;
            let mut hits = 0;
            for t in 0..cfg.trials {
                let mut r = rng::stream(seed, &[tag::MIXING, pi as u64, snr_key, t as u64]);
                let a = synth_clean(pair.0, &mut r);
                let b = synth_clean(pair.1, &mut r);
                let mixing = draw_mixing(&mut r, cfg.min_det);
                let (o1, o2) = superimpose(&a, &b, mixing)?;

                // Recovery is scored on the noiseless mixture against the
                // true sources.
                let sep = separate(&[o1.stacked(), o2.stacked()], &ica)?;
                let c = matched_correlations(&sep.sources, &[a.stacked(), b.stacked()]);
                recovery.push(RecoveryRow {
                    trial_id: trials.len(),
                    pair: pair.to_string(),
                    corr_first: c[0],
                    corr_second: c[1],
                });

                let obs = MixtureObservation {
                    observations: [apply_awgn(&o1, snr, &mut r), apply_awgn(&o2, snr, &mut r)],
                    truth: Some([a.kind, b.kind]),
                };
                let predicted = separate_and_classify(&obs, &model, &ica)?;
                let correct = same_pair(predicted, truth);
                hits += correct as usize;
                trials.push(SeparationRow {
                    trial_id: trials.len(),
                    snr_db: snr,
                    true_pair: pair_name(truth),
                    predicted_pair: pair_name(predicted),
                    correct,
                });
            }
            summary.push(PairAccuracyRow {
                pair: pair.to_string(),
                snr_db: snr,
                trials: cfg.trials,
                accuracy: hits as f64 / cfg.trials as f64,
            });
        }
    }
    Ok(SuperimposedEvalReport {
        trials,
        recovery,
        summary,
    })
}
