//! Unknown-signal detection on classifier features: an MCD envelope with a
//! contamination sweep, and two-cluster k-means.

use std::path::Path;

use rfdsa_core::nnet::{extract_features, train, LabeledSet, NeuralModel};
use rfdsa_core::outlier::{
    default_contamination_grid, kmeans_fit_restarts, kmeans_label_outlier_cluster, mcd_fit, sweep_contamination,
    KMeansConfig, McdConfig, Projection, SweepResult, Verdict,
};
use rfdsa_core::rng::derive_seed;
use rfdsa_core::sigsynth::{make_dataset, DatasetSpec, LabeledFrame, ModulationKind, SourceKind};
use serde::{Deserialize, Serialize};

use super::common::{index_split, require, subset, TrainSettings};
use crate::config::{join, on_off, parse_bool, parse_list, parse_modulations, parse_value, unknown_key, Configurable};
use crate::error::Result;
use crate::manifest::Check;
use crate::tables::{self, sweep_rows};

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierEvalConfig {
    pub inliers: Vec<ModulationKind>,
    pub outliers: Vec<ModulationKind>,
    pub snr_grid_db: Vec<f64>,
    /// Frames per modulation per SNR.
    pub per_mod_count: usize,
    pub test_fraction: f64,
    pub contamination_grid: Vec<f64>,
    pub kmeans_standardize: bool,
    pub train: TrainSettings,
}

impl Default for OutlierEvalConfig {
    fn default() -> Self {
        use ModulationKind::*;
        Self {
            inliers: vec![Qpsk, Psk8, Cpfsk, AmSsb, AmDsb, Gfsk],
            outliers: vec![Qam16, Qam64, Pam4, Wbfm],
            snr_grid_db: vec![18.0],
            per_mod_count: 200,
            test_fraction: 0.25,
            contamination_grid: default_contamination_grid(),
            kmeans_standardize: false,
            train: TrainSettings {
                epochs: 20,
                ..TrainSettings::default()
            },
        }
    }
}

impl Configurable for OutlierEvalConfig {
    fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "inliers" => self.inliers = parse_modulations(key, value)?,
            "outliers" => self.outliers = parse_modulations(key, value)?,
            "snr_grid_db" => self.snr_grid_db = parse_list(key, value)?,
            "per_mod_count" => self.per_mod_count = parse_value(key, value)?,
            "test_fraction" => self.test_fraction = parse_value(key, value)?,
            "contamination_grid" => self.contamination_grid = parse_list(key, value)?,
            "kmeans_standardize" => self.kmeans_standardize = parse_bool(key, value)?,
            _ if self.train.apply(key, value)? => {}
            _ => return Err(unknown_key(key)),
        }
        Ok(())
    }

    fn pairs(&self) -> Vec<(String, String)> {
        let mut v = vec![
            ("inliers".into(), join(&self.inliers)),
            ("outliers".into(), join(&self.outliers)),
            ("snr_grid_db".into(), join(&self.snr_grid_db)),
            ("per_mod_count".into(), self.per_mod_count.to_string()),
            ("test_fraction".into(), self.test_fraction.to_string()),
            ("contamination_grid".into(), join(&self.contamination_grid)),
            ("kmeans_standardize".into(), on_off(self.kmeans_standardize)),
        ];
        v.extend(self.train.pairs());
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorRow {
    pub method: String,
    pub inlier_acc: f64,
    pub outlier_acc: f64,
    pub overall_acc: f64,
}

pub struct OutlierEvalReport {
    pub sweep: SweepResult,
    pub kmeans: DetectorRow,
    pub mcd: DetectorRow,
}

impl OutlierEvalReport {
    pub fn selected_contamination(&self) -> f64 {
        self.sweep.best().contamination
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_least("mcd_min_accuracy", self.sweep.best().min_acc(), 0.75),
            Check::at_least("kmeans_inlier_accuracy", self.kmeans.inlier_acc, 0.95),
            Check::at_least("kmeans_overall_accuracy", self.kmeans.overall_acc, 0.85),
        ]
    }

    pub fn write(&self, dir: &Path) -> Result<Vec<String>> {
        tables::write_rows(&dir.join("contamination_sweep.csv"), &sweep_rows(&self.sweep))?;
        tables::write_rows(&dir.join("detectors.csv"), &[self.mcd.clone(), self.kmeans.clone()])?;
        Ok(vec!["contamination_sweep.csv".into(), "detectors.csv".into()])
    }
}

fn frames(mods: &[ModulationKind], cfg: &OutlierEvalConfig, seed: u64) -> Result<Vec<LabeledFrame>> {
    Ok(make_dataset(&DatasetSpec {
        snr_grid_db: cfg.snr_grid_db.clone(),
        per_mod_count: cfg.per_mod_count,
        modulations: mods.to_vec(),
        include_idle: false,
        seed,
    })?)
}

fn features(model: &NeuralModel, frames: &[LabeledFrame]) -> Result<Vec<Vec<f64>>> {
    Ok(frames
        .iter()
        .map(|f| extract_features(model, &f.frame))
        .collect::<std::result::Result<_, _>>()?)
}

fn detector_row(method: &str, inlier_hits: usize, n_in: usize, outlier_hits: usize, n_out: usize) -> DetectorRow {
    DetectorRow {
        method: method.into(),
        inlier_acc: inlier_hits as f64 / n_in as f64,
        outlier_acc: outlier_hits as f64 / n_out as f64,
        overall_acc: (inlier_hits + outlier_hits) as f64 / (n_in + n_out) as f64,
    }
}

pub fn run(cfg: &OutlierEvalConfig, seed: u64) -> Result<OutlierEvalReport> {
    require(!cfg.inliers.is_empty() && !cfg.outliers.is_empty(), "inliers and outliers must be non-empty")?;
    require(cfg.inliers.iter().all(|m| !cfg.outliers.contains(m)), "inliers and outliers overlap")?;
    require(cfg.test_fraction > 0.0 && cfg.test_fraction < 1.0, "test_fraction must lie in (0, 1)")?;

    // The feature extractor is a modulation classifier over the known signals.
    let inlier_frames = frames(&cfg.inliers, cfg, seed)?;
    let outlier_frames = frames(&cfg.outliers, cfg, seed)?;
    let (test_idx, train_idx) = index_split(inlier_frames.len(), cfg.test_fraction, seed, 3);
    let train_frames = subset(&inlier_frames, &train_idx);
    let test_frames = subset(&inlier_frames, &test_idx);
    let (out_idx, _) = index_split(outlier_frames.len(), cfg.test_fraction, seed, 4);
    let outlier_test = subset(&outlier_frames, &out_idx);

    let labels: Vec<String> = cfg.inliers.iter().map(|m| m.name().to_string()).collect();
    let label = |f: &LabeledFrame| match f.kind {
        SourceKind::Modulated(m) => cfg.inliers.iter().position(|&x| x == m).unwrap(),
        SourceKind::Idle => unreachable!("no idle frames requested"),
    };
    let data = LabeledSet::from_frames(&train_frames, label);
    let model = NeuralModel::reduced(&cfg.train.arch(), labels, seed)?;
    let (model, _) = train(model, &data, &cfg.train.train_config(seed))?;

    let f_train = features(&model, &train_frames)?;
    let f_in = features(&model, &test_frames)?;
    let f_out = features(&model, &outlier_test)?;

    // MCD needs many more samples than dimensions.
    let proj = Projection::for_sample_size(f_train.len(), f_train[0].len(), derive_seed(seed, &[5]));
    let reduce = |rows: &[Vec<f64>]| match &proj {
        Some(p) => p.apply_all(rows),
        None => rows.to_vec(),
    };
    let (p_train, p_in, p_out) = (reduce(&f_train), reduce(&f_in), reduce(&f_out));
    let mcd = mcd_fit(
        &p_train,
        &McdConfig {
            seed,
            ..McdConfig::default()
        },
    )?;
    let sweep = sweep_contamination(&mcd, &p_train, &p_in, &p_out, &cfg.contamination_grid)?;
    let best = *sweep.best();
    let mcd_row = detector_row(
        "mcd",
        (best.inlier_acc * p_in.len() as f64).round() as usize,
        p_in.len(),
        (best.outlier_acc * p_out.len() as f64).round() as usize,
        p_out.len(),
    );

    // k-means clusters the unlabeled test pool; training inliers name the
    // inlier cluster.
    let pool: Vec<Vec<f64>> = f_in.iter().chain(&f_out).cloned().collect();
    let km = kmeans_fit_restarts(
        &pool,
        &KMeansConfig {
            standardize: cfg.kmeans_standardize,
            seed,
            ..KMeansConfig::default()
        },
    )?;
    let km = kmeans_label_outlier_cluster(km, &f_train)?;
    let mut in_hits = 0;
    for x in &f_in {
        in_hits += (km.predict(x)? == Verdict::Inlier) as usize;
    }
    let mut out_hits = 0;
    for x in &f_out {
        out_hits += (km.predict(x)? == Verdict::Outlier) as usize;
    }
    let kmeans = detector_row("kmeans", in_hits, f_in.len(), out_hits, f_out.len());
    Ok(OutlierEvalReport {
        sweep,
        kmeans,
        mcd: mcd_row,
    })
}
