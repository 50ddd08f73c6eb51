//! The named experiments. Each takes a flat key/value config and a root
//! seed, writes its tables into an output directory and reports thresholded
//! checks through the run manifest.

pub mod common;
pub mod ewc_demo;
pub mod outlier_eval;
pub mod replay_eval;
pub mod simulate;
pub mod superimposed_eval;
pub mod train_base;

use std::path::Path;

use crate::config::{Configurable, KeyValues};
use crate::error::{io_err, Error, Result};
use crate::manifest::Manifest;

pub const NAMES: [&str; 6] = [
    "train-base",
    "ewc-demo",
    "outlier-eval",
    "replay-eval",
    "superimposed-eval",
    "simulate",
];

pub const MANIFEST_FILE: &str = "manifest.json";

fn finish(
    name: &str,
    seed: u64,
    config: KeyValues,
    dir: &Path,
    mut outputs: Vec<String>,
    checks: Vec<crate::manifest::Check>,
    summary: Vec<(String, String)>,
) -> Result<Manifest> {
    let cfg_name = "config.txt";
    std::fs::write(dir.join(cfg_name), config.to_text()).map_err(io_err(dir.join(cfg_name)))?;
    outputs.push(cfg_name.into());
    let m = Manifest::new(name, seed, &config, outputs, checks).with_summary(summary);
    m.write(&dir.join(MANIFEST_FILE))?;
    Ok(m)
}

fn f(x: f64) -> String {
    format!("{x:.4}")
}

/// Runs experiment `name` and writes its outputs plus `manifest.json` and
/// the resolved `config.txt` into `dir`, which is created if missing.
pub fn run_named(name: &str, overrides: &KeyValues, seed: u64, dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    match name {
        "train-base" => {
            let cfg = train_base::TrainBaseConfig::from_key_values(overrides)?;
            let r = train_base::run(&cfg, seed)?;
            let files = r.write(dir)?;
            let summary = vec![
                ("test_accuracy".into(), f(r.test_accuracy)),
                ("checkpoint_sha256".into(), r.checkpoint_hash()),
                ("epochs_run".into(), r.history.records.len().to_string()),
            ];
            finish(name, seed, cfg.to_key_values(), dir, files, r.checks(), summary)
        }
        "ewc-demo" => {
            let cfg = ewc_demo::EwcDemoConfig::from_key_values(overrides)?;
            let r = ewc_demo::run(&cfg, seed)?;
            let files = r.write(dir)?;
            let summary = vec![
                ("task_a_before".into(), f(r.sgd.task_a_before)),
                ("sgd_task_a_after".into(), f(r.sgd.task_a_after)),
                ("sgd_task_b_after".into(), f(r.sgd.task_b_after)),
                ("ewc_task_a_after".into(), f(r.ewc.task_a_after)),
                ("ewc_task_b_after".into(), f(r.ewc.task_b_after)),
            ];
            finish(name, seed, cfg.to_key_values(), dir, files, r.checks(), summary)
        }
        "outlier-eval" => {
            let cfg = outlier_eval::OutlierEvalConfig::from_key_values(overrides)?;
            let r = outlier_eval::run(&cfg, seed)?;
            let files = r.write(dir)?;
            let summary = vec![
                ("selected_contamination".into(), r.selected_contamination().to_string()),
                ("mcd_inlier_acc".into(), f(r.mcd.inlier_acc)),
                ("mcd_outlier_acc".into(), f(r.mcd.outlier_acc)),
                ("kmeans_outlier_acc".into(), f(r.kmeans.outlier_acc)),
            ];
            finish(name, seed, cfg.to_key_values(), dir, files, r.checks(), summary)
        }
        "replay-eval" => {
            let cfg = replay_eval::ReplayEvalConfig::from_key_values(overrides)?;
            let r = replay_eval::run(&cfg, seed)?;
            let files = r.write(dir)?;
            let summary = vec![
                ("dataset_size".into(), r.dataset_size.to_string()),
                ("epochs_run".into(), r.history.records.len().to_string()),
            ];
            finish(name, seed, cfg.to_key_values(), dir, files, r.checks(), summary)
        }
        "superimposed-eval" => {
            let cfg = superimposed_eval::SuperimposedEvalConfig::from_key_values(overrides)?;
            let r = superimposed_eval::run(&cfg, seed)?;
            let files = r.write(dir)?;
            let summary = r.summary.iter().map(|s| (format!("{}@{}dB", s.pair, s.snr_db), f(s.accuracy))).collect();
            finish(name, seed, cfg.to_key_values(), dir, files, r.checks(), summary)
        }
        "simulate" => {
            let cfg = simulate::SimulateConfig::from_key_values(overrides)?;
            let r = simulate::run(&cfg, seed)?;
            let files = r.write(dir)?;
            let summary = r
                .metrics_rows()
                .iter()
                .map(|m| (format!("{}_throughput", m.scenario), format!("{:.1}", m.throughput_packets)))
                .collect();
            finish(name, seed, cfg.to_key_values(), dir, files, r.checks(), summary)
        }
        _ => Err(Error::Config(format!(
            "unknown experiment {name:?}; expected one of {}",
            NAMES.join(", ")
        ))),
    }
}
