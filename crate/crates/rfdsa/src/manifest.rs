//! JSON run manifest: what ran, with which settings, and which thresholds
//! passed.

use std::path::Path;

use serde::Serialize;

use crate::config::KeyValues;
use crate::error::{io_err, Result};

/// One thresholded quantity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    /// `">="`, `"<="` or `"=="`.
    pub op: &'static str,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            op: ">=",
            threshold,
            pass: value >= threshold,
        }
    }

    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            op: "<=",
            threshold,
            pass: value <= threshold,
        }
    }

    pub fn equals(name: &str, value: f64, expected: f64) -> Self {
        Self {
            name: name.into(),
            value,
            op: "==",
            threshold: expected,
            pass: value == expected,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub version: String,
    pub seed: u64,
    pub config: std::collections::BTreeMap<String, String>,
    pub outputs: Vec<String>,
    /// Headline results that are not thresholded.
    pub summary: std::collections::BTreeMap<String, String>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl Manifest {
    pub fn new(experiment: &str, seed: u64, config: &KeyValues, outputs: Vec<String>, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.pass);
        Self {
            experiment: experiment.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed,
            config: config.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
            outputs,
            summary: Default::default(),
            checks,
            passed,
        }
    }

    pub fn with_summary(mut self, entries: Vec<(String, String)>) -> Self {
        self.summary.extend(entries);
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(io_err(path))
    }
}
