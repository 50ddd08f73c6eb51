//! Unknown-signal detection on extracted classifier features.
//!
//! Two detectors are provided: a robust elliptic envelope (FAST-MCD location
//! and scatter with a Mahalanobis threshold picked by a contamination
//! factor) and 2-means clustering with the cluster holding fewer known
//! inliers marked as the outlier cluster.

mod kmeans;
mod mcd;

use alloc::vec::Vec;

#[cfg(test)]
use kmeans::fit_once;
pub use kmeans::{kmeans_fit, kmeans_fit_restarts, kmeans_label_outlier_cluster, KMeansConfig, KMeansModel};
pub use mcd::{mahalanobis, mcd_calibrate, mcd_fit, mcd_predict, McdConfig, McdModel};

use crate::math;
use crate::rng::{self, tag};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OutlierError {
    #[error("{n} samples are too few for {p} features")]
    TooFewSamples { n: usize, p: usize },
    #[error("features are degenerate (covariance is singular)")]
    DegenerateFeatures,
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("no training samples for calibration")]
    EmptyTraining,
    #[error("model has no threshold; calibrate it first")]
    Uncalibrated,
    #[error("contamination {0} is outside (0, 0.5]")]
    BadContamination(f64),
    #[error("evaluation set is empty")]
    EmptySet,
    #[error("features contain non-finite values")]
    NonFinite,
    #[error("no outlier cluster has been labeled")]
    Unlabeled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Inlier,
    Outlier,
}

/// Checks that all rows have length `p` and finite entries; returns `p`.
pub(crate) fn check_rows(rows: &[Vec<f64>]) -> Result<usize, OutlierError> {
    let p = rows.first().map_or(0, |r| r.len());
    for r in rows {
        if r.len() != p {
            return Err(OutlierError::DimensionMismatch { expected: p, got: r.len() });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(OutlierError::NonFinite);
        }
    }
    Ok(p)
}

/// Seeded Gaussian random projection, used to shrink wide feature vectors
/// before covariance estimation.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    weights: Vec<Vec<f64>>,
}

/// Target width for [`Projection::for_sample_size`].
pub const PROJECTED_DIM: usize = 16;

impl Projection {
    pub fn new(input_dim: usize, output_dim: usize, seed: u64) -> Self {
        let mut r = rng::stream(seed, &[tag::PROJECTION]);
        let s = 1.0 / math::sqrt(output_dim as f64);
        let weights = (0..output_dim)
            .map(|_| (0..input_dim).map(|_| s * rng::normal(&mut r)).collect())
            .collect();
        Self { weights }
    }

    /// A projection to [`PROJECTED_DIM`] when `p > n / 5`, else `None`.
    pub fn for_sample_size(n: usize, p: usize, seed: u64) -> Option<Self> {
        (p * 5 > n && p > PROJECTED_DIM).then(|| Self::new(p, PROJECTED_DIM, seed))
    }

    pub fn input_dim(&self) -> usize {
        self.weights.first().map_or(0, |w| w.len())
    }

    pub fn output_dim(&self) -> usize {
        self.weights.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.weights.iter().map(|w| crate::linalg::dot(w, x)).collect()
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
        rows.iter().map(|x| self.apply(x)).collect()
    }
}

/// One contamination setting of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub contamination: f64,
    pub inlier_acc: f64,
    pub outlier_acc: f64,
}

impl SweepRow {
    pub fn min_acc(&self) -> f64 {
        self.inlier_acc.min(self.outlier_acc)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Index into `rows` of the setting maximizing the smaller accuracy.
    pub selected: usize,
}

impl SweepResult {
    pub fn best(&self) -> &SweepRow {
        &self.rows[self.selected]
    }
}

/// Grid 0.01, 0.02, ..., 0.5.
pub fn default_contamination_grid() -> Vec<f64> {
    (1..=50).map(|i| i as f64 / 100.0).collect()
}

/// Calibrates `model` on the training inliers at each contamination level
/// and scores test inliers and outliers. Ties in the min-accuracy go to the
/// smaller contamination.
pub fn sweep_contamination(
    model: &McdModel,
    train_inliers: &[Vec<f64>],
    test_inliers: &[Vec<f64>],
    test_outliers: &[Vec<f64>],
    grid: &[f64],
) -> Result<SweepResult, OutlierError> {
    if test_inliers.is_empty() || test_outliers.is_empty() || grid.is_empty() {
        return Err(OutlierError::EmptySet);
    }
    if train_inliers.is_empty() {
        return Err(OutlierError::EmptyTraining);
    }
    let dist = |rows: &[Vec<f64>]| -> Result<Vec<f64>, OutlierError> {
        rows.iter().map(|x| mahalanobis(model, x)).collect()
    };
    let d_in = dist(test_inliers)?;
    let d_out = dist(test_outliers)?;
    let mut rows = Vec::with_capacity(grid.len());
    for &c in grid {
        let m = mcd_calibrate(model.clone(), train_inliers, c)?;
        let t = m.threshold().unwrap();
        let inlier_acc = d_in.iter().filter(|&&d| d <= t).count() as f64 / d_in.len() as f64;
        let outlier_acc = d_out.iter().filter(|&&d| d > t).count() as f64 / d_out.len() as f64;
        rows.push(SweepRow {
            contamination: c,
            inlier_acc,
            outlier_acc,
        });
    }
    let mut selected = 0;
    for (i, r) in rows.iter().enumerate() {
        let b = &rows[selected];
        if r.min_acc() > b.min_acc() || (r.min_acc() == b.min_acc() && r.contamination < b.contamination) {
            selected = i;
        }
    }
    Ok(SweepResult { rows, selected })
}

/// Uniform index sample without replacement (partial Fisher-Yates).
pub(crate) fn sample_indices(n: usize, k: usize, r: &mut impl rand::Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k.min(n) {
        let j = r.random_range(i..n);
        idx.swap(i, j);
    }
    idx.truncate(k.min(n));
    idx
}

#[cfg(test)]
mod tests;
