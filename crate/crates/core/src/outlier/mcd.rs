use alloc::vec::Vec;

use super::{check_rows, sample_indices, OutlierError, Verdict};
use crate::linalg::{chi2_cdf, chi2_quantile, mean_cov, Cholesky, Matrix};
use crate::math;
use crate::rng::{self, tag};

/// FAST-MCD search settings.
#[derive(Debug, Clone, PartialEq)]
pub struct McdConfig {
    /// Fraction of points in the support subset; `None` uses
    /// `ceil((n + p + 1) / 2)`.
    pub support_fraction: Option<f64>,
    pub initial_subsets: usize,
    pub initial_csteps: usize,
    pub refine_best: usize,
    pub max_csteps: usize,
    pub seed: u64,
}

impl Default for McdConfig {
    fn default() -> Self {
        Self {
            support_fraction: None,
            initial_subsets: 50,
            initial_csteps: 3,
            refine_best: 5,
            max_csteps: 100,
            seed: 0,
        }
    }
}

/// Robust location/scatter with an optional distance threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct McdModel {
    mean: Vec<f64>,
    cov: Matrix,
    chol: Cholesky,
    support: usize,
    n: usize,
    log_det: f64,
    threshold: Option<f64>,
    contamination: Option<f64>,
}

impl McdModel {
    /// Builds a model from a given location and SPD scatter matrix.
    pub fn from_parts(mean: Vec<f64>, cov: Matrix) -> Result<Self, OutlierError> {
        if cov.rows() != mean.len() || cov.cols() != mean.len() {
            return Err(OutlierError::DimensionMismatch {
                expected: mean.len(),
                got: cov.rows(),
            });
        }
        let chol = Cholesky::new(&cov).ok_or(OutlierError::DegenerateFeatures)?;
        let log_det = chol.log_det();
        Ok(Self {
            n: 0,
            support: 0,
            mean,
            cov,
            chol,
            log_det,
            threshold: None,
            contamination: None,
        })
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn covariance(&self) -> &Matrix {
        &self.cov
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `h / n` of the fit.
    pub fn support_fraction(&self) -> f64 {
        if self.n == 0 {
            1.0
        } else {
            self.support as f64 / self.n as f64
        }
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn threshold(&self) -> Option<f64> {
        self.threshold
    }

    pub fn contamination(&self) -> Option<f64> {
        self.contamination
    }

    /// Sets the threshold directly.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = Some(threshold);
        self
    }
}

struct Candidate {
    mean: Vec<f64>,
    cov: Matrix,
    chol: Cholesky,
    log_det: f64,
}

fn estimate(rows: &[Vec<f64>], idx: &[usize], p: usize) -> Option<Candidate> {
    let (mean, mut cov) = mean_cov(idx.iter().map(|&i| rows[i].as_slice()), p);
    let chol = match Cholesky::new(&cov) {
        Some(c) => c,
        None => {
            add_ridge(&mut cov);
            Cholesky::new(&cov)?
        }
    };
    let log_det = chol.log_det();
    Some(Candidate { mean, cov, chol, log_det })
}

fn add_ridge(cov: &mut Matrix) {
    let p = cov.rows();
    let tr = cov.trace();
    let ridge = 1e-6 * if tr > 0.0 { tr / p as f64 } else { 1.0 };
    for i in 0..p {
        cov[(i, i)] += ridge;
    }
}

fn sq_distances(rows: &[Vec<f64>], c: &Candidate, buf: &mut Vec<f64>) -> Vec<f64> {
    rows.iter()
        .map(|x| {
            buf.clear();
            buf.extend(x.iter().zip(&c.mean).map(|(a, m)| a - m));
            c.chol.quad_form_inv(buf)
        })
        .collect()
}

/// Indices of the `h` smallest values.
fn smallest(d: &[f64], h: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    idx.truncate(h);
    idx
}

/// Concentration steps until the determinant stops decreasing or `steps`
/// runs out.
fn csteps(rows: &[Vec<f64>], mut c: Candidate, h: usize, p: usize, steps: usize) -> Candidate {
    let mut buf = Vec::with_capacity(p);
    for _ in 0..steps {
        let d = sq_distances(rows, &c, &mut buf);
        let next = match estimate(rows, &smallest(&d, h), p) {
            Some(n) => n,
            None => break,
        };
        let done = next.log_det >= c.log_det - 1e-12;
        if next.log_det <= c.log_det {
            c = next;
        }
        if done {
            break;
        }
    }
    c
}

/// FAST-MCD with consistency correction and one reweighting step.
pub fn mcd_fit(features: &[Vec<f64>], cfg: &McdConfig) -> Result<McdModel, OutlierError> {
    let p = check_rows(features)?;
    let n = features.len();
    if p == 0 || n <= 2 * p {
        return Err(OutlierError::TooFewSamples { n, p });
    }
    let h_min = (n + p + 2) / 2;
    let h = match cfg.support_fraction {
        Some(f) => (math::ceil(f * n as f64) as usize).clamp(h_min, n),
        None => h_min,
    };

    let mut r = rng::stream(cfg.seed, &[tag::MCD]);
    let mut pool: Vec<Candidate> = Vec::new();
    for _ in 0..cfg.initial_subsets.max(1) {
        let idx = sample_indices(n, h, &mut r);
        if let Some(c) = estimate(features, &idx, p) {
            pool.push(csteps(features, c, h, p, cfg.initial_csteps));
        }
    }
    if pool.is_empty() {
        return Err(OutlierError::DegenerateFeatures);
    }
    pool.sort_by(|a, b| a.log_det.total_cmp(&b.log_det));
    pool.truncate(cfg.refine_best.max(1));
    let best = pool
        .into_iter()
        .map(|c| csteps(features, c, h, p, cfg.max_csteps))
        .min_by(|a, b| a.log_det.total_cmp(&b.log_det))
        .unwrap();

    // The covariance of the central fraction q of a Gaussian sample is
    // shrunk by P(chi2_{p+2} <= chi2_{p,q}) / q; undo that for the raw
    // estimate, then once more after reweighting over the points inside
    // the 97.5% ellipse.
    let raw = rescale(best, consistency_factor(h as f64 / n as f64, p))?;
    let cut = chi2_quantile(0.975, p);
    let mut buf = Vec::with_capacity(p);
    let keep: Vec<usize> = sq_distances(features, &raw, &mut buf)
        .iter()
        .enumerate()
        .filter(|(_, &d)| d <= cut)
        .map(|(i, _)| i)
        .collect();
    let fin = match (keep.len() > p).then(|| estimate(features, &keep, p)).flatten() {
        Some(c) => rescale(c, consistency_factor(0.975, p))?,
        None => raw,
    };
    Ok(McdModel {
        mean: fin.mean,
        cov: fin.cov,
        chol: fin.chol,
        support: h,
        n,
        log_det: fin.log_det,
        threshold: None,
        contamination: None,
    })
}

fn consistency_factor(q: f64, p: usize) -> f64 {
    if q >= 1.0 {
        return 1.0;
    }
    q / chi2_cdf(chi2_quantile(q, p), p + 2)
}

fn rescale(c: Candidate, factor: f64) -> Result<Candidate, OutlierError> {
    let p = c.mean.len();
    let mut cov = c.cov;
    for i in 0..p {
        for j in 0..p {
            cov[(i, j)] *= factor;
        }
    }
    let chol = match Cholesky::new(&cov) {
        Some(c) => c,
        None => {
            add_ridge(&mut cov);
            Cholesky::new(&cov).ok_or(OutlierError::DegenerateFeatures)?
        }
    };
    let log_det = chol.log_det();
    Ok(Candidate {
        mean: c.mean,
        cov,
        chol,
        log_det,
    })
}

/// `sqrt((x - mu)^T S^{-1} (x - mu))`.
pub fn mahalanobis(model: &McdModel, x: &[f64]) -> Result<f64, OutlierError> {
    if x.len() != model.dim() {
        return Err(OutlierError::DimensionMismatch {
            expected: model.dim(),
            got: x.len(),
        });
    }
    let centered: Vec<f64> = x.iter().zip(&model.mean).map(|(a, m)| a - m).collect();
    Ok(math::sqrt(model.chol.quad_form_inv(&centered)))
}

/// Sets the threshold so that `floor(contamination * n)` training points
/// lie strictly beyond it (fewer when distances tie at the cut).
pub fn mcd_calibrate(mut model: McdModel, training: &[Vec<f64>], contamination: f64) -> Result<McdModel, OutlierError> {
    if !(contamination > 0.0 && contamination <= 0.5) {
        return Err(OutlierError::BadContamination(contamination));
    }
    if training.is_empty() {
        return Err(OutlierError::EmptyTraining);
    }
    let mut d = training
        .iter()
        .map(|x| mahalanobis(&model, x))
        .collect::<Result<Vec<_>, _>>()?;
    d.sort_by(f64::total_cmp);
    let n = d.len();
    let flagged = math::floor(contamination * n as f64 + 1e-9) as usize;
    model.threshold = Some(d[n - 1 - flagged.min(n - 1)]);
    model.contamination = Some(contamination);
    Ok(model)
}

/// Outlier iff the distance exceeds the threshold; the boundary is inlier.
pub fn mcd_predict(model: &McdModel, x: &[f64]) -> Result<Verdict, OutlierError> {
    let t = model.threshold.ok_or(OutlierError::Uncalibrated)?;
    Ok(if mahalanobis(model, x)? > t {
        Verdict::Outlier
    } else {
        Verdict::Inlier
    })
}
