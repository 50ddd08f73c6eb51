use alloc::vec;
use alloc::vec::Vec;


use super::{check_rows, OutlierError, Verdict};
use crate::math;
use crate::rng::{self, tag};

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Stop once no centroid moves farther than this.
    pub tol: f64,
    pub restarts: usize,
    /// Scale every feature to zero mean and unit variance first.
    pub standardize: bool,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 2,
            max_iter: 300,
            tol: 1e-6,
            restarts: 10,
            standardize: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansModel {
    centroids: Vec<Vec<f64>>,
    /// Per-feature (mean, std) when standardizing.
    scaling: Option<Vec<(f64, f64)>>,
    pub inertia: f64,
    /// Inertia of the seeding and after each Lloyd iteration.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
    pub outlier_cluster: Option<usize>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, x);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

impl KMeansModel {
    pub fn centroids(&self) -> &[Vec<f64>] {
        &self.centroids
    }

    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    fn scaled(&self, x: &[f64]) -> Vec<f64> {
        match &self.scaling {
            Some(s) => x.iter().zip(s).map(|(v, (m, sd))| (v - m) / sd).collect(),
            None => x.to_vec(),
        }
    }

    /// Index of the nearest centroid.
    pub fn assign(&self, x: &[f64]) -> Result<usize, OutlierError> {
        let dim = self.centroids[0].len();
        if x.len() != dim {
            return Err(OutlierError::DimensionMismatch { expected: dim, got: x.len() });
        }
        Ok(nearest(&self.centroids, &self.scaled(x)).0)
    }

    pub fn predict(&self, x: &[f64]) -> Result<Verdict, OutlierError> {
        let out = self.outlier_cluster.ok_or(OutlierError::Unlabeled)?;
        Ok(if self.assign(x)? == out {
            Verdict::Outlier
        } else {
            Verdict::Inlier
        })
    }
}

fn standardization(rows: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let p = rows[0].len();
    let n = rows.len() as f64;
    (0..p)
        .map(|j| {
            let m = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let v = rows.iter().map(|r| (r[j] - m) * (r[j] - m)).sum::<f64>() / n;
            let sd = math::sqrt(v);
            (m, if sd > 0.0 { sd } else { 1.0 })
        })
        .collect()
}

/// k-means++ seeding.
fn seed_centroids(rows: &[Vec<f64>], k: usize, r: &mut impl rand::Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut centroids = vec![rows[r.random_range(0..n)].clone()];
    let mut d: Vec<f64> = rows.iter().map(|x| sq_dist(x, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            let mut target = r.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &di) in d.iter().enumerate() {
                if target < di {
                    chosen = i;
                    break;
                }
                target -= di;
            }
            chosen
        } else {
            r.random_range(0..n)
        };
        centroids.push(rows[pick].clone());
        for (di, x) in d.iter_mut().zip(rows) {
            *di = di.min(sq_dist(x, centroids.last().unwrap()));
        }
    }
    centroids
}

fn lloyd(rows: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, cfg: &KMeansConfig) -> (Vec<Vec<f64>>, Vec<f64>, usize) {
    let p = rows[0].len();
    let k = centroids.len();
    let inertia = |c: &[Vec<f64>]| rows.iter().map(|x| nearest(c, x).1).sum::<f64>();
    let mut trace = vec![inertia(&centroids)];
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let mut sums = vec![vec![0.0; p]; k];
        let mut counts = vec![0usize; k];
        for x in rows {
            let (c, _) = nearest(&centroids, x);
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(x) {
                *s += v;
            }
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            // An emptied cluster keeps its centroid.
            if counts[c] == 0 {
                continue;
            }
            let inv = 1.0 / counts[c] as f64;
            let next: Vec<f64> = sums[c].iter().map(|s| s * inv).collect();
            shift = shift.max(math::sqrt(sq_dist(&next, &centroids[c])));
            centroids[c] = next;
        }
        trace.push(inertia(&centroids));
        if shift < cfg.tol {
            break;
        }
    }
    (centroids, trace, iterations)
}

/// One k-means run: k-means++ seeding then Lloyd iterations.
pub fn kmeans_fit(features: &[Vec<f64>], cfg: &KMeansConfig) -> Result<KMeansModel, OutlierError> {
    fit_once(features, cfg, 0)
}

pub(super) fn fit_once(features: &[Vec<f64>], cfg: &KMeansConfig, restart: u64) -> Result<KMeansModel, OutlierError> {
    let p = check_rows(features)?;
    if cfg.k == 0 || features.len() < cfg.k || p == 0 {
        return Err(OutlierError::TooFewSamples { n: features.len(), p });
    }
    let scaling = cfg.standardize.then(|| standardization(features));
    let scaled: Vec<Vec<f64>>;
    let rows = match &scaling {
        Some(s) => {
            scaled = features
                .iter()
                .map(|x| x.iter().zip(s).map(|(v, (m, sd))| (v - m) / sd).collect())
                .collect();
            &scaled
        }
        None => features,
    };
    let mut r = rng::stream(cfg.seed, &[tag::KMEANS, restart]);
    let init = seed_centroids(rows, cfg.k, &mut r);
    let (centroids, inertia_trace, iterations) = lloyd(rows, init, cfg);
    Ok(KMeansModel {
        centroids,
        scaling,
        inertia: *inertia_trace.last().unwrap(),
        inertia_trace,
        iterations,
        outlier_cluster: None,
    })
}

/// Best of `cfg.restarts` runs by inertia (earliest wins ties).
pub fn kmeans_fit_restarts(features: &[Vec<f64>], cfg: &KMeansConfig) -> Result<KMeansModel, OutlierError> {
    let mut best = fit_once(features, cfg, 0)?;
    for i in 1..cfg.restarts.max(1) as u64 {
        let m = fit_once(features, cfg, i)?;
        if m.inertia < best.inertia {
            best = m;
        }
    }
    Ok(best)
}

/// Marks the cluster holding the fewest labeled inliers as the outlier
/// cluster. Ties go to the cluster whose centroid is farther from the
/// inliers' mean.
pub fn kmeans_label_outlier_cluster(mut model: KMeansModel, inliers: &[Vec<f64>]) -> Result<KMeansModel, OutlierError> {
    if inliers.is_empty() {
        return Err(OutlierError::EmptySet);
    }
    let k = model.k();
    let mut counts = vec![0usize; k];
    let scaled: Vec<Vec<f64>> = inliers.iter().map(|x| model.scaled(x)).collect();
    for x in inliers {
        counts[model.assign(x)?] += 1;
    }
    let p = scaled[0].len();
    let mut centre = vec![0.0; p];
    for x in &scaled {
        for (c, v) in centre.iter_mut().zip(x) {
            *c += v / scaled.len() as f64;
        }
    }
    let dist: Vec<f64> = model.centroids.iter().map(|c| sq_dist(c, &centre)).collect();
    let mut out = 0;
    for c in 1..k {
        if counts[c] < counts[out] || (counts[c] == counts[out] && dist[c] > dist[out]) {
            out = c;
        }
    }
    model.outlier_cluster = Some(out);
    Ok(model)
}
