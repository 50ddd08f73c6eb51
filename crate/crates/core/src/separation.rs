//! Two-source blind separation: whitening followed by symmetric FastICA
//! with a tanh contrast, on the real `[I; Q]` stacking of each observation.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{inv_sqrt_2x2, sym_eigen_2x2};
use crate::math;
use crate::nnet::{classify, NeuralModel, NnetError};
use crate::rng::{self, tag};
use crate::sigsynth::{IqFrame, SignalClass, SourceKind, SynthError};

/// Observation rows need at least this many samples.
pub const MIN_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SeparationError {
    #[error("observations need at least {MIN_SAMPLES} samples, got {0}")]
    TooShort(usize),
    #[error("observations differ in length")]
    LengthMismatch,
    #[error("observations are linearly dependent")]
    RankDeficient,
    #[error("observations contain non-finite values")]
    NonFinite,
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Classify(#[from] NnetError),
}

pub type Mat2 = [[f64; 2]; 2];

fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut o = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            o[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    o
}

fn transpose(a: &Mat2) -> Mat2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

fn apply(m: &Mat2, rows: &[Vec<f64>; 2]) -> [Vec<f64>; 2] {
    let n = rows[0].len();
    let mut out = [vec![0.0; n], vec![0.0; n]];
    for i in 0..2 {
        for k in 0..n {
            out[i][k] = m[i][0] * rows[0][k] + m[i][1] * rows[1][k];
        }
    }
    out
}

/// Centering and whitening of a 2-row observation matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Whitening {
    pub mean: [f64; 2],
    /// `x_white = transform * (x - mean)`.
    pub transform: Mat2,
}

fn covariance(rows: &[Vec<f64>; 2], mean: [f64; 2]) -> Mat2 {
    let n = rows[0].len() as f64;
    let mut c = [[0.0; 2]; 2];
    for k in 0..rows[0].len() {
        let a = rows[0][k] - mean[0];
        let b = rows[1][k] - mean[1];
        c[0][0] += a * a;
        c[0][1] += a * b;
        c[1][1] += b * b;
    }
    c[0][0] /= n;
    c[0][1] /= n;
    c[1][1] /= n;
    c[1][0] = c[0][1];
    c
}

/// Returns rows with zero mean and identity covariance, and the transform
/// that produced them.
pub fn whiten(x: &[Vec<f64>; 2]) -> Result<([Vec<f64>; 2], Whitening), SeparationError> {
    let n = x[0].len();
    if x[1].len() != n {
        return Err(SeparationError::LengthMismatch);
    }
    if n < MIN_SAMPLES {
        return Err(SeparationError::TooShort(n));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(SeparationError::NonFinite);
    }
    let mean = [
        x[0].iter().sum::<f64>() / n as f64,
        x[1].iter().sum::<f64>() / n as f64,
    ];
    let c = covariance(x, mean);
    let ([l1, l2], _) = sym_eigen_2x2(c[0][0], c[0][1], c[1][1]);
    if !(l1 > 0.0) || l2 <= 1e-10 * l1 {
        return Err(SeparationError::RankDeficient);
    }
    let transform = inv_sqrt_2x2(c).ok_or(SeparationError::RankDeficient)?;
    let centered = [
        x[0].iter().map(|v| v - mean[0]).collect(),
        x[1].iter().map(|v| v - mean[1]).collect(),
    ];
    Ok((apply(&transform, &centered), Whitening { mean, transform }))
}

/// `(W W^T)^{-1/2} W`.
fn decorrelate(w: &Mat2) -> Mat2 {
    let wwt = matmul(w, &transpose(w));
    match inv_sqrt_2x2(wwt) {
        Some(s) => matmul(&s, w),
        None => [[1.0, 0.0], [0.0, 1.0]],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcaConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for IcaConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 500,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationResult {
    /// Rotation applied to the whitened data; rows are orthonormal.
    pub rotation: Mat2,
    /// Full unmixing of the centered observations: `rotation * whitening`.
    pub unmixing: Mat2,
    /// Recovered sources, unit variance.
    pub sources: [Vec<f64>; 2],
    pub iterations: usize,
    pub converged: bool,
}

/// Symmetric fixed-point FastICA on whitened rows. On non-convergence the
/// last iterate is returned with `converged == false`.
pub fn fastica(white: &[Vec<f64>; 2], cfg: &IcaConfig) -> SeparationResult {
    let n = white[0].len() as f64;
    let mut r = rng::stream(cfg.seed, &[tag::ICA]);
    let mut w = [[0.0; 2]; 2];
    for row in w.iter_mut() {
        for v in row.iter_mut() {
            *v = rng::normal(&mut r);
        }
    }
    w = decorrelate(&w);
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let mut next = [[0.0; 2]; 2];
        for i in 0..2 {
            let mut acc = [0.0; 2];
            let mut dsum = 0.0;
            for k in 0..white[0].len() {
                let x = [white[0][k], white[1][k]];
                let g = math::tanh(w[i][0] * x[0] + w[i][1] * x[1]);
                acc[0] += x[0] * g;
                acc[1] += x[1] * g;
                dsum += 1.0 - g * g;
            }
            for j in 0..2 {
                next[i][j] = acc[j] / n - dsum / n * w[i][j];
            }
        }
        let next = decorrelate(&next);
        let lim = (0..2)
            .map(|i| (next[i][0] * w[i][0] + next[i][1] * w[i][1]).abs())
            .fold(f64::INFINITY, f64::min);
        w = next;
        if lim > 1.0 - cfg.tol {
            converged = true;
            break;
        }
    }
    SeparationResult {
        rotation: w,
        unmixing: w,
        sources: apply(&w, white),
        iterations,
        converged,
    }
}

/// Whitens then runs FastICA; `unmixing` maps centered observations to sources.
pub fn separate(x: &[Vec<f64>; 2], cfg: &IcaConfig) -> Result<SeparationResult, SeparationError> {
    let (white, wh) = whiten(x)?;
    let mut res = fastica(&white, cfg);
    res.unmixing = matmul(&res.rotation, &wh.transform);
    Ok(res)
}

/// Two observations of one mixing event.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureObservation {
    pub observations: [IqFrame; 2],
    /// True sources, when known (evaluation only).
    pub truth: Option<[SourceKind; 2]>,
}

impl MixtureObservation {
    pub fn rows(&self) -> [Vec<f64>; 2] {
        [self.observations[0].stacked(), self.observations[1].stacked()]
    }
}

/// Separates the mixture, scales each component to unit power and
/// classifies it. The pair is returned sorted by class index, since
/// separation cannot recover source order.
pub fn separate_and_classify(
    obs: &MixtureObservation,
    model: &NeuralModel,
    cfg: &IcaConfig,
) -> Result<[SignalClass; 2], SeparationError> {
    let res = separate(&obs.rows(), cfg)?;
    let snr = obs.observations[0].snr_db;
    let mut out = [SignalClass::Idle; 2];
    for (o, s) in out.iter_mut().zip(&res.sources) {
        let frame = IqFrame::from_stacked(s, snr, SourceKind::Idle)?.normalized();
        *o = classify(model, &frame)?.0;
    }
    out.sort_by_key(|c| c.index());
    Ok(out)
}

/// Order-insensitive pair comparison.
pub fn same_pair(a: [SignalClass; 2], b: [SignalClass; 2]) -> bool {
    (a[0] == b[0] && a[1] == b[1]) || (a[0] == b[1] && a[1] == b[0])
}

/// Pearson correlation.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len()) as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / math::sqrt(saa * sbb)
}

/// Absolute correlations of recovered against true sources under the
/// matching with the larger total; returned in true-source order.
pub fn matched_correlations(recovered: &[Vec<f64>; 2], truth: &[Vec<f64>; 2]) -> [f64; 2] {
    let c = |i: usize, j: usize| correlation(&recovered[i], &truth[j]).abs();
    let straight = [c(0, 0), c(1, 1)];
    let crossed = [c(1, 0), c(0, 1)];
    if crossed[0] + crossed[1] > straight[0] + straight[1] {
        crossed
    } else {
        straight
    }
}
