//! Minimal dense linear algebra: row-major matrices, Cholesky, symmetric
//! 2x2 eigendecomposition. Enough for covariance estimation and whitening
//! without pulling a linear-algebra crate into the `no_std` core.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use crate::math;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Self {
        assert_eq!(self.cols, other.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                let src = other.row(k);
                for (o, b) in out.row_mut(i).iter_mut().zip(src) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest absolute asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..i {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Mean and (maximum-likelihood) covariance of the selected rows.
pub fn mean_cov<'a>(rows: impl Iterator<Item = &'a [f64]> + Clone, p: usize) -> (Vec<f64>, Matrix) {
    let mut mean = vec![0.0; p];
    let mut n = 0usize;
    for r in rows.clone() {
        for (m, x) in mean.iter_mut().zip(r) {
            *m += x;
        }
        n += 1;
    }
    let inv_n = 1.0 / n.max(1) as f64;
    mean.iter_mut().for_each(|m| *m *= inv_n);
    let mut cov = Matrix::zeros(p, p);
    let mut centered = vec![0.0; p];
    for r in rows {
        for ((c, x), m) in centered.iter_mut().zip(r).zip(&mean) {
            *c = x - m;
        }
        for i in 0..p {
            let ci = centered[i];
            let row = &mut cov.data[i * p..i * p + i + 1];
            for (o, cj) in row.iter_mut().zip(&centered[..=i]) {
                *o += ci * cj;
            }
        }
    }
    for i in 0..p {
        for j in 0..=i {
            let v = cov[(i, j)] * inv_n;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    (mean, cov)
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    /// `None` when the matrix is not numerically positive definite.
    pub fn new(a: &Matrix) -> Option<Self> {
        let n = a.rows;
        assert_eq!(n, a.cols, "Cholesky needs a square matrix");
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)] - dot(&l.row(j)[..j], &l.row(j)[..j]);
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            d = math::sqrt(d);
            l[(j, j)] = d;
            for i in j + 1..n {
                let s = a[(i, j)] - dot(&l.row(i)[..j], &l.row(j)[..j]);
                l[(i, j)] = s / d;
            }
        }
        Some(Self { l })
    }

    pub fn factor(&self) -> &Matrix {
        &self.l
    }

    /// `ln det A`.
    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.l.rows).map(|i| math::ln(self.l[(i, i)])).sum::<f64>()
    }

    /// Solves `L y = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let s = b[i] - dot(&self.l.row(i)[..i], &y[..i]);
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    /// `b^T A^{-1} b`.
    pub fn quad_form_inv(&self, b: &[f64]) -> f64 {
        let y = self.solve_lower(b);
        dot(&y, &y)
    }
}

/// Eigen-decomposition of a symmetric 2x2 matrix `[[a, b], [b, c]]`.
/// Returns eigenvalues in descending order with unit eigenvectors.
pub fn sym_eigen_2x2(a: f64, b: f64, c: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let half_tr = 0.5 * (a + c);
    let disc = math::sqrt(0.25 * (a - c) * (a - c) + b * b);
    let l1 = half_tr + disc;
    let l2 = half_tr - disc;
    let v1 = if b.abs() > 1e-300 {
        let (x, y) = (l1 - c, b);
        let n = math::sqrt(x * x + y * y);
        [x / n, y / n]
    } else if a >= c {
        [1.0, 0.0]
    } else {
        [0.0, 1.0]
    };
    let v2 = [-v1[1], v1[0]];
    ([l1, l2], [v1, v2])
}

/// Inverse square root of a symmetric positive-definite 2x2 matrix.
pub fn inv_sqrt_2x2(m: [[f64; 2]; 2]) -> Option<[[f64; 2]; 2]> {
    let ([l1, l2], [v1, v2]) = sym_eigen_2x2(m[0][0], 0.5 * (m[0][1] + m[1][0]), m[1][1]);
    if !(l2 > 0.0) {
        return None;
    }
    let (s1, s2) = (1.0 / math::sqrt(l1), 1.0 / math::sqrt(l2));
    let mut out = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = s1 * v1[i] * v1[j] + s2 * v2[i] * v2[j];
        }
    }
    Some(out)
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ln_pre = a * math::ln(x) - x - libm::lgamma(a);
    if x < a + 1.0 {
        // Series expansion.
        let mut term = 1.0 / a;
        let mut sum = term;
        let mut ap = a;
        for _ in 0..1000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        sum * math::exp(ln_pre)
    } else {
        // Continued fraction for Q(a, x) (modified Lentz).
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..1000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        1.0 - math::exp(ln_pre) * h
    }
}

/// Chi-square CDF with `k` degrees of freedom.
pub fn chi2_cdf(x: f64, k: usize) -> f64 {
    gamma_p(k as f64 / 2.0, x / 2.0)
}

/// Chi-square quantile by bisection.
pub fn chi2_quantile(q: f64, k: usize) -> f64 {
    let (mut lo, mut hi) = (0.0, k as f64 + 10.0 * math::sqrt(2.0 * k as f64) + 10.0);
    while chi2_cdf(hi, k) < q {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(mid, k) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_reconstructs() {
        let a = Matrix::from_rows(&[vec![4.0, 2.0, 0.4], vec![2.0, 5.0, 1.0], vec![0.4, 1.0, 3.0]]);
        let ch = Cholesky::new(&a).unwrap();
        let l = ch.factor();
        let back = l.matmul(&l.transpose());
        assert!(back.max_abs_diff(&a) < 1e-12);
        // det by cofactor expansion
        let det = 4.0 * (15.0 - 1.0) - 2.0 * (6.0 - 0.4) + 0.4 * (2.0 - 2.0);
        assert!((ch.log_det() - math::ln(det)).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(Cholesky::new(&a).is_none());
    }

    #[test]
    fn quad_form_matches_inverse() {
        let a = Matrix::from_rows(&[vec![4.0, 0.0], vec![0.0, 1.0]]);
        let ch = Cholesky::new(&a).unwrap();
        assert!((ch.quad_form_inv(&[2.0, 0.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigen_2x2() {
        let ([l1, l2], [v1, v2]) = sym_eigen_2x2(2.0, 1.0, 2.0);
        assert!((l1 - 3.0).abs() < 1e-12 && (l2 - 1.0).abs() < 1e-12);
        assert!((dot(&v1, &v2)).abs() < 1e-12);
        let m = inv_sqrt_2x2([[2.0, 1.0], [1.0, 2.0]]).unwrap();
        // (M^{-1/2})^2 * M = I
        let sq = [
            [m[0][0] * m[0][0] + m[0][1] * m[1][0], m[0][0] * m[0][1] + m[0][1] * m[1][1]],
            [m[1][0] * m[0][0] + m[1][1] * m[1][0], m[1][0] * m[0][1] + m[1][1] * m[1][1]],
        ];
        let prod00 = sq[0][0] * 2.0 + sq[0][1] * 1.0;
        let prod01 = sq[0][0] * 1.0 + sq[0][1] * 2.0;
        assert!((prod00 - 1.0).abs() < 1e-12 && prod01.abs() < 1e-12);
    }

    #[test]
    fn chi2_known_values() {
        // chi2 with 2 dof is exponential with mean 2.
        assert!((chi2_cdf(2.0, 2) - (1.0 - math::exp(-1.0))).abs() < 1e-12);
        assert!((chi2_quantile(0.5, 2) - 2.0 * core::f64::consts::LN_2).abs() < 1e-9);
        // chi2 with 1 dof at 3.841458820694124 is 0.95
        assert!((chi2_cdf(3.841458820694124, 1) - 0.95).abs() < 1e-9);
        assert!((chi2_cdf(40.0, 16) - 0.999_221_409_917_492_6).abs() < 1e-10);
        assert!((chi2_quantile(0.975, 16) - 28.845_350_723_404_753).abs() < 1e-8);
    }

    #[test]
    fn covariance_of_known_points() {
        let rows = [vec![1.0, 2.0], vec![3.0, 2.0], vec![1.0, 4.0], vec![3.0, 4.0]];
        let (m, c) = mean_cov(rows.iter().map(|r| r.as_slice()), 2);
        assert_eq!(m, vec![2.0, 3.0]);
        assert!((c[(0, 0)] - 1.0).abs() < 1e-15 && (c[(1, 1)] - 1.0).abs() < 1e-15);
        assert!(c[(0, 1)].abs() < 1e-15);
    }
}
