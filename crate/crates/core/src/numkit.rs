//! Dense row-major linear algebra and seeded sampling.
//!
//! Everything here is sized for design matrices of a few tens of thousands of
//! rows and at most a couple of hundred columns.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Smallest Cholesky pivot accepted before a matrix is declared singular.
pub const PIVOT_FLOOR: f64 = 1e-12;

const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// Dense matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Builds a matrix from equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Matrix::new(rows.len(), cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.cols + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Column `col` copied out.
    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, col)).collect()
    }

    /// New matrix made of the given rows, in order.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            data.extend_from_slice(self.row(i));
        }
        Matrix {
            rows: indices.len(),
            cols: self.cols,
            data,
        }
    }

    /// New matrix with columns permuted: output column `j` is input column `order[j]`.
    pub fn select_columns(&self, order: &[usize]) -> Matrix {
        let mut data = Vec::with_capacity(self.rows * order.len());
        for i in 0..self.rows {
            let r = self.row(i);
            data.extend(order.iter().map(|&j| r[j]));
        }
        Matrix {
            rows: self.rows,
            cols: order.len(),
            data,
        }
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                found: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }

    /// `self · selfᵀ`.
    pub fn mul_self_transpose(&self) -> Matrix {
        let n = self.rows;
        let mut out = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = dot(self.row(i), self.row(j));
                out.set(i, j, v);
                out.set(j, i, v);
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|v| v * v).sum())
    }

    fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| f64::max(m, v.abs()))
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// Lower-triangular `L` with `L·Lᵀ = m`.
pub fn cholesky(m: &Matrix) -> Result<Matrix> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.cols(),
        });
    }
    let scale = m.max_abs().max(1.0);
    for i in 0..n {
        for j in 0..i {
            if (m.get(i, j) - m.get(j, i)).abs() > SYMMETRY_TOLERANCE * scale {
                return Err(Error::NotSymmetric { row: i, col: j });
            }
        }
    }

    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut pivot = m.get(j, j);
        for k in 0..j {
            pivot -= l.get(j, k) * l.get(j, k);
        }
        if !(pivot > PIVOT_FLOOR) {
            return Err(Error::NotPositiveDefinite { index: j, pivot });
        }
        let diag = libm::sqrt(pivot);
        l.set(j, j, diag);
        for i in j + 1..n {
            let mut v = m.get(i, j);
            for k in 0..j {
                v -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, v / diag);
        }
    }
    Ok(l)
}

/// Solves `L·Lᵀ x = rhs` given the lower factor.
pub fn cholesky_solve(l: &Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = l.rows();
    if rhs.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: rhs.len(),
        });
    }
    let mut y = rhs.to_vec();
    for i in 0..n {
        let mut v = y[i];
        for k in 0..i {
            v -= l.get(i, k) * y[k];
        }
        y[i] = v / l.get(i, i);
    }
    for i in (0..n).rev() {
        let mut v = y[i];
        for k in i + 1..n {
            v -= l.get(k, i) * y[k];
        }
        y[i] = v / l.get(i, i);
    }
    Ok(y)
}

/// Solves `m·x = rhs` for symmetric positive definite `m`.
pub fn solve_spd(m: &Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    if rhs.len() != m.rows() {
        return Err(Error::DimensionMismatch {
            expected: m.rows(),
            found: rhs.len(),
        });
    }
    let l = cholesky(m)?;
    cholesky_solve(&l, rhs)
}

/// Counter-based generator for `(seed, stream)`. Distinct streams never overlap.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform `[0, 1)` draw addressed by `(seed, stream, key)`, independent of
/// the order in which keys are visited.
pub fn keyed_uniform(seed: u64, stream: u64, key: u64) -> f64 {
    let mut rng = rng_stream(seed, stream);
    rng.set_word_pos(u128::from(key) * 2);
    rng.random::<f64>()
}

/// One draw `mean + L·z` with `z` standard normal.
pub fn sample_mvn<R: Rng + ?Sized>(
    mean: &[f64],
    chol_lower: &Matrix,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let p = mean.len();
    if chol_lower.rows() != p || chol_lower.cols() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: chol_lower.rows(),
        });
    }
    let z: Vec<f64> = (0..p)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect();
    Ok((0..p)
        .map(|i| mean[i] + dot(&chol_lower.row(i)[..=i], &z[..=i]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_cov() -> Matrix {
        Matrix::from_rows(&[[1.0, 0.2, -0.2], [0.2, 1.0, 0.0], [-0.2, 0.0, 1.0]]).unwrap()
    }

    fn rel_frobenius(a: &Matrix, b: &Matrix) -> f64 {
        let diff: Vec<f64> = a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .map(|(x, y)| x - y)
            .collect();
        libm::sqrt(dot(&diff, &diff)) / b.frobenius_norm()
    }

    #[test]
    fn cholesky_identity_and_diagonal() {
        assert_eq!(cholesky(&Matrix::identity(3)).unwrap(), Matrix::identity(3));
        let l = cholesky(&Matrix::from_rows(&[[4.0, 0.0], [0.0, 9.0]]).unwrap()).unwrap();
        assert_eq!(l, Matrix::from_rows(&[[2.0, 0.0], [0.0, 3.0]]).unwrap());
    }

    #[test]
    fn cholesky_reconstructs_covariance() {
        let cov = reference_cov();
        let l = cholesky(&cov).unwrap();
        for i in 0..3 {
            for j in i + 1..3 {
                assert_eq!(l.get(i, j), 0.0);
            }
        }
        assert!(rel_frobenius(&l.mul_self_transpose(), &cov) < 1e-12);
    }

    #[test]
    fn cholesky_rejects_singular_and_asymmetric() {
        let singular = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]).unwrap();
        assert!(matches!(
            cholesky(&singular),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
        let asym = Matrix::from_rows(&[[1.0, 0.5], [0.0, 1.0]]).unwrap();
        assert!(matches!(cholesky(&asym), Err(Error::NotSymmetric { .. })));
        assert!(matches!(
            cholesky(&Matrix::zeros(2, 3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn solve_small_systems() {
        assert_eq!(
            solve_spd(&Matrix::identity(2), &[1.0, 2.0]).unwrap(),
            [1.0, 2.0]
        );
        let m = Matrix::from_rows(&[[2.0, 0.0], [0.0, 4.0]]).unwrap();
        for v in solve_spd(&m, &[2.0, 4.0]).unwrap() {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn solve_random_spd_recovers_known_solution() {
        let mut rng = rng_stream(7, 0);
        for _ in 0..20 {
            let a =
                Matrix::new(5, 5, (0..25).map(|_| rng.random::<f64>() - 0.5).collect()).unwrap();
            let mut m = a.mul_self_transpose();
            for i in 0..5 {
                m.set(i, i, m.get(i, i) + 0.1);
            }
            let x0: Vec<f64> = (0..5).map(|_| rng.random::<f64>() * 4.0 - 2.0).collect();
            let rhs = m.mul_vec(&x0).unwrap();
            let x = solve_spd(&m, &rhs).unwrap();
            for (a, b) in x.iter().zip(&x0) {
                assert!((a - b).abs() < 1e-8, "{a} vs {b}");
            }
            let resid: Vec<f64> = m
                .mul_vec(&x)
                .unwrap()
                .iter()
                .zip(&rhs)
                .map(|(a, b)| a - b)
                .collect();
            assert!(norm(&resid) / norm(&rhs) <= 1e-8);
        }
    }

    #[test]
    fn mvn_degenerate_and_dimension_checks() {
        let mut rng = rng_stream(1, 0);
        let v = sample_mvn(&[0.0, 0.0], &Matrix::zeros(2, 2), &mut rng).unwrap();
        assert_eq!(v, [0.0, 0.0]);
        assert!(matches!(
            sample_mvn(&[0.0; 3], &Matrix::zeros(2, 2), &mut rng),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn mvn_moments_match_reference_design() {
        let mean = [1.0, 1.0, -1.0];
        let cov = reference_cov();
        let l = cholesky(&cov).unwrap();
        let mut rng = rng_stream(2024, 0);
        let n = 100_000;
        let draws: Vec<Vec<f64>> = (0..n)
            .map(|_| sample_mvn(&mean, &l, &mut rng).unwrap())
            .collect();
        let mut m = [0.0; 3];
        for d in &draws {
            for k in 0..3 {
                m[k] += d[k] / n as f64;
            }
        }
        for k in 0..3 {
            assert!((m[k] - mean[k]).abs() < 0.02, "mean {k}: {}", m[k]);
        }
        for i in 0..3 {
            for j in 0..3 {
                let c: f64 = draws
                    .iter()
                    .map(|d| (d[i] - m[i]) * (d[j] - m[j]))
                    .sum::<f64>()
                    / (n - 1) as f64;
                assert!((c - cov.get(i, j)).abs() < 0.02, "cov ({i},{j}) = {c}");
            }
        }
    }

    #[test]
    fn mvn_is_reproducible() {
        let l = cholesky(&reference_cov()).unwrap();
        let a = sample_mvn(&[0.0; 3], &l, &mut rng_stream(9, 3)).unwrap();
        let b = sample_mvn(&[0.0; 3], &l, &mut rng_stream(9, 3)).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn keyed_uniform_is_order_free() {
        let forward: Vec<f64> = (0..50).map(|k| keyed_uniform(3, 1, k)).collect();
        let backward: Vec<f64> = (0..50).rev().map(|k| keyed_uniform(3, 1, k)).collect();
        assert!(forward.iter().eq(backward.iter().rev()));
        assert!(forward.iter().all(|u| (0.0..1.0).contains(u)));
        assert_ne!(keyed_uniform(3, 1, 0), keyed_uniform(3, 2, 0));
    }
}
