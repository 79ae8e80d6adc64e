//! Dense symmetric matrices and their Cholesky factors.
//!
//! Only what the samplers need: factorization, triangular solves and
//! matrix–vector products. Storage is row-major `Vec<f64>`.

use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;

use crate::{Error, Result};

/// Pivots at or below this multiple of the largest diagonal entry are treated
/// as loss of positive definiteness.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Square row-major matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = 1.0;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * diag.len() + i] = d;
        }
        m
    }

    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: data.len(),
            });
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { dim, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.dim).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= tol))
    }

    /// `L Lᵀ` for a lower-triangular `self`.
    pub fn lower_times_transpose(&self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|k| self.get(i, k) * self.get(j, k)).sum();
                out.set(i, j, s);
                out.set(j, i, s);
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim;
        for (i, o) in out.iter_mut().enumerate().take(d) {
            *o = self.data[i * d..(i + 1) * d]
                .iter()
                .zip(x)
                .map(|(a, b)| a * b)
                .sum();
        }
    }
}

/// Lower-triangular Cholesky factor `L` with `L Lᵀ = S`.
pub fn cholesky_factor(s: &Matrix) -> Result<Matrix> {
    let d = s.dim();
    if d == 0 {
        return Err(Error::InvalidArgument(
            "matrix dimension must be at least 1",
        ));
    }
    if !s.is_symmetric(SYMMETRY_TOLERANCE * s.max_abs().max(1.0)) {
        return Err(Error::InvalidArgument("matrix is not symmetric"));
    }
    let scale = (0..d).map(|i| s.get(i, i)).fold(0.0, f64::max);
    let tol = PIVOT_TOLERANCE * scale;
    let mut l = Matrix::zeros(d);
    for j in 0..d {
        let mut diag = s.get(j, j);
        for k in 0..j {
            diag -= l.get(j, k) * l.get(j, k);
        }
        if !(diag > tol) || !(scale > 0.0) {
            return Err(Error::NotPositiveDefinite {
                pivot: j,
                value: diag,
            });
        }
        let ljj = sqrt(diag);
        l.set(j, j, ljj);
        for i in (j + 1)..d {
            let mut v = s.get(i, j);
            for k in 0..j {
                v -= l.get(i, k) * l.get(j, k);
            }
            l.set(i, j, v / ljj);
        }
    }
    Ok(l)
}

/// Solves `L y = b` for lower-triangular `L`, in place.
pub fn forward_substitute(l: &Matrix, b: &mut [f64]) {
    let d = l.dim();
    for i in 0..d {
        let mut v = b[i];
        for k in 0..i {
            v -= l.get(i, k) * b[k];
        }
        b[i] = v / l.get(i, i);
    }
}

/// `out = L x` for lower-triangular `L`.
pub fn lower_mul_vec(l: &Matrix, x: &[f64], out: &mut [f64]) {
    let d = l.dim();
    for i in 0..d {
        let mut v = 0.0;
        for k in 0..=i {
            v += l.get(i, k) * x[k];
        }
        out[i] = v;
    }
}

/// Symmetric positive-definite matrix with a cached Cholesky factor.
#[derive(Clone, Debug, PartialEq)]
pub struct CovarianceMatrix {
    entries: Matrix,
    chol: Matrix,
    identity: bool,
}

impl CovarianceMatrix {
    pub fn new(entries: Matrix) -> Result<Self> {
        let chol = cholesky_factor(&entries)?;
        let identity = entries == Matrix::identity(entries.dim());
        Ok(Self {
            entries,
            chol,
            identity,
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: Matrix::identity(dim),
            chol: Matrix::identity(dim),
            identity: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.dim()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn chol(&self) -> &Matrix {
        &self.chol
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    /// `log det S = 2 Σ log L_ii`.
    pub fn log_det(&self) -> f64 {
        (0..self.dim())
            .map(|i| 2.0 * libm::log(self.chol.get(i, i)))
            .sum()
    }

    /// Quadratic form `xᵀ S⁻¹ x` using `scratch` of length `dim`.
    pub fn inv_quad_form(&self, x: &[f64], scratch: &mut [f64]) -> f64 {
        if self.identity {
            return x.iter().map(|v| v * v).sum();
        }
        scratch.copy_from_slice(x);
        forward_substitute(&self.chol, scratch);
        scratch.iter().map(|v| v * v).sum()
    }

    /// Sample covariance of the rows in `samples` (each of length `dim`).
    pub fn from_samples(samples: &[Vec<f64>]) -> Result<Self> {
        let n = samples.len();
        if n < 2 {
            return Err(Error::InvalidArgument(
                "need at least two samples for a covariance",
            ));
        }
        let d = samples[0].len();
        let mut mean = vec![0.0; d];
        for s in samples {
            for (m, v) in mean.iter_mut().zip(s) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n as f64;
        }
        let mut cov = Matrix::zeros(d);
        for s in samples {
            for i in 0..d {
                for j in 0..=i {
                    let v = cov.get(i, j) + (s[i] - mean[i]) * (s[j] - mean[j]);
                    cov.set(i, j, v);
                }
            }
        }
        for i in 0..d {
            for j in 0..=i {
                let v = cov.get(i, j) / (n - 1) as f64;
                cov.set(i, j, v);
                cov.set(j, i, v);
            }
        }
        Self::new(cov)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_reconstructs(s: &Matrix, l: &Matrix) {
        let r = l.lower_times_transpose();
        let tol = 1e-10 * s.max_abs().max(1.0);
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                assert!((r.get(i, j) - s.get(i, j)).abs() <= tol);
            }
            assert!(l.get(i, i) > 0.0);
        }
    }

    #[test]
    fn identity_factor() {
        let l = cholesky_factor(&Matrix::identity(2)).unwrap();
        assert_eq!(l, Matrix::identity(2));
    }

    #[test]
    fn diagonal_factor() {
        let s = Matrix::diagonal(&[4.0, 9.0]);
        let l = cholesky_factor(&s).unwrap();
        assert_eq!(l, Matrix::diagonal(&[2.0, 3.0]));
    }

    #[test]
    fn two_by_two_factor() {
        let s = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let l = cholesky_factor(&s).unwrap();
        assert!((l.get(0, 0) - core::f64::consts::SQRT_2).abs() < 1e-12);
        assert!((l.get(1, 0) - core::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((l.get(1, 1) - 1.224745).abs() < 1e-6);
        assert_eq!(l.get(0, 1), 0.0);
        assert_reconstructs(&s, &l);
    }

    #[test]
    fn singular_rejected() {
        let s = Matrix::from_rows(&[&[1.0, 1.0], &[1.0, 1.0]]).unwrap();
        assert!(matches!(
            cholesky_factor(&s),
            Err(Error::NotPositiveDefinite { pivot: 1, .. })
        ));
        let near = Matrix::from_rows(&[&[1.0, 1.0 - 1e-16], &[1.0 - 1e-16, 1.0]]).unwrap();
        assert!(cholesky_factor(&near).is_err());
        assert!(cholesky_factor(&Matrix::diagonal(&[0.0])).is_err());
        // tolerance is relative, so uniformly tiny scales still factor
        assert!(cholesky_factor(&Matrix::diagonal(&[1e-30, 1e-30])).is_ok());
    }

    #[test]
    fn asymmetric_rejected() {
        let s = Matrix::from_rows(&[&[2.0, 1.0], &[0.0, 2.0]]).unwrap();
        assert!(matches!(
            cholesky_factor(&s),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn quad_form_matches_inverse() {
        let s = Matrix::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let c = CovarianceMatrix::new(s).unwrap();
        // S^-1 = [[2,-1],[-1,2]]/3
        let x = [1.0, 2.0];
        let expect = (2.0 * 1.0 - 2.0 * 1.0 * 2.0 + 2.0 * 4.0) / 3.0;
        let mut scratch = [0.0; 2];
        assert!((c.inv_quad_form(&x, &mut scratch) - expect).abs() < 1e-14);
        assert!((c.log_det() - 3f64.ln()).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn random_spd_reconstructs(entries in proptest::collection::vec(-2.0f64..2.0, 16)) {
            // S = A Aᵀ + I is SPD
            let a = Matrix::from_row_major(4, entries).unwrap();
            let mut s = Matrix::identity(4);
            for i in 0..4 {
                for j in 0..4 {
                    let v: f64 = (0..4).map(|k| a.get(i, k) * a.get(j, k)).sum();
                    s.set(i, j, s.get(i, j) + v);
                }
            }
            let l = cholesky_factor(&s).unwrap();
            assert_reconstructs(&s, &l);
        }
    }
}
