//! Scalar and multivariate densities, samplers and log-space reductions.

use alloc::vec;
use alloc::vec::Vec;
use libm::{erfc, exp, lgamma, log, log1p, sqrt};

use crate::linalg::{lower_mul_vec, CovarianceMatrix};
use crate::{Error, Result, RngStream};

/// `ln(2π)`.
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[inline]
pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let r = x - mean;
    -0.5 * (LN_2PI + log(var) + r * r / var)
}

/// Standard normal CDF.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * core::f64::consts::FRAC_1_SQRT_2)
}

/// Log density of a location–scale Student t with `nu` degrees of freedom
/// and squared scale `scale_sq`.
pub fn student_t_logpdf(x: f64, loc: f64, scale_sq: f64, nu: f64) -> f64 {
    let r = x - loc;
    lgamma(0.5 * (nu + 1.0))
        - lgamma(0.5 * nu)
        - 0.5 * log(nu * core::f64::consts::PI * scale_sq)
        - 0.5 * (nu + 1.0) * log1p(r * r / (nu * scale_sq))
}

/// Gamma log density in the shape/rate parameterization.
pub fn gamma_logpdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * log(rate) - lgamma(shape) + (shape - 1.0) * log(x) - rate * x
}

pub fn ln_factorial(k: u64) -> f64 {
    lgamma(k as f64 + 1.0)
}

pub fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Numerically stable `log(1 + e^x)`.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + log1p(exp(-x))
    } else {
        log1p(exp(x))
    }
}

#[inline]
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + exp(-x))
    } else {
        let e = exp(x);
        e / (1.0 + e)
    }
}

/// `log Σ exp(v_i)` by max-shift. Returns `-∞` when every entry is `-∞`.
///
/// # Panics
/// If `v` is empty.
pub fn logsumexp(v: &[f64]) -> f64 {
    assert!(!v.is_empty(), "logsumexp of an empty slice");
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m.is_infinite() {
        return m;
    }
    let s: f64 = v.iter().map(|&x| exp(x - m)).sum();
    m + log(s)
}

/// Multivariate normal `φ(·; mean, cov)`.
#[derive(Clone, Debug)]
pub struct GaussianSpec {
    mean: Vec<f64>,
    cov: CovarianceMatrix,
}

impl GaussianSpec {
    pub fn new(mean: Vec<f64>, cov: CovarianceMatrix) -> Result<Self> {
        if mean.len() != cov.dim() {
            return Err(Error::DimensionMismatch {
                expected: cov.dim(),
                found: mean.len(),
            });
        }
        Ok(Self { mean, cov })
    }

    pub fn standard(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            cov: CovarianceMatrix::identity(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn cov(&self) -> &CovarianceMatrix {
        &self.cov
    }
}

pub fn mvn_logpdf(x: &[f64], spec: &GaussianSpec) -> Result<f64> {
    let d = spec.dim();
    if x.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.len(),
        });
    }
    let r: Vec<f64> = x.iter().zip(spec.mean()).map(|(a, b)| a - b).collect();
    let mut scratch = vec![0.0; d];
    let q = spec.cov().inv_quad_form(&r, &mut scratch);
    Ok(-0.5 * (d as f64 * LN_2PI + spec.cov().log_det() + q))
}

/// Draws `m + L ξ` with `ξ` standard normal.
pub fn mvn_sample(spec: &GaussianSpec, rng: &mut RngStream) -> Vec<f64> {
    let d = spec.dim();
    let mut xi = vec![0.0; d];
    rng.fill_std_normal(&mut xi);
    let mut out = vec![0.0; d];
    lower_mul_vec(spec.cov().chol(), &xi, &mut out);
    for (o, m) in out.iter_mut().zip(spec.mean()) {
        *o += m;
    }
    out
}

/// One-sample Kolmogorov–Smirnov statistic of `sample` against `N(mean, var)`.
pub fn ks_statistic_normal(sample: &[f64], mean: f64, var: f64) -> f64 {
    let mut s: Vec<f64> = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let sd = sqrt(var);
    s.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = std_normal_cdf((x - mean) / sd);
        let hi = (i + 1) as f64 / n - f;
        let lo = f - i as f64 / n;
        d.max(hi).max(lo)
    })
}

/// Sample mean and unbiased sample variance.
pub fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}
