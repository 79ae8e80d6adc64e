//! Empirical checks of the large-sample claims: Gaussian log-likelihood
//! noise with mean `−σ²/2`, its exponentially tilted counterpart with mean
//! `+σ²/2`, and posterior normality of the toy model.

use alloc::vec::Vec;
use libm::{ceil, exp, fabs, sqrt};

use crate::dist::{ks_statistic_normal, mean_var, normal_logpdf};
use crate::estimators::{sample_noise, IsModel};
use crate::models::{toy_posterior, toy_simulate, ToyModel};
use crate::quadrature::adaptive_simpson;
use crate::{Error, Result, RngStream};

/// Noise statistics for one data size.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CltRow {
    pub t: usize,
    pub n: usize,
    pub reps: usize,
    pub mean_z: f64,
    pub var_z: f64,
    /// `|mean + var/2|`, zero for exactly Gaussian unbiased noise.
    pub mean_plus_half_var: f64,
    /// KS distance to `N(−v̂/2, v̂)`.
    pub ks: f64,
    /// `Σ z e^z / Σ e^z`, estimating the mean under the tilted law.
    pub stationary_mean_z: f64,
    /// `|stationary_mean_z − v̂/2|`.
    pub stationary_dev: f64,
    /// `|mean(e^Z) − 1|`.
    pub unbiasedness_dev: f64,
    pub unbiasedness_se: f64,
    /// Effective sample size `(Σe^z)² / Σe^{2z}` of the tilting weights.
    pub ess: f64,
}

/// Summarizes a sample of noise values drawn at data size `t`.
pub fn clt_row(t: usize, n: usize, z: &[f64]) -> Result<CltRow> {
    if z.len() < 2 {
        return Err(Error::InvalidArgument("need at least two noise replicates"));
    }
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(
            "noise sample contains a zero likelihood estimate",
        ));
    }
    let reps = z.len();
    let (mean_z, var_z) = mean_var(z);
    let zmax = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (mut sw, mut swz, mut sw2) = (0.0, 0.0, 0.0);
    for &v in z {
        let w = exp(v - zmax);
        sw += w;
        swz += w * v;
        sw2 += w * w;
    }
    let stationary_mean_z = swz / sw;
    let ez: Vec<f64> = z.iter().map(|&v| exp(v)).collect();
    let (m_ez, v_ez) = mean_var(&ez);
    let ks = if var_z > 0.0 {
        ks_statistic_normal(z, -0.5 * var_z, var_z)
    } else {
        0.0
    };
    Ok(CltRow {
        t,
        n,
        reps,
        mean_z,
        var_z,
        mean_plus_half_var: fabs(mean_z + 0.5 * var_z),
        ks,
        stationary_mean_z,
        stationary_dev: fabs(stationary_mean_z - 0.5 * var_z),
        unbiasedness_dev: fabs(m_ez - 1.0),
        unbiasedness_se: sqrt(v_ez / reps as f64),
        ess: sw * sw / sw2,
    })
}

/// `N = ⌈γT⌉`, at least one.
pub fn samples_for(t: usize, gamma: f64) -> usize {
    (ceil(gamma * t as f64) as usize).max(1)
}

/// Noise report over data sizes. `build(T)` supplies the model with `T`
/// observations; replicate `r` at size `T` uses `indexed(seed, [T, 1, r])`.
pub fn noise_clt_report<M, B>(
    build: B,
    theta: &[f64],
    t_list: &[usize],
    gamma: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<CltRow>>
where
    M: IsModel,
    B: Fn(usize) -> Result<M>,
{
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument("gamma must be positive"));
    }
    t_list
        .iter()
        .map(|&t| {
            let model = build(t)?;
            let n = samples_for(t, gamma);
            let z = (0..reps)
                .map(|r| {
                    sample_noise(
                        &model,
                        theta,
                        n,
                        &mut RngStream::indexed(seed, &[t as u64, 1, r as u64]),
                    )
                    .map(|s| s.z)
                })
                .collect::<Result<Vec<_>>>()?;
            clt_row(t, n, &z)
        })
        .collect()
}

/// Toy model with `T` observations simulated at `theta_bar` from the stream
/// `indexed(seed, [T, 0])`.
pub fn toy_for_size(theta_bar: f64, sigma0_sq: f64, t: usize, seed: u64) -> Result<ToyModel> {
    let y = toy_simulate(theta_bar, t, &mut RngStream::indexed(seed, &[t as u64, 0]));
    ToyModel::new(y, sigma0_sq)
}

/// [`noise_clt_report`] for the toy model, noise evaluated at `theta`.
pub fn toy_noise_clt_report(
    theta_bar: f64,
    theta: f64,
    t_list: &[usize],
    gamma: f64,
    reps: usize,
    seed: u64,
) -> Result<Vec<CltRow>> {
    noise_clt_report(
        |t| toy_for_size(theta_bar, 1e10, t, seed),
        &[theta],
        t_list,
        gamma,
        reps,
        seed,
    )
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BvmRow {
    pub t: usize,
    pub theta_hat: f64,
    pub post_mean: f64,
    pub post_var: f64,
    /// Total-variation distance between the posterior and `N(θ̂, 2/T)`.
    pub tv: f64,
}

/// `½∫|φ(x; m₁, v₁) − φ(x; m₂, v₂)| dx` by adaptive quadrature.
pub fn gaussian_tv(m1: f64, v1: f64, m2: f64, v2: f64) -> f64 {
    if m1 == m2 && v1 == v2 {
        return 0.0;
    }
    let s = sqrt(v1.max(v2));
    let centre = 0.5 * (m1 + m2);
    let half = 0.5 * fabs(m1 - m2) + 40.0 * s;
    let f = |x: f64| fabs(exp(normal_logpdf(x, m1, v1)) - exp(normal_logpdf(x, m2, v2)));
    // split at both means so the kinks and peaks fall on panel edges
    let (a, b) = if m1 < m2 { (m1, m2) } else { (m2, m1) };
    let tol = 1e-10;
    let mut total =
        adaptive_simpson(&f, centre - half, a, tol) + adaptive_simpson(&f, b, centre + half, tol);
    if b > a {
        total += adaptive_simpson(&f, a, b, tol);
    }
    0.5 * total
}

/// Toy posterior versus its Gaussian approximation `N(θ̂_T, 2/T)` with
/// `θ̂_T = ȳ`. A prior variance of `+∞` means a flat prior. Data of size `T`
/// come from `indexed(seed, [T, 0])`.
pub fn bvm_report(
    sigma0_sq: f64,
    theta_bar: f64,
    t_list: &[usize],
    seed: u64,
) -> Result<Vec<BvmRow>> {
    if !(sigma0_sq > 0.0) {
        return Err(Error::InvalidArgument("prior variance must be positive"));
    }
    t_list
        .iter()
        .map(|&t| {
            if t == 0 {
                return Err(Error::InvalidArgument("data size must be positive"));
            }
            let y = toy_simulate(theta_bar, t, &mut RngStream::indexed(seed, &[t as u64, 0]));
            let tf = t as f64;
            let theta_hat = y.iter().sum::<f64>() / tf;
            let approx_var = 2.0 / tf;
            let (post_mean, post_var) = if sigma0_sq.is_infinite() {
                (theta_hat, approx_var)
            } else {
                toy_posterior(&y, sigma0_sq)
            };
            Ok(BvmRow {
                t,
                theta_hat,
                post_mean,
                post_var,
                tv: gaussian_tv(post_mean, post_var, theta_hat, approx_var),
            })
        })
        .collect()
}
