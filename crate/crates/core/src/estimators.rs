//! Importance-sampling likelihood estimators, log-likelihood noise, the
//! cluster mode finder and importance-weight moment checks.

use alloc::vec;
use alloc::vec::Vec;
use libm::{exp, fabs, log, pow, sqrt};

use crate::dist::{logsumexp, mean_var, std_normal_cdf};
use crate::kernel::PseudoMarginalTarget;
use crate::models::{ClusterAtTheta, ExpFamilySpec, IsProposal, ProposalKind};
use crate::{Error, Result, RngStream};

/// A latent-variable model whose likelihood factorizes over `T` independent
/// observations, each estimated by importance sampling.
pub trait IsModel {
    fn dim(&self) -> usize;
    fn num_obs(&self) -> usize;
    fn log_prior(&self, theta: &[f64]) -> f64;
    /// Fills `out` with `out.len()` independent log weights for observation `t`.
    fn obs_log_weights(
        &self,
        theta: &[f64],
        t: usize,
        rng: &mut RngStream,
        out: &mut [f64],
    ) -> Result<()>;
    /// Exact (or oracle-accurate) `log p(y_t | θ)`, if available.
    fn exact_obs_loglik(&self, _theta: &[f64], _t: usize) -> Option<f64> {
        None
    }
}

/// `Σ_t [logsumexp_i log w_{t,i} − log N]`.
///
/// An observation whose weights are all zero makes the estimate `−∞`, which
/// the pseudo-marginal kernel treats as certain rejection.
pub fn is_loglik<M: IsModel + ?Sized>(
    model: &M,
    theta: &[f64],
    n: usize,
    rng: &mut RngStream,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "need at least one importance sample",
        ));
    }
    let mut buf = vec![0.0; n];
    let log_n = log(n as f64);
    let mut total = 0.0;
    for t in 0..model.num_obs() {
        model.obs_log_weights(theta, t, rng, &mut buf)?;
        let l = logsumexp(&buf);
        if l.is_nan() {
            return Err(Error::EstimatorFailure);
        }
        if l == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        total += l - log_n;
    }
    Ok(total)
}

/// `Σ_t log p(y_t | θ)` when every observation has an exact likelihood.
pub fn exact_loglik<M: IsModel + ?Sized>(model: &M, theta: &[f64]) -> Option<f64> {
    (0..model.num_obs())
        .map(|t| model.exact_obs_loglik(theta, t))
        .sum()
}

/// Pseudo-marginal target built from an IS model with `n` samples per
/// observation.
#[derive(Clone, Debug)]
pub struct IsTarget<M> {
    pub model: M,
    pub n: usize,
}

impl<M: IsModel> PseudoMarginalTarget for IsTarget<M> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        self.model.log_prior(theta)
    }

    fn log_likelihood_estimate(&self, theta: &[f64], rng: &mut RngStream) -> Result<f64> {
        is_loglik(&self.model, theta, self.n, rng)
    }

    fn exact_log_likelihood(&self, theta: &[f64]) -> Option<f64> {
        exact_loglik(&self.model, theta)
    }
}

/// One draw of `Z = log p̂(y | θ) − log p(y | θ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseSample {
    pub z: f64,
    pub theta: Vec<f64>,
    pub t: usize,
    pub n: usize,
    /// Set when the estimate was exactly zero; `z` is then `−∞`.
    pub zero_estimate: bool,
}

pub fn sample_noise<M: IsModel + ?Sized>(
    model: &M,
    theta: &[f64],
    n: usize,
    rng: &mut RngStream,
) -> Result<NoiseSample> {
    let exact = exact_loglik(model, theta)
        .ok_or(Error::InvalidArgument("model has no exact log-likelihood"))?;
    let est = is_loglik(model, theta, n, rng)?;
    Ok(NoiseSample {
        z: est - exact,
        theta: theta.to_vec(),
        t: model.num_obs(),
        n,
        zero_estimate: est == f64::NEG_INFINITY,
    })
}

/// `reps` independent log-likelihood estimates; replicate `r` uses the
/// stream `indexed(seed, [r])`.
pub fn loglik_replicates<M: IsModel + ?Sized>(
    model: &M,
    theta: &[f64],
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    (0..reps)
        .map(|r| is_loglik(model, theta, n, &mut RngStream::indexed(seed, &[r as u64])))
        .collect()
}

/// Sample sd of `reps` independent log-likelihood estimates at `theta`.
pub fn estimate_sigma<M: IsModel + ?Sized>(
    model: &M,
    theta: &[f64],
    n: usize,
    reps: usize,
    seed: u64,
) -> Result<f64> {
    if reps < 2 {
        return Err(Error::InvalidArgument("need at least two replicates"));
    }
    let v = loglik_replicates(model, theta, n, reps, seed)?;
    if v.iter().any(|x| !x.is_finite()) {
        return Ok(f64::INFINITY);
    }
    Ok(sqrt(mean_var(&v).1))
}

/// Number of samples that brings the noise sd from `sigma_ref` at `n_ref`
/// to about `sigma_target`, using `σ² ∝ 1/N`.
pub fn n_for_sigma(sigma_target: f64, sigma_ref: f64, n_ref: usize) -> usize {
    let r = sigma_ref / sigma_target;
    let n = libm::ceil(n_ref as f64 * r * r);
    if n.is_finite() && n >= 1.0 {
        n as usize
    } else {
        1
    }
}

const MODE_ITERATIONS: usize = 100;

/// Root of `x = τ²(S − Ã′(x))` with `Ã(x) = Σ_j A(o_j + x)`.
///
/// Newton steps safeguarded by bisection on `[min(0, x₁), max(0, x₁)]`
/// where `x₁ = τ²(S − Ã′(0))`; the residual changes sign across it because
/// `Ã′` is increasing.
pub fn find_mode(offsets: &[f64], s: f64, tau_sq: f64, family: ExpFamilySpec) -> Result<f64> {
    if !(tau_sq >= 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(
            "random-effect variance must be nonnegative",
        ));
    }
    // residual g(x) = x − τ²(S − Ã′(x)) and its derivative 1 + τ²Ã″(x)
    let eval = |x: f64| {
        let (mut d1, mut d2) = (0.0, 0.0);
        for o in offsets {
            d1 += family.a1(o + x);
            d2 += family.a2(o + x);
        }
        (x - tau_sq * (s - d1), 1.0 + tau_sq * d2)
    };

    let x1 = -eval(0.0).0;
    if x1 == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = if x1 < 0.0 { (x1, 0.0) } else { (0.0, x1) };
    let mut x = 0.5 * (lo + hi);
    let mut dx_old = hi - lo;
    let mut dx = dx_old;
    for _ in 0..MODE_ITERATIONS {
        let (gx, dg) = eval(x);
        if gx.is_nan() {
            return Err(Error::NonConvergence {
                iterations: MODE_ITERATIONS,
            });
        }
        if fabs(gx) <= 1e-12 * (1.0 + fabs(x)) {
            return Ok(x);
        }
        if gx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= 4.0 * f64::EPSILON * (1.0 + fabs(x)) {
            return Ok(x);
        }
        // Newton, unless it leaves the bracket or stops shrinking fast
        // enough (it crawls where exp(x) overflows its linear model)
        let newton = x - gx / dg;
        let step = gx / dg;
        if newton > lo && newton < hi && fabs(2.0 * step) <= fabs(dx_old) {
            dx_old = dx;
            dx = step;
            x = newton;
        } else {
            dx_old = dx;
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        }
    }
    Err(Error::NonConvergence {
        iterations: MODE_ITERATIONS,
    })
}

/// Modified weight `log w̃(x) = log h(x) − log h(x̂) − log q(x) + log q(x̂)`,
/// equal to zero at the mode.
pub fn modified_log_weight(c: &ClusterAtTheta, x: f64, proposal: &IsProposal, tau_q: f64) -> f64 {
    c.log_h(x) - c.log_h(c.x_hat) - proposal.log_q(x, c.x_hat, tau_q)
        + proposal.log_q(c.x_hat, c.x_hat, tau_q)
}

/// Monte Carlo moments of the modified weight next to their closed-form bounds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightMoment {
    pub a: f64,
    pub tau_q: f64,
    /// Monte Carlo `E[w̃^a]` under the proposal.
    pub estimate: f64,
    pub std_error: f64,
    /// Closed-form upper bound on `E[w̃^a]`.
    pub upper_bound: f64,
    /// Monte Carlo `E[w̃]`.
    pub mean: f64,
    pub mean_std_error: f64,
    /// `C / (√(2π)(b + 1))` with `b = τÃ′(x̂)`.
    pub lower_bound: f64,
    /// `C·e^{b²/2}Φ(−b)`, the bound before the Mills-ratio step.
    pub lower_bound_sharp: f64,
}

/// Bound on `E[w̃^a]` for a Gaussian proposal; requires `τ_q² > (a−1)τ²/a`.
pub fn gaussian_moment_bound(a: f64, tau_sq: f64, tau_q_sq: f64) -> Result<f64> {
    let threshold = (a - 1.0) / a * tau_sq;
    if !(tau_q_sq > threshold) {
        return Err(Error::ConditionViolated {
            tau_q_sq,
            threshold,
        });
    }
    Ok(1.0 / sqrt((a * tau_q_sq - (a - 1.0) * tau_sq) / tau_sq))
}

/// Pointwise bound `K₂ ≥ w̃` for a Student-t proposal.
pub fn t_weight_bound(nu: f64, tau_sq: f64, tau_q_sq: f64) -> f64 {
    if tau_q_sq >= (nu + 1.0) / nu * tau_sq {
        return 1.0;
    }
    let base = tau_sq * (nu + 1.0) / (tau_q_sq * nu);
    pow(base, 0.5 * (nu + 1.0)) * exp(0.5 * nu * (tau_q_sq / tau_sq - 1.0 - 1.0 / nu))
}

/// Draws `n_mc` points from the proposal and compares the sample moments of
/// `w̃` with the closed-form bounds. Fails with `ConditionViolated` for a
/// Gaussian proposal whose `a`-th moment may be infinite.
pub fn weight_moment(
    c: &ClusterAtTheta,
    proposal: &IsProposal,
    a: f64,
    n_mc: usize,
    rng: &mut RngStream,
) -> Result<WeightMoment> {
    if !(a >= 1.0) || n_mc < 2 {
        return Err(Error::InvalidArgument(
            "moment order must be at least 1 and n_mc at least 2",
        ));
    }
    let tau_q = proposal.tau_q(c);
    let tau_sq = c.tau * c.tau;
    let tau_q_sq = tau_q * tau_q;
    let upper_bound = match proposal.kind {
        ProposalKind::Gaussian => gaussian_moment_bound(a, tau_sq, tau_q_sq)?,
        ProposalKind::StudentT { nu } => pow(t_weight_bound(nu, tau_sq, tau_q_sq), a),
    };

    let mut wa = Vec::with_capacity(n_mc);
    let mut w1 = Vec::with_capacity(n_mc);
    for _ in 0..n_mc {
        let x = proposal.sample(c.x_hat, tau_q, rng);
        let lw = modified_log_weight(c, x, proposal, tau_q);
        if lw.is_nan() {
            return Err(Error::EstimatorFailure);
        }
        wa.push(exp(a * lw));
        w1.push(exp(lw));
    }
    let (estimate, va) = mean_var(&wa);
    let (mean, v1) = mean_var(&w1);
    let nf = n_mc as f64;

    let b = c.tau * c.a_tilde1(c.x_hat);
    let big_c =
        exp(proposal.log_q(c.x_hat, c.x_hat, tau_q)) * sqrt(2.0 * core::f64::consts::PI) * c.tau;
    let lower_bound = big_c / (sqrt(2.0 * core::f64::consts::PI) * (b + 1.0));
    let lower_bound_sharp = big_c * exp(0.5 * b * b + log(std_normal_cdf(-b)));

    Ok(WeightMoment {
        a,
        tau_q,
        estimate,
        std_error: sqrt(va / nf),
        upper_bound,
        mean,
        mean_std_error: sqrt(v1 / nf),
        lower_bound,
        lower_bound_sharp,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Cluster, GlmmModel, ProposalScale, ToyModel};
    use proptest::prelude::*;

    #[derive(Debug)]
    struct ConstWeight {
        t: usize,
        c: f64,
    }

    impl IsModel for ConstWeight {
        fn dim(&self) -> usize {
            1
        }
        fn num_obs(&self) -> usize {
            self.t
        }
        fn log_prior(&self, _theta: &[f64]) -> f64 {
            0.0
        }
        fn obs_log_weights(
            &self,
            _theta: &[f64],
            _t: usize,
            _rng: &mut RngStream,
            out: &mut [f64],
        ) -> Result<()> {
            out.fill(self.c.ln());
            Ok(())
        }
        fn exact_obs_loglik(&self, _theta: &[f64], _t: usize) -> Option<f64> {
            Some(self.c.ln())
        }
    }

    fn toy(t: usize, seed: u64) -> ToyModel {
        let y = crate::models::toy_simulate(0.5, t, &mut RngStream::new(seed, 0));
        ToyModel::new(y, 1e10).unwrap()
    }

    #[test]
    fn constant_weights_are_exact() {
        let m = ConstWeight { t: 7, c: 0.3 };
        let l = is_loglik(&m, &[0.0], 5, &mut RngStream::new(1, 1)).unwrap();
        assert!((l - 7.0 * 0.3f64.ln()).abs() < 1e-13);
        assert!(estimate_sigma(&m, &[0.0], 5, 10, 3).unwrap() < 1e-12);
        let z = sample_noise(&m, &[0.0], 5, &mut RngStream::new(1, 1)).unwrap();
        assert!(z.z.abs() < 1e-13);
    }

    #[test]
    fn zero_weights_give_negative_infinity() {
        let m = ConstWeight { t: 3, c: 0.0 };
        let l = is_loglik(&m, &[0.0], 4, &mut RngStream::new(1, 1)).unwrap();
        assert_eq!(l, f64::NEG_INFINITY);
        let z = sample_noise(
            &ConstWeight { t: 1, c: 1.0 },
            &[0.0],
            1,
            &mut RngStream::new(0, 0),
        )
        .unwrap();
        assert!(!z.zero_estimate);
    }

    #[test]
    fn toy_estimator_unbiased() {
        let m = toy(5, 11);
        let theta = [0.5];
        let reps = 100_000;
        let e: Vec<f64> = (0..reps)
            .map(|r| {
                sample_noise(&m, &theta, 2, &mut RngStream::indexed(9, &[r]))
                    .unwrap()
                    .z
                    .exp()
            })
            .collect();
        let (mean, var) = mean_var(&e);
        let se = (var / reps as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn noise_sd_scales_as_inverse_root_n() {
        let m = toy(20, 4);
        let s1 = estimate_sigma(&m, &[0.5], 10, 4000, 1).unwrap();
        let s4 = estimate_sigma(&m, &[0.5], 40, 4000, 2).unwrap();
        let r = s4 / s1;
        assert!((0.45..=0.55).contains(&r), "{r}");
    }

    #[test]
    fn large_n_noise_is_small() {
        let m = toy(1, 2);
        let z = sample_noise(&m, &[0.5], 100_000, &mut RngStream::new(3, 3)).unwrap();
        assert!(z.z.abs() < 0.05);
        let z2 = sample_noise(&m, &[0.5], 100_000, &mut RngStream::new(3, 3)).unwrap();
        assert_eq!(z, z2);
    }

    #[test]
    fn noise_mean_is_minus_half_variance() {
        let m = toy(200, 8);
        let zs: Vec<f64> = (0..2000)
            .map(|r| {
                sample_noise(&m, &[0.5], 200, &mut RngStream::indexed(21, &[r]))
                    .unwrap()
                    .z
            })
            .collect();
        let (mean, var) = mean_var(&zs);
        let se = (var / 2000.0).sqrt();
        assert!((mean + var / 2.0).abs() < 4.0 * se, "{mean} {var}");
    }

    #[test]
    fn n_for_sigma_inverts_scaling() {
        assert_eq!(n_for_sigma(1.0, 2.0, 10), 40);
        assert_eq!(n_for_sigma(2.0, 1.0, 10), 3);
        assert_eq!(n_for_sigma(0.0, 1.0, 10), 1);
    }

    /// Plain bisection on the increasing residual.
    fn bisect_mode(offsets: &[f64], s: f64, tau_sq: f64, fam: ExpFamilySpec) -> f64 {
        let g = |x: f64| x - tau_sq * (s - offsets.iter().map(|o| fam.a1(o + x)).sum::<f64>());
        let (mut lo, mut hi) = (-50.0, 50.0);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if g(m) > 0.0 {
                hi = m;
            } else {
                lo = m;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn mode_examples() {
        assert_eq!(
            find_mode(&[0.0, 0.0], 1.0, 1.0, ExpFamilySpec::LOGISTIC).unwrap(),
            0.0
        );
        assert_eq!(
            find_mode(&[0.0], 1.0, 1.0, ExpFamilySpec::Poisson).unwrap(),
            0.0
        );
        let x = find_mode(&[0.0], 2.0, 1.0, ExpFamilySpec::Poisson).unwrap();
        let oracle = bisect_mode(&[0.0], 2.0, 1.0, ExpFamilySpec::Poisson);
        assert!((x - oracle).abs() < 1e-9);
        assert!((x - 0.4429).abs() < 1e-3);
    }

    #[test]
    fn mode_extreme_inputs() {
        // all successes with a huge variance: the mode runs far out but stays finite
        let x = find_mode(&[0.0; 5], 5.0, 1e4, ExpFamilySpec::LOGISTIC).unwrap();
        let r = x - 1e4 * (5.0 - 5.0 * crate::dist::logistic(x));
        assert!(r.abs() <= 1e-10 * (1.0 + x.abs()), "{x} {r}");
        let x = find_mode(&[3.0; 4], 200.0, 50.0, ExpFamilySpec::Poisson).unwrap();
        let r = x - 50.0 * (200.0 - 4.0 * (3.0 + x).exp());
        assert!(r.abs() <= 1e-10 * (1.0 + x.abs()));
        assert_eq!(
            find_mode(&[1.0], 3.0, 0.0, ExpFamilySpec::Poisson).unwrap(),
            0.0
        );
    }

    fn cluster(y: &[f64], offsets: &[f64]) -> Cluster {
        Cluster {
            y: y.to_vec(),
            covariates: offsets.iter().map(|&o| vec![o]).collect(),
        }
    }

    #[test]
    fn gaussian_bound_examples() {
        assert!((gaussian_moment_bound(2.0, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((gaussian_moment_bound(2.0, 1.0, 0.75).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        assert!(matches!(
            gaussian_moment_bound(2.0, 1.0, 0.4),
            Err(Error::ConditionViolated { .. })
        ));
        assert!(matches!(
            gaussian_moment_bound(2.0, 1.0, 0.5),
            Err(Error::ConditionViolated { .. })
        ));
    }

    #[test]
    fn weight_moment_gaussian() {
        let c = ClusterAtTheta::new(
            &cluster(&[1.0, 0.0, 1.0, 1.0], &[0.3, -0.2, 0.0, 0.5]),
            &[1.0],
            1.2,
            ExpFamilySpec::LOGISTIC,
        )
        .unwrap();
        let mut r = RngStream::new(4, 4);
        for (k, bound) in [(1.0, 1.0), (0.75f64, 2f64.sqrt())] {
            let p = IsProposal::gaussian(ProposalScale::TauMultiple(k.sqrt()));
            let wm = weight_moment(&c, &p, 2.0, 200_000, &mut r).unwrap();
            assert!((wm.upper_bound - bound).abs() < 1e-12);
            assert!(wm.estimate <= wm.upper_bound + 3.0 * wm.std_error);
            assert!(wm.mean >= wm.lower_bound - 3.0 * wm.mean_std_error);
            assert!(wm.lower_bound_sharp >= wm.lower_bound);
        }
        let p = IsProposal::gaussian(ProposalScale::TauMultiple(0.4f64.sqrt()));
        assert!(matches!(
            weight_moment(&c, &p, 2.0, 10, &mut r),
            Err(Error::ConditionViolated { .. })
        ));
    }

    #[test]
    fn pointwise_bound_with_matched_scale() {
        let c = ClusterAtTheta::new(
            &cluster(&[3.0, 1.0], &[0.2, -0.4]),
            &[1.0],
            0.8,
            ExpFamilySpec::Poisson,
        )
        .unwrap();
        let p = IsProposal::gaussian(ProposalScale::TauMultiple(1.0));
        let mut r = RngStream::new(5, 0);
        for _ in 0..10_000 {
            let x = p.sample(c.x_hat, c.tau, &mut r);
            assert!(modified_log_weight(&c, x, &p, c.tau) <= 1e-12);
        }
    }

    #[test]
    fn t_bound_branches() {
        assert_eq!(t_weight_bound(4.0, 1.0, 1.25), 1.0);
        assert_eq!(t_weight_bound(4.0, 1.0, 3.0), 1.0);
        // continuous at the branch point
        assert!((t_weight_bound(4.0, 1.0, 1.25 - 1e-9) - 1.0).abs() < 1e-6);
        assert!(t_weight_bound(4.0, 1.0, 0.3) > 1.0);
    }

    #[test]
    fn t_bound_holds_pointwise() {
        let c = ClusterAtTheta::new(
            &cluster(&[0.0, 2.0, 5.0], &[0.1, 0.0, 0.7]),
            &[1.0],
            1.1,
            ExpFamilySpec::Poisson,
        )
        .unwrap();
        let mut r = RngStream::new(6, 0);
        for tq in [0.2, 0.6, 1.0, 1.5] {
            let p = IsProposal::student_t(5.0, ProposalScale::Fixed(tq));
            let k2 = t_weight_bound(5.0, c.tau * c.tau, tq * tq);
            for _ in 0..5000 {
                let x = p.sample(c.x_hat, tq, &mut r);
                assert!(modified_log_weight(&c, x, &p, tq) <= k2.ln() + 1e-12);
            }
            let wm = weight_moment(&c, &p, 2.0, 50_000, &mut r).unwrap();
            assert!(wm.estimate <= wm.upper_bound + 3.0 * wm.std_error);
            assert!(wm.mean >= wm.lower_bound - 3.0 * wm.mean_std_error);
        }
    }

    #[test]
    fn glmm_is_matches_quadrature() {
        let mut r = RngStream::new(12, 0);
        let design = crate::models::glmm_design(3, 3, 2, &mut r);
        let data = crate::models::glmm_simulate(
            ExpFamilySpec::LOGISTIC,
            &design,
            &[0.2, -0.5],
            1.0,
            &mut r,
        );
        for prop in [
            IsProposal::gaussian(ProposalScale::Laplace(1.2)),
            IsProposal::student_t(4.0, ProposalScale::Laplace(1.0)),
        ] {
            let m = GlmmModel::new(ExpFamilySpec::LOGISTIC, data.clone(), prop).unwrap();
            let theta = [0.2, -0.5, 0.0];
            let reps = 20_000;
            let e: Vec<f64> = (0..reps)
                .map(|k| {
                    sample_noise(&m, &theta, 1, &mut RngStream::indexed(30, &[k]))
                        .unwrap()
                        .z
                        .exp()
                })
                .collect();
            let (mean, var) = mean_var(&e);
            let se = (var / reps as f64).sqrt();
            assert!((mean - 1.0).abs() < 4.0 * se, "{mean} ± {se}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn mode_residual(
            offs in proptest::collection::vec(-3.0f64..3.0, 1..6),
            ys in proptest::collection::vec(0u32..8, 6),
            log_tau in -2.0f64..2.0,
            poisson in any::<bool>(),
        ) {
            let fam = if poisson { ExpFamilySpec::Poisson } else { ExpFamilySpec::Binomial { trials: 7 } };
            let s: f64 = ys[..offs.len()].iter().map(|&v| v as f64).sum();
            let tau_sq = (2.0 * log_tau).exp();
            let x = find_mode(&offs, s, tau_sq, fam).unwrap();
            let r = x - tau_sq * (s - offs.iter().map(|o| fam.a1(o + x)).sum::<f64>());
            prop_assert!(r.abs() <= 1e-10 * (1.0 + x.abs()));
            // between 0 and the unpenalized root
            let x1 = tau_sq * (s - offs.iter().map(|o| fam.a1(*o)).sum::<f64>());
            prop_assert!(x * x1 >= 0.0 && x.abs() <= x1.abs());
        }
    }
}
