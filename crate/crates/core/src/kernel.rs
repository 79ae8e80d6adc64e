//! Pseudo-marginal Metropolis–Hastings transitions and the chain runner.
//!
//! The chain state is `(θ, z)` where `z` is the log-likelihood-estimate
//! noise. Two kernels are provided:
//!
//! * [`PseudoMarginalKernel`] drives a model through its likelihood
//!   estimator, drawing fresh auxiliary variables at every proposal and
//!   recycling the current estimate on rejection.
//! * [`LimitingKernel`] is the large-sample limit: a Gaussian random walk on
//!   a `N(0, Σ)` target whose proposal noise is `z' ~ N(-σ²/2, σ²)`. Its
//!   stationary noise law is `N(+σ²/2, σ²)`.
//!
//! Acceptance is always decided in log space by comparing `ln u` against
//! [`log_accept`], since noise differences can exceed the range of `exp`.

use alloc::vec;
use alloc::vec::Vec;
use libm::{log, sqrt};

use crate::dist::LN_2PI;
use crate::linalg::{lower_mul_vec, CovarianceMatrix};
use crate::{Error, Result, RngStream};

/// Attempts allowed when looking for a finite initial likelihood estimate.
pub const INIT_ATTEMPTS: usize = 100;

/// `(θ, z)` plus the cached unnormalized log-posterior estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub theta: Vec<f64>,
    /// Log-likelihood-estimate noise. For models without an exact
    /// likelihood this is the log-estimate itself (noise relative to a zero
    /// reference); only differences of `z` enter the acceptance ratio.
    pub z: f64,
    pub log_post_hat: f64,
}

/// `min(0, log r + log q-ratio + z' − z)`; a `-∞` target ratio is a certain
/// rejection.
#[inline]
pub fn log_accept(log_target_ratio: f64, log_q_ratio: f64, z_prop: f64, z_cur: f64) -> f64 {
    if log_target_ratio == f64::NEG_INFINITY || z_prop == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let v = log_target_ratio + log_q_ratio + z_prop - z_cur;
    if v > 0.0 {
        0.0
    } else {
        v
    }
}

#[inline]
fn accept(log_alpha: f64, rng: &mut RngStream) -> bool {
    log(rng.uniform()) < log_alpha
}

/// A Markov transition acting in place on a [`ChainState`].
pub trait Kernel {
    /// Performs one transition and reports whether the proposal was accepted.
    fn step(&mut self, state: &mut ChainState, rng: &mut RngStream) -> Result<bool>;
}

/// Posterior whose likelihood is only available through a non-negative
/// unbiased estimator, reported on the log scale.
pub trait PseudoMarginalTarget {
    fn dim(&self) -> usize;

    /// Log prior density up to a constant; `-∞` outside the support.
    fn log_prior(&self, theta: &[f64]) -> f64;

    /// Fresh log-likelihood estimate at `theta`. `-∞` encodes a zero
    /// estimate; NaN is a model bug.
    fn log_likelihood_estimate(&self, theta: &[f64], rng: &mut RngStream) -> Result<f64>;

    /// Exact log-likelihood when the model has one.
    fn exact_log_likelihood(&self, _theta: &[f64]) -> Option<f64> {
        None
    }
}

impl<T: PseudoMarginalTarget + ?Sized> PseudoMarginalTarget for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn log_prior(&self, theta: &[f64]) -> f64 {
        (**self).log_prior(theta)
    }
    fn log_likelihood_estimate(&self, theta: &[f64], rng: &mut RngStream) -> Result<f64> {
        (**self).log_likelihood_estimate(theta, rng)
    }
    fn exact_log_likelihood(&self, theta: &[f64]) -> Option<f64> {
        (**self).exact_log_likelihood(theta)
    }
}

/// Gaussian random walk `θ' ~ N(θ, ℓ² Σ_base / d)`.
#[derive(Clone, Debug)]
pub struct RandomWalkProposal {
    ell: f64,
    base_cov: CovarianceMatrix,
    step_scale: f64,
}

impl RandomWalkProposal {
    pub fn new(ell: f64, base_cov: CovarianceMatrix) -> Result<Self> {
        if !(ell > 0.0) || !ell.is_finite() {
            return Err(Error::InvalidArgument("proposal scale must be positive"));
        }
        let d = base_cov.dim();
        Ok(Self {
            ell,
            base_cov,
            step_scale: ell / sqrt(d as f64),
        })
    }

    pub fn isotropic(ell: f64, dim: usize) -> Result<Self> {
        Self::new(ell, CovarianceMatrix::identity(dim))
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }

    pub fn dim(&self) -> usize {
        self.base_cov.dim()
    }

    pub fn base_cov(&self) -> &CovarianceMatrix {
        &self.base_cov
    }

    /// Effective proposal covariance `ℓ² Σ_base / d`.
    pub fn effective_cov(&self) -> Result<CovarianceMatrix> {
        CovarianceMatrix::new(
            self.base_cov
                .entries()
                .scaled(self.step_scale * self.step_scale),
        )
    }

    /// Writes `θ + (ℓ/√d) L ξ` into `out`, using `xi` as scratch.
    fn propose_into(&self, theta: &[f64], rng: &mut RngStream, xi: &mut [f64], out: &mut [f64]) {
        rng.fill_std_normal(xi);
        if self.base_cov.is_identity() {
            for ((o, t), x) in out.iter_mut().zip(theta).zip(xi.iter()) {
                *o = t + self.step_scale * x;
            }
        } else {
            lower_mul_vec(self.base_cov.chol(), xi, out);
            for (o, t) in out.iter_mut().zip(theta) {
                *o = t + self.step_scale * *o;
            }
        }
    }
}

/// Pseudo-marginal Metropolis–Hastings with a random-walk proposal.
#[derive(Debug)]
pub struct PseudoMarginalKernel<T> {
    target: T,
    proposal: RandomWalkProposal,
    track_noise: bool,
    xi: Vec<f64>,
    prop: Vec<f64>,
}

impl<T: PseudoMarginalTarget> PseudoMarginalKernel<T> {
    pub fn new(target: T, proposal: RandomWalkProposal) -> Result<Self> {
        if target.dim() != proposal.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                found: proposal.dim(),
            });
        }
        let d = target.dim();
        Ok(Self {
            target,
            proposal,
            track_noise: false,
            xi: vec![0.0; d],
            prop: vec![0.0; d],
        })
    }

    /// Record `z = log p̂ − log p` in the state using the exact likelihood.
    /// Costs one exact evaluation per proposal.
    pub fn with_noise_tracking(mut self, on: bool) -> Self {
        self.track_noise = on;
        self
    }

    pub fn target(&self) -> &T {
        &self.target
    }

    pub fn proposal(&self) -> &RandomWalkProposal {
        &self.proposal
    }

    fn noise_of(&self, theta: &[f64], log_lik_hat: f64) -> f64 {
        if self.track_noise {
            if let Some(exact) = self.target.exact_log_likelihood(theta) {
                return log_lik_hat - exact;
            }
        }
        log_lik_hat
    }

    /// Starts at `theta0`, redrawing the estimate until it is finite.
    pub fn initialize(&self, theta0: &[f64], rng: &mut RngStream) -> Result<ChainState> {
        if theta0.len() != self.target.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.target.dim(),
                found: theta0.len(),
            });
        }
        let lp = self.target.log_prior(theta0);
        if !lp.is_finite() {
            return Err(Error::InvalidArgument(
                "initial point has zero prior density",
            ));
        }
        for _ in 0..INIT_ATTEMPTS {
            let ll = self.target.log_likelihood_estimate(theta0, rng)?;
            if ll.is_nan() {
                return Err(Error::EstimatorFailure);
            }
            if ll.is_finite() {
                return Ok(ChainState {
                    theta: theta0.to_vec(),
                    z: self.noise_of(theta0, ll),
                    log_post_hat: lp + ll,
                });
            }
        }
        Err(Error::InitializationFailed {
            attempts: INIT_ATTEMPTS,
        })
    }
}

impl<T: PseudoMarginalTarget> Kernel for PseudoMarginalKernel<T> {
    fn step(&mut self, state: &mut ChainState, rng: &mut RngStream) -> Result<bool> {
        self.proposal
            .propose_into(&state.theta, rng, &mut self.xi, &mut self.prop);
        let lp = self.target.log_prior(&self.prop);
        if lp == f64::NEG_INFINITY {
            // outside the prior support: reject without drawing an estimate
            let _ = rng.uniform();
            return Ok(false);
        }
        let ll = self.target.log_likelihood_estimate(&self.prop, rng)?;
        if ll.is_nan() || lp.is_nan() {
            return Err(Error::EstimatorFailure);
        }
        let log_post_prop = lp + ll;
        // z differences equal log-estimate differences for a common reference
        let log_alpha = log_accept(log_post_prop - state.log_post_hat, 0.0, 0.0, 0.0);
        if accept(log_alpha, rng) {
            let z = self.noise_of(&self.prop, ll);
            core::mem::swap(&mut state.theta, &mut self.prop);
            state.z = z;
            state.log_post_hat = log_post_prop;
            Ok(true)
        } else {
            Ok(false)
        }
    }
}

/// Parameters of the limiting kernel `P̃_{ℓ,σ}`.
#[derive(Clone, Debug)]
pub struct LimitingKernelSpec {
    pub ell: f64,
    pub sigma: f64,
    pub target_cov: CovarianceMatrix,
}

impl LimitingKernelSpec {
    /// Identity target covariance in dimension `d`.
    pub fn new(d: usize, ell: f64, sigma: f64) -> Result<Self> {
        Self::with_cov(ell, sigma, CovarianceMatrix::identity(d))
    }

    pub fn with_cov(ell: f64, sigma: f64, target_cov: CovarianceMatrix) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidArgument(
                "sigma must be finite and non-negative",
            ));
        }
        if !(ell > 0.0) || !ell.is_finite() {
            return Err(Error::InvalidArgument("ell must be positive"));
        }
        Ok(Self {
            ell,
            sigma,
            target_cov,
        })
    }

    pub fn dim(&self) -> usize {
        self.target_cov.dim()
    }
}

/// The large-sample limit of the pseudo-marginal kernel.
#[derive(Debug)]
pub struct LimitingKernel {
    spec: LimitingKernelSpec,
    proposal: RandomWalkProposal,
    log_norm: f64,
    xi: Vec<f64>,
    prop: Vec<f64>,
    scratch: Vec<f64>,
}

impl LimitingKernel {
    pub fn new(spec: LimitingKernelSpec) -> Result<Self> {
        let d = spec.dim();
        let proposal = RandomWalkProposal::new(spec.ell, spec.target_cov.clone())?;
        let log_norm = -0.5 * (d as f64 * LN_2PI + spec.target_cov.log_det());
        Ok(Self {
            spec,
            proposal,
            log_norm,
            xi: vec![0.0; d],
            prop: vec![0.0; d],
            scratch: vec![0.0; d],
        })
    }

    pub fn spec(&self) -> &LimitingKernelSpec {
        &self.spec
    }

    fn log_target(&mut self, theta: &[f64]) -> f64 {
        self.log_norm - 0.5 * self.spec.target_cov.inv_quad_form(theta, &mut self.scratch)
    }

    /// Builds a state at `(θ̃, z)` with its cached log-posterior.
    pub fn state_at(&mut self, theta: Vec<f64>, z: f64) -> ChainState {
        let lt = self.log_target(&theta);
        ChainState {
            theta,
            z,
            log_post_hat: lt + z,
        }
    }

    /// Noise of a fresh estimate, `z ~ N(−σ²/2, σ²)`, so that `E[e^z] = 1`.
    #[inline]
    pub fn proposal_noise(&self, rng: &mut RngStream) -> f64 {
        let s = self.spec.sigma;
        -0.5 * s * s + s * rng.std_normal()
    }

    /// Draws `θ̃ ~ N(0, Σ)` and `z ~ N(+σ²/2, σ²)`.
    pub fn stationary_init(&mut self, rng: &mut RngStream) -> ChainState {
        let d = self.spec.dim();
        let mut xi = vec![0.0; d];
        rng.fill_std_normal(&mut xi);
        let mut theta = vec![0.0; d];
        lower_mul_vec(self.spec.target_cov.chol(), &xi, &mut theta);
        let s = self.spec.sigma;
        let z = if s == 0.0 {
            0.0
        } else {
            0.5 * s * s + s * rng.std_normal()
        };
        self.state_at(theta, z)
    }
}

impl Kernel for LimitingKernel {
    #[inline]
    fn step(&mut self, state: &mut ChainState, rng: &mut RngStream) -> Result<bool> {
        self.proposal
            .propose_into(&state.theta, rng, &mut self.xi, &mut self.prop);
        let z_prop = self.proposal_noise(rng);
        let prop = core::mem::take(&mut self.prop);
        let lt_prop = self.log_target(&prop);
        self.prop = prop;
        let lt_cur = state.log_post_hat - state.z;
        let log_alpha = log_accept(lt_prop - lt_cur, 0.0, z_prop, state.z);
        if accept(log_alpha, rng) {
            core::mem::swap(&mut state.theta, &mut self.prop);
            state.z = z_prop;
            state.log_post_hat = lt_prop + z_prop;
            Ok(true)
        } else {
            Ok(false)
        }
    }
}

/// Free-function form of [`LimitingKernel::stationary_init`].
pub fn stationary_init(spec: &LimitingKernelSpec, rng: &mut RngStream) -> Result<ChainState> {
    Ok(LimitingKernel::new(spec.clone())?.stationary_init(rng))
}

/// Test-function values and acceptance flags of one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub f_values: Vec<f64>,
    pub accept_flags: Vec<bool>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.f_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f_values.is_empty()
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.accept_flags.is_empty() {
            return 0.0;
        }
        self.accept_flags.iter().filter(|&&a| a).count() as f64 / self.accept_flags.len() as f64
    }
}

/// One trace per coordinate `f_i(θ, z) = θ_i`, sharing acceptance flags.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoordinateTraces {
    pub coords: Vec<Vec<f64>>,
    pub accept_flags: Vec<bool>,
}

impl CoordinateTraces {
    pub fn acceptance_rate(&self) -> f64 {
        Trace {
            f_values: Vec::new(),
            accept_flags: self.accept_flags.clone(),
        }
        .acceptance_rate()
    }
}

/// Default burn-in: 10% of the recorded length.
pub fn default_burn_in(m: usize) -> usize {
    m / 10
}

/// Runs `burn_in + m` transitions and hands each recorded state to `visit`.
/// Returns the final state.
pub fn drive<K, V>(
    mut state: ChainState,
    kernel: &mut K,
    m: usize,
    burn_in: usize,
    rng: &mut RngStream,
    mut visit: V,
) -> Result<ChainState>
where
    K: Kernel + ?Sized,
    V: FnMut(&ChainState, bool),
{
    for _ in 0..burn_in {
        kernel.step(&mut state, rng)?;
    }
    for _ in 0..m {
        let a = kernel.step(&mut state, rng)?;
        visit(&state, a);
    }
    Ok(state)
}

/// Runs the chain and records `f` and the acceptance flag for the last `m`
/// of `burn_in + m` steps.
pub fn run_chain<K, F>(
    init: ChainState,
    kernel: &mut K,
    m: usize,
    burn_in: usize,
    rng: &mut RngStream,
    mut f: F,
) -> Result<Trace>
where
    K: Kernel + ?Sized,
    F: FnMut(&ChainState) -> f64,
{
    let mut trace = Trace {
        f_values: Vec::with_capacity(m),
        accept_flags: Vec::with_capacity(m),
    };
    drive(init, kernel, m, burn_in, rng, |s, a| {
        trace.f_values.push(f(s));
        trace.accept_flags.push(a);
    })?;
    Ok(trace)
}

/// Like [`run_chain`] but records every coordinate of `θ`.
pub fn run_chain_coords<K>(
    init: ChainState,
    kernel: &mut K,
    m: usize,
    burn_in: usize,
    rng: &mut RngStream,
) -> Result<(CoordinateTraces, ChainState)>
where
    K: Kernel + ?Sized,
{
    let d = init.theta.len();
    let mut out = CoordinateTraces {
        coords: (0..d).map(|_| Vec::with_capacity(m)).collect(),
        accept_flags: Vec::with_capacity(m),
    };
    let last = drive(init, kernel, m, burn_in, rng, |s, a| {
        for (c, v) in out.coords.iter_mut().zip(&s.theta) {
            c.push(*v);
        }
        out.accept_flags.push(a);
    })?;
    Ok((out, last))
}

/// Default test function `f(θ, z) = θ₁`.
pub fn first_coordinate(state: &ChainState) -> f64 {
    state.theta[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{mean_var, normal_logpdf};

    struct ExactGaussian {
        var: f64,
    }

    impl PseudoMarginalTarget for ExactGaussian {
        fn dim(&self) -> usize {
            1
        }
        fn log_prior(&self, _theta: &[f64]) -> f64 {
            0.0
        }
        fn log_likelihood_estimate(&self, theta: &[f64], _rng: &mut RngStream) -> Result<f64> {
            Ok(normal_logpdf(theta[0], 0.0, self.var))
        }
    }

    struct NanModel;
    impl PseudoMarginalTarget for NanModel {
        fn dim(&self) -> usize {
            1
        }
        fn log_prior(&self, _theta: &[f64]) -> f64 {
            0.0
        }
        fn log_likelihood_estimate(&self, theta: &[f64], _rng: &mut RngStream) -> Result<f64> {
            Ok(if theta[0] == 0.0 { 0.0 } else { f64::NAN })
        }
    }

    struct NeverFinite;
    impl PseudoMarginalTarget for NeverFinite {
        fn dim(&self) -> usize {
            1
        }
        fn log_prior(&self, _theta: &[f64]) -> f64 {
            0.0
        }
        fn log_likelihood_estimate(&self, _theta: &[f64], _rng: &mut RngStream) -> Result<f64> {
            Ok(f64::NEG_INFINITY)
        }
    }

    #[test]
    fn log_accept_examples() {
        assert_eq!(log_accept(0.0, 0.0, 0.3, 0.3), 0.0);
        assert_eq!(log_accept(0.0, 0.0, -0.5, 0.0), -0.5);
        let r = normal_logpdf(1.0, 0.0, 1.0) - normal_logpdf(0.0, 0.0, 1.0);
        assert!((log_accept(r, 0.0, 0.1, 0.1) + 0.5).abs() < 1e-15);
        assert_eq!(
            log_accept(f64::NEG_INFINITY, 0.0, 0.0, 0.0),
            f64::NEG_INFINITY
        );
        assert_eq!(log_accept(0.0, 0.0, 800.0, -800.0), 0.0);
        assert_eq!(log_accept(0.0, 0.0, -800.0, 800.0), -1600.0);
    }

    #[test]
    fn vanishing_move_always_accepts() {
        let cov = CovarianceMatrix::new(crate::linalg::Matrix::diagonal(&[1e-30])).unwrap();
        let prop = RandomWalkProposal::new(1.0, cov).unwrap();
        let mut k = PseudoMarginalKernel::new(ExactGaussian { var: 1.0 }, prop).unwrap();
        let mut rng = RngStream::new(1, 0);
        let init = k.initialize(&[0.3], &mut rng).unwrap();
        let tr = run_chain(init, &mut k, 10_000, 0, &mut rng, first_coordinate).unwrap();
        assert!(tr.acceptance_rate() >= 0.99);
    }

    #[test]
    fn pm_chain_is_deterministic() {
        let run = || {
            let prop = RandomWalkProposal::isotropic(2.0, 1).unwrap();
            let mut k = PseudoMarginalKernel::new(ExactGaussian { var: 1.0 }, prop).unwrap();
            let mut rng = RngStream::new(42, 7);
            let init = k.initialize(&[0.0], &mut rng).unwrap();
            run_chain(init, &mut k, 2000, 100, &mut rng, first_coordinate).unwrap()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn nan_estimate_is_an_error() {
        let prop = RandomWalkProposal::isotropic(1.0, 1).unwrap();
        let mut k = PseudoMarginalKernel::new(NanModel, prop).unwrap();
        let mut rng = RngStream::new(1, 1);
        let mut s = k.initialize(&[0.0], &mut rng).unwrap();
        assert_eq!(k.step(&mut s, &mut rng), Err(Error::EstimatorFailure));
    }

    #[test]
    fn initialization_gives_up() {
        let prop = RandomWalkProposal::isotropic(1.0, 1).unwrap();
        let k = PseudoMarginalKernel::new(NeverFinite, prop).unwrap();
        let mut rng = RngStream::new(1, 1);
        assert_eq!(
            k.initialize(&[0.0], &mut rng),
            Err(Error::InitializationFailed { attempts: 100 })
        );
    }

    #[test]
    fn rejection_recycles_state_bitwise() {
        let spec = LimitingKernelSpec::new(2, 2.5, 2.0).unwrap();
        let mut k = LimitingKernel::new(spec).unwrap();
        let mut rng = RngStream::new(3, 3);
        let mut s = k.stationary_init(&mut rng);
        let mut rejected = 0;
        for _ in 0..2000 {
            let before = s.clone();
            if !k.step(&mut s, &mut rng).unwrap() {
                rejected += 1;
                assert_eq!(before.theta, s.theta);
                assert_eq!(before.z.to_bits(), s.z.to_bits());
                assert_eq!(before.log_post_hat.to_bits(), s.log_post_hat.to_bits());
            }
        }
        assert!(rejected > 100);
    }

    #[test]
    fn zero_sigma_is_ideal_mh() {
        let spec = LimitingKernelSpec::new(1, 2.0, 0.0).unwrap();
        let mut k = LimitingKernel::new(spec).unwrap();
        let mut rng = RngStream::new(5, 0);
        let init = k.stationary_init(&mut rng);
        assert_eq!(init.z, 0.0);
        let mut zs_all_zero = true;
        let tr = run_chain(init, &mut k, 100_000, 0, &mut rng, |s| {
            zs_all_zero &= s.z == 0.0;
            s.theta[0]
        })
        .unwrap();
        assert!(zs_all_zero);
        // ideal RWM on N(0,1) with step sd 2: acceptance (2/π) atan(1) = 0.5
        assert!(
            (tr.acceptance_rate() - 0.5).abs() < 0.01,
            "{}",
            tr.acceptance_rate()
        );
    }

    #[test]
    fn stationary_init_moments() {
        let spec = LimitingKernelSpec::new(1, 2.0, 2.0).unwrap();
        let mut k = LimitingKernel::new(spec).unwrap();
        let mut rng = RngStream::new(8, 0);
        let n = 100_000;
        let (mut zs, mut ts) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for _ in 0..n {
            let s = k.stationary_init(&mut rng);
            zs.push(s.z);
            ts.push(s.theta[0]);
        }
        let (mz, vz) = mean_var(&zs);
        assert!(
            (mz - 2.0).abs() < 3.0 * (vz / n as f64).sqrt(),
            "mean z {mz}"
        );
        let (_, vt) = mean_var(&ts);
        assert!((vt - 1.0).abs() < 0.05);
    }

    #[test]
    fn stationary_init_correlated_cov() {
        let cov = CovarianceMatrix::new(
            crate::linalg::Matrix::from_rows(&[&[2.0, 0.6], &[0.6, 1.0]]).unwrap(),
        )
        .unwrap();
        let spec = LimitingKernelSpec::with_cov(2.0, 0.0, cov).unwrap();
        let mut k = LimitingKernel::new(spec).unwrap();
        let mut rng = RngStream::new(8, 1);
        let n = 100_000;
        let (mut s00, mut s01, mut s11) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let s = k.stationary_init(&mut rng);
            s00 += s.theta[0] * s.theta[0];
            s01 += s.theta[0] * s.theta[1];
            s11 += s.theta[1] * s.theta[1];
        }
        let nf = n as f64;
        assert!((s00 / nf - 2.0).abs() < 0.1);
        assert!((s01 / nf - 0.6).abs() < 0.05);
        assert!((s11 / nf - 1.0).abs() < 0.05);
    }

    #[test]
    fn empty_and_constant_traces() {
        let spec = LimitingKernelSpec::new(1, 2.0, 1.0).unwrap();
        let mut k = LimitingKernel::new(spec).unwrap();
        let mut rng = RngStream::new(1, 2);
        let init = k.stationary_init(&mut rng);
        let tr = run_chain(init.clone(), &mut k, 0, 0, &mut rng, first_coordinate).unwrap();
        assert!(tr.is_empty());
        let tr = run_chain(init, &mut k, 50, 5, &mut rng, |_| 3.5).unwrap();
        assert!(tr.f_values.iter().all(|&v| v == 3.5));
        assert_eq!(tr.accept_flags.len(), 50);
    }

    #[test]
    fn effective_covariance_scaling() {
        let p = RandomWalkProposal::isotropic(2.0, 4).unwrap();
        let c = p.effective_cov().unwrap();
        assert!((c.entries().get(0, 0) - 1.0).abs() < 1e-15);
        assert_eq!(c.entries().get(0, 1), 0.0);
        assert!(RandomWalkProposal::isotropic(0.0, 1).is_err());
    }
}
