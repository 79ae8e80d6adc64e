//! Stochastic Lotka–Volterra kinetics and a bootstrap particle filter for
//! noisily observed predator–prey counts.

use alloc::vec;
use alloc::vec::Vec;
use libm::log;

use crate::diagnostics::iat_obm;
use crate::dist::{gamma_logpdf, logsumexp, mean_var, normal_logpdf};
use crate::kernel::{
    default_burn_in, run_chain_coords, PseudoMarginalKernel, PseudoMarginalTarget,
    RandomWalkProposal,
};
use crate::linalg::CovarianceMatrix;
use crate::{Error, Result, RngStream};

/// Maximum number of reactions simulated within one propagation interval.
pub const EVENT_CAP: u64 = 10_000_000;

/// Reaction rates `β₁x₁` (prey birth), `β₂x₁x₂` (predation), `β₃x₂`
/// (predator death), observed with Gaussian noise of sd `obs_sd`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LvParams {
    pub beta: [f64; 3],
    pub obs_sd: f64,
}

impl LvParams {
    pub fn new(beta: [f64; 3]) -> Self {
        Self { beta, obs_sd: 10.0 }
    }

    /// Rates used for the simulated datasets.
    pub const REFERENCE_BETA: [f64; 3] = [1.0, 0.005, 0.6];
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LvState {
    pub x1: u64,
    pub x2: u64,
    pub t: f64,
}

impl LvState {
    pub fn new(x1: u64, x2: u64) -> Self {
        Self { x1, x2, t: 0.0 }
    }
}

/// Every reaction of a simulated path, starting with the initial state.
#[derive(Clone, Debug, PartialEq)]
pub struct LvPath {
    pub states: Vec<LvState>,
    pub t_end: f64,
}

impl LvPath {
    /// State in force at time `t`.
    pub fn at(&self, t: f64) -> LvState {
        let k = self.states.partition_point(|s| s.t <= t);
        let mut s = self.states[k.saturating_sub(1)];
        s.t = t;
        s
    }
}

/// Advances `x` by `dt` time units of exact stochastic simulation and returns
/// the number of reactions that fired.
pub fn gillespie_advance(
    beta: &[f64; 3],
    x: &mut [u64; 2],
    dt: f64,
    rng: &mut RngStream,
    cap: u64,
) -> Result<u64> {
    let mut t = 0.0;
    let mut events = 0;
    loop {
        let (x1, x2) = (x[0] as f64, x[1] as f64);
        let r1 = beta[0] * x1;
        let r2 = beta[1] * x1 * x2;
        let r3 = beta[2] * x2;
        let total = r1 + r2 + r3;
        if !(total > 0.0) {
            return Ok(events);
        }
        t += rng.exp1() / total;
        if t > dt {
            return Ok(events);
        }
        if events == cap {
            return Err(Error::BudgetExceeded { limit: cap });
        }
        let u = rng.uniform() * total;
        if u < r1 {
            x[0] += 1;
        } else if u < r1 + r2 {
            x[0] -= 1;
            x[1] += 1;
        } else {
            x[1] -= 1;
        }
        events += 1;
    }
}

/// Full event-by-event path from `x0` to `t_end`.
pub fn gillespie_simulate(
    params: &LvParams,
    x0: LvState,
    t_end: f64,
    rng: &mut RngStream,
) -> Result<LvPath> {
    if !(t_end >= x0.t) {
        return Err(Error::InvalidArgument("t_end precedes the initial time"));
    }
    let b = params.beta;
    let mut states = vec![x0];
    let mut s = x0;
    loop {
        let (x1, x2) = (s.x1 as f64, s.x2 as f64);
        let (r1, r2, r3) = (b[0] * x1, b[1] * x1 * x2, b[2] * x2);
        let total = r1 + r2 + r3;
        if !(total > 0.0) {
            break;
        }
        let t = s.t + rng.exp1() / total;
        if t > t_end {
            break;
        }
        if states.len() as u64 > EVENT_CAP {
            return Err(Error::BudgetExceeded { limit: EVENT_CAP });
        }
        let u = rng.uniform() * total;
        if u < r1 {
            s.x1 += 1;
        } else if u < r1 + r2 {
            s.x1 -= 1;
            s.x2 += 1;
        } else {
            s.x2 -= 1;
        }
        s.t = t;
        states.push(s);
    }
    Ok(LvPath { states, t_end })
}

/// Noisy counts `y = (y₁, y₂)` at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LvObservation {
    pub t: f64,
    pub y: [f64; 2],
}

/// Observes a fresh path at times `0, 1, …, t_max`.
pub fn lv_simulate_data(
    params: &LvParams,
    x0: LvState,
    t_max: usize,
    rng: &mut RngStream,
) -> Result<Vec<LvObservation>> {
    let path = gillespie_simulate(params, x0, x0.t + t_max as f64, rng)?;
    Ok((0..=t_max)
        .map(|k| {
            let t = x0.t + k as f64;
            let s = path.at(t);
            LvObservation {
                t,
                y: [
                    s.x1 as f64 + params.obs_sd * rng.std_normal(),
                    s.x2 as f64 + params.obs_sd * rng.std_normal(),
                ],
            }
        })
        .collect())
}

/// Distribution of the state at the first observation time.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialDist {
    Point {
        x1: u64,
        x2: u64,
    },
    /// Independent discrete uniforms on the inclusive ranges.
    UniformBox {
        x1: (u64, u64),
        x2: (u64, u64),
    },
}

impl InitialDist {
    fn sample(&self, rng: &mut RngStream) -> [u64; 2] {
        let pick = |lo: u64, hi: u64, rng: &mut RngStream| {
            lo + ((rng.uniform() * (hi - lo + 1) as f64) as u64).min(hi - lo)
        };
        match *self {
            Self::Point { x1, x2 } => [x1, x2],
            Self::UniformBox { x1, x2 } => [pick(x1.0, x1.1, rng), pick(x2.0, x2.1, rng)],
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Resampling {
    #[default]
    Multinomial,
    Systematic,
}

/// Ancestor indices for normalized `weights`. `out.len()` offspring are drawn.
pub fn resample(weights: &[f64], scheme: Resampling, rng: &mut RngStream, out: &mut [usize]) {
    let n = out.len();
    match scheme {
        Resampling::Systematic => {
            let u0 = rng.uniform();
            inverse_cdf(weights, (0..n).map(|k| (k as f64 + u0) / n as f64), out);
        }
        Resampling::Multinomial => {
            // sorted uniforms from normalized exponential spacings
            let spacings: Vec<f64> = (0..=n).map(|_| rng.exp1()).collect();
            let total: f64 = spacings.iter().sum();
            let us = spacings[..n].iter().scan(0.0, |acc, s| {
                *acc += s;
                Some(*acc / total)
            });
            inverse_cdf(weights, us, out);
        }
    }
}

fn inverse_cdf(weights: &[f64], sorted_us: impl Iterator<Item = f64>, out: &mut [usize]) {
    let mut i = 0;
    let mut cum = weights[0];
    for (slot, u) in out.iter_mut().zip(sorted_us) {
        while u >= cum && i + 1 < weights.len() {
            i += 1;
            cum += weights[i];
        }
        *slot = i;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BpfConfig {
    pub particles: usize,
    pub init: InitialDist,
    pub resampling: Resampling,
    pub event_cap: u64,
}

impl BpfConfig {
    pub fn new(particles: usize, init: InitialDist) -> Self {
        Self {
            particles,
            init,
            resampling: Resampling::Multinomial,
            event_cap: EVENT_CAP,
        }
    }
}

fn obs_logdensity(y: &[f64; 2], x: &[u64; 2], sd: f64) -> f64 {
    let v = sd * sd;
    normal_logpdf(y[0], x[0] as f64, v) + normal_logpdf(y[1], x[1] as f64, v)
}

/// Bootstrap particle filter estimate of `log p(y_{0:T} | β)`.
///
/// The first observation is taken at the initial time. Particle `i` moving
/// into observation `k` uses the stream `indexed(base, [k, i])` where `base`
/// is drawn from `rng`, so propagation may run in any order. Returns `−∞` if
/// every particle gets zero weight at some step.
pub fn bpf_loglik(
    params: &LvParams,
    data: &[LvObservation],
    cfg: &BpfConfig,
    rng: &mut RngStream,
) -> Result<f64> {
    let n = cfg.particles;
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one particle"));
    }
    if data.is_empty() {
        return Ok(0.0);
    }
    let base = rand_core::RngCore::next_u64(rng);
    let mut particles: Vec<[u64; 2]> = (0..n)
        .map(|i| {
            cfg.init
                .sample(&mut RngStream::indexed(base, &[0, i as u64]))
        })
        .collect();
    let mut scratch = particles.clone();
    let mut logw = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let mut ancestors = vec![0usize; n];
    let log_n = log(n as f64);
    let mut total = 0.0;

    for (k, obs) in data.iter().enumerate() {
        if k > 0 {
            let dt = obs.t - data[k - 1].t;
            for (i, x) in particles.iter_mut().enumerate() {
                let mut r = RngStream::indexed(base, &[k as u64, i as u64]);
                gillespie_advance(&params.beta, x, dt, &mut r, cfg.event_cap)?;
            }
        }
        for (w, x) in logw.iter_mut().zip(&particles) {
            *w = obs_logdensity(&obs.y, x, params.obs_sd);
        }
        let l = logsumexp(&logw);
        if l.is_nan() {
            return Err(Error::EstimatorFailure);
        }
        if l == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        total += l - log_n;
        if k + 1 < data.len() {
            for (w, lw) in weights.iter_mut().zip(&logw) {
                *w = libm::exp(lw - l);
            }
            let mut r = RngStream::indexed(base, &[u64::MAX, k as u64]);
            resample(&weights, cfg.resampling, &mut r, &mut ancestors);
            for (dst, &a) in scratch.iter_mut().zip(&ancestors) {
                *dst = particles[a];
            }
            core::mem::swap(&mut particles, &mut scratch);
        }
    }
    Ok(total)
}

/// Independent gamma priors (shape, rate) on the three rates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LvPrior {
    pub shape: [f64; 3],
    pub rate: [f64; 3],
}

impl Default for LvPrior {
    fn default() -> Self {
        Self {
            shape: [5.0, 1.5, 3.5],
            rate: [5.0, 10.0, 5.0],
        }
    }
}

impl LvPrior {
    pub fn log_density(&self, beta: &[f64]) -> f64 {
        if beta.iter().any(|&b| !(b > 0.0)) {
            return f64::NEG_INFINITY;
        }
        (0..3)
            .map(|i| gamma_logpdf(beta[i], self.shape[i], self.rate[i]))
            .sum()
    }
}

/// Pseudo-marginal target on `β` with a particle-filter likelihood.
/// Exceeding the event budget counts as a zero estimate.
#[derive(Clone, Debug)]
pub struct LvTarget<'a> {
    pub data: &'a [LvObservation],
    pub prior: LvPrior,
    pub obs_sd: f64,
    pub bpf: BpfConfig,
}

impl PseudoMarginalTarget for LvTarget<'_> {
    fn dim(&self) -> usize {
        3
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        self.prior.log_density(theta)
    }

    fn log_likelihood_estimate(&self, theta: &[f64], rng: &mut RngStream) -> Result<f64> {
        let params = LvParams {
            beta: [theta[0], theta[1], theta[2]],
            obs_sd: self.obs_sd,
        };
        match bpf_loglik(&params, self.data, &self.bpf, rng) {
            Err(Error::BudgetExceeded { .. }) => Ok(f64::NEG_INFINITY),
            other => other,
        }
    }
}

/// Settings shared by every particle count in [`lv_experiment`].
#[derive(Clone, Debug)]
pub struct LvExperiment {
    pub prior: LvPrior,
    pub true_beta: [f64; 3],
    pub obs_sd: f64,
    pub init: InitialDist,
    pub resampling: Resampling,
    pub ell: f64,
    /// Random-walk covariance before scaling by `ℓ²/3`.
    pub base_cov: CovarianceMatrix,
    pub m: usize,
    pub sigma_reps: usize,
    pub seed: u64,
}

/// One row of the particle-count comparison.
#[derive(Clone, Debug, PartialEq)]
pub struct LvRow {
    pub particles: usize,
    pub acceptance: f64,
    pub iat: [f64; 3],
    /// `IAT · N` per rate.
    pub ct: [f64; 3],
    pub sigma_hat: f64,
}

/// Noise sd at `β` over `reps` filter runs; replicate `r` uses `indexed(seed, [r])`.
pub fn bpf_sigma(
    params: &LvParams,
    data: &[LvObservation],
    cfg: &BpfConfig,
    reps: usize,
    seed: u64,
) -> Result<f64> {
    if reps < 2 {
        return Err(Error::InvalidArgument("need at least two replicates"));
    }
    let v = (0..reps)
        .map(|r| {
            bpf_loglik(
                params,
                data,
                cfg,
                &mut RngStream::indexed(seed, &[r as u64]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    if v.iter().any(|x| !x.is_finite()) {
        return Ok(f64::INFINITY);
    }
    Ok(libm::sqrt(mean_var(&v).1))
}

/// Runs one pseudo-marginal chain per particle count, started at the true
/// rates. Row `k` uses streams indexed by `(seed, [k, ·])`.
pub fn lv_experiment_row(
    exp: &LvExperiment,
    data: &[LvObservation],
    particles: usize,
    k: usize,
) -> Result<LvRow> {
    let bpf = BpfConfig {
        particles,
        init: exp.init,
        resampling: exp.resampling,
        event_cap: EVENT_CAP,
    };
    let params = LvParams {
        beta: exp.true_beta,
        obs_sd: exp.obs_sd,
    };
    let sigma_hat = bpf_sigma(
        &params,
        data,
        &bpf,
        exp.sigma_reps,
        crate::rng::stream_id_from(&[exp.seed, k as u64, 1]),
    )?;
    let target = LvTarget {
        data,
        prior: exp.prior,
        obs_sd: exp.obs_sd,
        bpf,
    };
    let proposal = RandomWalkProposal::new(exp.ell, exp.base_cov.clone())?;
    let mut kernel = PseudoMarginalKernel::new(target, proposal)?;
    let mut rng = RngStream::indexed(exp.seed, &[k as u64, 2]);
    let init = kernel.initialize(&exp.true_beta, &mut rng)?;
    let (traces, _) = run_chain_coords(init, &mut kernel, exp.m, default_burn_in(exp.m), &mut rng)?;
    let mut iat = [0.0; 3];
    for (i, c) in traces.coords.iter().enumerate() {
        iat[i] = iat_obm(c, None)?.iat;
    }
    Ok(LvRow {
        particles,
        acceptance: traces.acceptance_rate(),
        iat,
        ct: iat.map(|v| v * particles as f64),
        sigma_hat,
    })
}

/// Table of acceptance, `CT = IAT·N` per rate and `σ̂` at the true rates for
/// each particle count. `m = 0` yields an empty table.
pub fn lv_experiment(
    exp: &LvExperiment,
    data: &[LvObservation],
    particle_counts: &[usize],
) -> Result<Vec<LvRow>> {
    if exp.m == 0 {
        return Ok(Vec::new());
    }
    particle_counts
        .iter()
        .enumerate()
        .map(|(k, &n)| lv_experiment_row(exp, data, n, k))
        .collect()
}
