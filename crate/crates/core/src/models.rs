//! Model zoo: the Gaussian latent-variable toy model and random-intercept
//! exponential-family GLMMs.

use alloc::vec;
use alloc::vec::Vec;
use libm::{exp, lgamma, log, sqrt};
use rand_distr::{Binomial, Distribution, Poisson, StudentT};

use crate::dist::{
    ln_choose, ln_factorial, logistic, logsumexp, normal_logpdf, softplus, student_t_logpdf, LN_2PI,
};
use crate::estimators::{find_mode, IsModel};
use crate::quadrature::gauss_hermite;
use crate::{Error, Result, RngStream};

// ---------------------------------------------------------------------------
// Toy model: X_t ~ N(θ, 1), Y_t | X_t ~ N(X_t, 1).

/// `Σ_t log φ(y_t; θ, 2)`.
pub fn toy_exact_loglik(theta: f64, y: &[f64]) -> f64 {
    y.iter().map(|&v| normal_logpdf(v, theta, 2.0)).sum()
}

/// Posterior mean and variance under a `N(0, σ₀²)` prior.
pub fn toy_posterior(y: &[f64], sigma0_sq: f64) -> (f64, f64) {
    let var = 1.0 / (1.0 / sigma0_sq + y.len() as f64 / 2.0);
    let mean = var * y.iter().sum::<f64>() / 2.0;
    (mean, var)
}

/// Log importance weight `log φ(y_t − u; θ, 1)` for `u ~ N(0, 1)`.
#[inline]
pub fn toy_is_logweight(theta: f64, y_t: f64, u: f64) -> f64 {
    normal_logpdf(y_t - u, theta, 1.0)
}

/// `y_t = θ̄ + ξ₁ + ξ₂`.
pub fn toy_simulate(theta_bar: f64, t: usize, rng: &mut RngStream) -> Vec<f64> {
    (0..t)
        .map(|_| {
            let x = theta_bar + rng.std_normal();
            x + rng.std_normal()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToyModel {
    pub y: Vec<f64>,
    pub sigma0_sq: f64,
}

impl ToyModel {
    pub fn new(y: Vec<f64>, sigma0_sq: f64) -> Result<Self> {
        if !(sigma0_sq > 0.0) {
            return Err(Error::InvalidArgument("prior variance must be positive"));
        }
        Ok(Self { y, sigma0_sq })
    }

    pub fn posterior(&self) -> (f64, f64) {
        toy_posterior(&self.y, self.sigma0_sq)
    }
}

impl IsModel for ToyModel {
    fn dim(&self) -> usize {
        1
    }

    fn num_obs(&self) -> usize {
        self.y.len()
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        normal_logpdf(theta[0], 0.0, self.sigma0_sq)
    }

    fn obs_log_weights(
        &self,
        theta: &[f64],
        t: usize,
        rng: &mut RngStream,
        out: &mut [f64],
    ) -> Result<()> {
        let y = self.y[t];
        for w in out.iter_mut() {
            *w = toy_is_logweight(theta[0], y, rng.std_normal());
        }
        Ok(())
    }

    fn exact_obs_loglik(&self, theta: &[f64], t: usize) -> Option<f64> {
        Some(normal_logpdf(self.y[t], theta[0], 2.0))
    }
}

// ---------------------------------------------------------------------------
// Exponential families.

/// Natural exponential family with canonical link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExpFamilySpec {
    /// `A(η) = n log(1 + e^η)`.
    Binomial { trials: u32 },
    /// `A(η) = e^η`.
    Poisson,
}

impl ExpFamilySpec {
    pub const LOGISTIC: Self = Self::Binomial { trials: 1 };

    #[inline]
    pub fn a(&self, eta: f64) -> f64 {
        match *self {
            Self::Binomial { trials } => trials as f64 * softplus(eta),
            Self::Poisson => exp(eta),
        }
    }

    #[inline]
    pub fn a1(&self, eta: f64) -> f64 {
        match *self {
            Self::Binomial { trials } => trials as f64 * logistic(eta),
            Self::Poisson => exp(eta),
        }
    }

    #[inline]
    pub fn a2(&self, eta: f64) -> f64 {
        match *self {
            Self::Binomial { trials } => {
                let p = logistic(eta);
                trials as f64 * p * (1.0 - p)
            }
            Self::Poisson => exp(eta),
        }
    }

    /// Base measure `log m(y)`.
    pub fn log_base(&self, y: f64) -> f64 {
        match *self {
            Self::Binomial { trials } => ln_choose(trials as u64, y as u64),
            Self::Poisson => -ln_factorial(y as u64),
        }
    }

    /// `log g(y | η) = log m(y) + yη − A(η)`.
    pub fn log_density(&self, y: f64, eta: f64) -> f64 {
        self.log_base(y) + y * eta - self.a(eta)
    }

    pub fn sample(&self, eta: f64, rng: &mut RngStream) -> f64 {
        match *self {
            Self::Binomial { trials } => Binomial::new(trials as u64, logistic(eta))
                .map(|b| b.sample(rng) as f64)
                .unwrap_or(0.0),
            Self::Poisson => {
                let lambda = exp(eta);
                if lambda > 0.0 {
                    Poisson::new(lambda).map(|p| p.sample(rng)).unwrap_or(0.0)
                } else {
                    0.0
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Random-intercept GLMM: η_{t,j} = c_{t,j}ᵀβ + X_t, X_t ~ N(0, τ²).

/// One cluster: `J` responses and their covariate rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub y: Vec<f64>,
    pub covariates: Vec<Vec<f64>>,
}

impl Cluster {
    pub fn sum_y(&self) -> f64 {
        self.y.iter().sum()
    }

    /// `c_jᵀβ` for each observation.
    pub fn offsets(&self, beta: &[f64]) -> Vec<f64> {
        self.covariates
            .iter()
            .map(|c| c.iter().zip(beta).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Cluster quantities at a fixed `(β, τ)`: offsets, `S`, and the mode of
/// `log h(x) = xS − Ã(x) − x²/(2τ²)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterAtTheta {
    pub family: ExpFamilySpec,
    pub offsets: Vec<f64>,
    pub s: f64,
    pub tau: f64,
    pub x_hat: f64,
    exp_offsets: Vec<f64>,
    /// `Σ_j [log m(y_j) + y_j o_j]`, the part of `log g` free of `x`.
    log_g0: f64,
}

impl ClusterAtTheta {
    pub fn new(cluster: &Cluster, beta: &[f64], tau: f64, family: ExpFamilySpec) -> Result<Self> {
        let offsets = cluster.offsets(beta);
        let s = cluster.sum_y();
        let x_hat = find_mode(&offsets, s, tau * tau, family)?;
        let log_g0 = cluster
            .y
            .iter()
            .zip(&offsets)
            .map(|(&y, &o)| family.log_base(y) + y * o)
            .sum();
        Ok(Self {
            family,
            exp_offsets: offsets.iter().map(|&o| exp(o)).collect(),
            offsets,
            s,
            tau,
            x_hat,
            log_g0,
        })
    }

    /// `Ã(x) = Σ_j A(o_j + x)`.
    pub fn a_tilde(&self, x: f64) -> f64 {
        let ex = exp(x);
        if !(ex > 0.0 && ex.is_finite()) {
            return self.offsets.iter().map(|o| self.family.a(o + x)).sum();
        }
        // one exponential per call: e^{o_j + x} = e^{o_j} e^x
        match self.family {
            ExpFamilySpec::Binomial { trials } => {
                let sum: f64 = self
                    .offsets
                    .iter()
                    .zip(&self.exp_offsets)
                    .map(|(&o, &eo)| {
                        let e = eo * ex;
                        if e < 1e15 {
                            libm::log1p(e)
                        } else {
                            o + x + 1.0 / e
                        }
                    })
                    .sum();
                trials as f64 * sum
            }
            ExpFamilySpec::Poisson => ex * self.exp_offsets.iter().sum::<f64>(),
        }
    }

    pub fn a_tilde1(&self, x: f64) -> f64 {
        self.offsets.iter().map(|o| self.family.a1(o + x)).sum()
    }

    pub fn a_tilde2(&self, x: f64) -> f64 {
        self.offsets.iter().map(|o| self.family.a2(o + x)).sum()
    }

    /// `log g(y | x)` including the base measure.
    pub fn log_g(&self, x: f64) -> f64 {
        self.log_g0 + self.s * x - self.a_tilde(x)
    }

    /// `log g(y | x) + log φ(x; 0, τ²)`.
    pub fn log_h(&self, x: f64) -> f64 {
        self.log_g(x) + normal_logpdf(x, 0.0, self.tau * self.tau)
    }

    /// Curvature-matched scale `(1/τ² + Ã″(x̂))^{-1/2}`.
    pub fn laplace_scale(&self) -> f64 {
        1.0 / sqrt(1.0 / (self.tau * self.tau) + self.a_tilde2(self.x_hat))
    }

    /// `log p(y | β, τ)` by Gauss–Hermite quadrature centred at the mode.
    pub fn quadrature_loglik(&self, nodes: &[f64], weights: &[f64]) -> f64 {
        let scale = core::f64::consts::SQRT_2 * self.laplace_scale();
        let terms: Vec<f64> = nodes
            .iter()
            .zip(weights)
            .map(|(&u, &w)| log(w) + u * u + self.log_h(self.x_hat + scale * u))
            .collect();
        logsumexp(&terms) + log(scale)
    }
}

/// Importance proposal family for the random intercept.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProposalKind {
    Gaussian,
    StudentT { nu: f64 },
}

/// How the proposal scale `τ_q` is set at each `θ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProposalScale {
    Fixed(f64),
    /// `τ_q = c·τ`.
    TauMultiple(f64),
    /// `τ_q = c·(1/τ² + Ã″(x̂))^{-1/2}`.
    Laplace(f64),
}

/// Mode-centred importance proposal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IsProposal {
    pub kind: ProposalKind,
    pub scale: ProposalScale,
}

impl IsProposal {
    pub fn gaussian(scale: ProposalScale) -> Self {
        Self {
            kind: ProposalKind::Gaussian,
            scale,
        }
    }

    pub fn student_t(nu: f64, scale: ProposalScale) -> Self {
        Self {
            kind: ProposalKind::StudentT { nu },
            scale,
        }
    }

    pub fn tau_q(&self, c: &ClusterAtTheta) -> f64 {
        match self.scale {
            ProposalScale::Fixed(v) => v,
            ProposalScale::TauMultiple(k) => k * c.tau,
            ProposalScale::Laplace(k) => k * c.laplace_scale(),
        }
    }

    /// `log q(x | y)` for a proposal centred at `x_hat` with scale `tau_q`.
    pub fn log_q(&self, x: f64, x_hat: f64, tau_q: f64) -> f64 {
        match self.kind {
            ProposalKind::Gaussian => normal_logpdf(x, x_hat, tau_q * tau_q),
            ProposalKind::StudentT { nu } => student_t_logpdf(x, x_hat, tau_q * tau_q, nu),
        }
    }

    /// `log q(x̂ + r) − log q(x̂)`.
    pub fn log_q_shape(&self, r: f64, tau_q: f64) -> f64 {
        let u = r / tau_q;
        match self.kind {
            ProposalKind::Gaussian => -0.5 * u * u,
            ProposalKind::StudentT { nu } => -0.5 * (nu + 1.0) * libm::log1p(u * u / nu),
        }
    }

    pub fn sample(&self, x_hat: f64, tau_q: f64, rng: &mut RngStream) -> f64 {
        match self.kind {
            ProposalKind::Gaussian => x_hat + tau_q * rng.std_normal(),
            ProposalKind::StudentT { nu } => {
                let t: f64 = StudentT::new(nu).map(|d| d.sample(rng)).unwrap_or(f64::NAN);
                x_hat + tau_q * t
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok_scale = match self.scale {
            ProposalScale::Fixed(v) | ProposalScale::TauMultiple(v) | ProposalScale::Laplace(v) => {
                v > 0.0 && v.is_finite()
            }
        };
        let ok_kind = match self.kind {
            ProposalKind::Gaussian => true,
            ProposalKind::StudentT { nu } => nu > 0.0 && nu.is_finite(),
        };
        if ok_scale && ok_kind {
            Ok(())
        } else {
            Err(Error::InvalidArgument(
                "proposal scale and degrees of freedom must be positive",
            ))
        }
    }
}

/// `log g(y|x) + log φ(x; 0, τ²) − log q(x|y)`.
pub fn glmm_cluster_logweight(
    c: &ClusterAtTheta,
    x: f64,
    proposal: &IsProposal,
    tau_q: f64,
) -> f64 {
    c.log_h(x) - proposal.log_q(x, c.x_hat, tau_q)
}

/// Priors: `β_k ~ N(0, 10²)`, `τ² ~ InvGamma(2, 1)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlmmPrior {
    pub beta_var: f64,
    pub tau_sq_shape: f64,
    pub tau_sq_scale: f64,
}

impl Default for GlmmPrior {
    fn default() -> Self {
        Self {
            beta_var: 100.0,
            tau_sq_shape: 2.0,
            tau_sq_scale: 1.0,
        }
    }
}

/// Random-intercept GLMM with parameter `θ = (β, log τ)`.
#[derive(Clone, Debug)]
pub struct GlmmModel {
    pub family: ExpFamilySpec,
    pub clusters: Vec<Cluster>,
    pub p: usize,
    pub proposal: IsProposal,
    pub prior: GlmmPrior,
    gh_nodes: Vec<f64>,
    gh_weights: Vec<f64>,
}

/// Quadrature order of the exact-likelihood oracle.
pub const GH_NODES: usize = 64;

impl GlmmModel {
    pub fn new(
        family: ExpFamilySpec,
        clusters: Vec<Cluster>,
        proposal: IsProposal,
    ) -> Result<Self> {
        proposal.validate()?;
        let p = clusters
            .first()
            .and_then(|c| c.covariates.first())
            .map(|r| r.len())
            .ok_or(Error::InvalidArgument(
                "need at least one cluster with one observation",
            ))?;
        for c in &clusters {
            if c.y.len() != c.covariates.len() {
                return Err(Error::DimensionMismatch {
                    expected: c.y.len(),
                    found: c.covariates.len(),
                });
            }
            if let Some(r) = c.covariates.iter().find(|r| r.len() != p) {
                return Err(Error::DimensionMismatch {
                    expected: p,
                    found: r.len(),
                });
            }
        }
        let (gh_nodes, gh_weights) = gauss_hermite(GH_NODES);
        Ok(Self {
            family,
            clusters,
            p,
            proposal,
            prior: GlmmPrior::default(),
            gh_nodes,
            gh_weights,
        })
    }

    pub fn with_prior(mut self, prior: GlmmPrior) -> Self {
        self.prior = prior;
        self
    }

    pub fn with_proposal(mut self, proposal: IsProposal) -> Self {
        self.proposal = proposal;
        self
    }

    /// Splits `θ` into `(β, τ)`.
    pub fn unpack<'a>(&self, theta: &'a [f64]) -> (&'a [f64], f64) {
        (&theta[..self.p], exp(theta[self.p]))
    }

    pub fn cluster_at(&self, theta: &[f64], t: usize) -> Result<ClusterAtTheta> {
        let (beta, tau) = self.unpack(theta);
        ClusterAtTheta::new(&self.clusters[t], beta, tau, self.family)
    }
}

impl IsModel for GlmmModel {
    fn dim(&self) -> usize {
        self.p + 1
    }

    fn num_obs(&self) -> usize {
        self.clusters.len()
    }

    fn log_prior(&self, theta: &[f64]) -> f64 {
        let (beta, tau) = self.unpack(theta);
        let lb: f64 = beta
            .iter()
            .map(|&b| normal_logpdf(b, 0.0, self.prior.beta_var))
            .sum();
        let (a, s) = (self.prior.tau_sq_shape, self.prior.tau_sq_scale);
        let t2 = tau * tau;
        // inverse-gamma on τ² plus the Jacobian of τ² = e^{2 log τ}
        let lig = a * log(s) - lgamma(a) - (a + 1.0) * log(t2) - s / t2;
        lb + lig + log(2.0 * t2)
    }

    fn obs_log_weights(
        &self,
        theta: &[f64],
        t: usize,
        rng: &mut RngStream,
        out: &mut [f64],
    ) -> Result<()> {
        let c = self.cluster_at(theta, t)?;
        let tau_q = self.proposal.tau_q(&c);
        // glmm_cluster_logweight with the normalizing constants hoisted
        let t2 = c.tau * c.tau;
        let c0 = -0.5 * log(t2) - self.proposal.log_q(c.x_hat, c.x_hat, tau_q) - 0.5 * LN_2PI;
        for w in out.iter_mut() {
            let x = self.proposal.sample(c.x_hat, tau_q, rng);
            *w = c.log_g(x) - 0.5 * x * x / t2 + c0 - self.proposal.log_q_shape(x - c.x_hat, tau_q);
        }
        Ok(())
    }

    fn exact_obs_loglik(&self, theta: &[f64], t: usize) -> Option<f64> {
        let c = self.cluster_at(theta, t).ok()?;
        Some(c.quadrature_loglik(&self.gh_nodes, &self.gh_weights))
    }
}

/// Covariate design: an intercept followed by `p − 1` standard-normal
/// columns, for `t` clusters of size `j`.
pub fn glmm_design(t: usize, j: usize, p: usize, rng: &mut RngStream) -> Vec<Vec<Vec<f64>>> {
    (0..t)
        .map(|_| {
            (0..j)
                .map(|_| {
                    let mut row = vec![1.0; p];
                    for v in row.iter_mut().skip(1) {
                        *v = rng.std_normal();
                    }
                    row
                })
                .collect()
        })
        .collect()
}

/// Draws `X_t ~ N(0, τ²)` and then every `Y_{t,j}` from the family.
pub fn glmm_simulate(
    family: ExpFamilySpec,
    design: &[Vec<Vec<f64>>],
    beta: &[f64],
    tau: f64,
    rng: &mut RngStream,
) -> Vec<Cluster> {
    design
        .iter()
        .map(|rows| {
            let x = tau * rng.std_normal();
            let y = rows
                .iter()
                .map(|c| {
                    let eta: f64 = c.iter().zip(beta).map(|(a, b)| a * b).sum::<f64>() + x;
                    family.sample(eta, rng)
                })
                .collect();
            Cluster {
                y,
                covariates: rows.clone(),
            }
        })
        .collect()
}
