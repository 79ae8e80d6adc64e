//! The experiments behind each subcommand, plus shared chain helpers.

pub mod bvm;
pub mod clt;
pub mod glmm;
pub mod lv;
pub mod toy;
pub mod tune;

use pmtune_core::kernel::{
    default_burn_in, run_chain_coords, CoordinateTraces, LimitingKernel, LimitingKernelSpec,
    PseudoMarginalKernel, PseudoMarginalTarget, RandomWalkProposal,
};
use pmtune_core::linalg::CovarianceMatrix;
use pmtune_core::tuning::{pooled_iat, BatchRule};
use pmtune_core::{Result, RngStream};
use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;
use crate::error::RunResult;
use crate::output::OutputDir;

/// A subcommand: configuration in, files out.
pub trait Experiment: ExperimentConfig + Sync {
    type Output: Send;
    fn run(&self, seed: u64) -> RunResult<Self::Output>;
    fn write(output: &Self::Output, dir: &OutputDir) -> RunResult<()>;
}

/// Batch-length rule for the IAT estimates reported by the experiments.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum IatMethod {
    /// Batches of `⌊√M⌋`.
    Sqrt,
    /// Pilot-based batch length; less biased for slowly mixing chains.
    #[default]
    Pilot,
}

impl IatMethod {
    pub fn rule(self) -> BatchRule {
        match self {
            Self::Sqrt => BatchRule::Sqrt,
            Self::Pilot => BatchRule::Pilot(1.5),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainSummary {
    pub acceptance: f64,
    pub iats: Vec<f64>,
    pub iat_sum: f64,
    pub iat_mean: f64,
}

pub fn summarize_coords(traces: &CoordinateTraces, method: IatMethod) -> Result<ChainSummary> {
    let iats = traces
        .coords
        .iter()
        .map(|c| pooled_iat(core::slice::from_ref(c), method.rule()))
        .collect::<Result<Vec<_>>>()?;
    let iat_sum: f64 = iats.iter().sum();
    Ok(ChainSummary {
        acceptance: traces.acceptance_rate(),
        iat_mean: iat_sum / iats.len() as f64,
        iat_sum,
        iats,
    })
}

/// Pseudo-marginal chain of `m` recorded steps after a burn-in of `m/10`.
pub fn run_pm<T: PseudoMarginalTarget>(
    target: T,
    ell: f64,
    base_cov: CovarianceMatrix,
    theta0: &[f64],
    m: usize,
    rng: &mut RngStream,
) -> Result<CoordinateTraces> {
    let mut kernel = PseudoMarginalKernel::new(target, RandomWalkProposal::new(ell, base_cov)?)?;
    let init = kernel.initialize(theta0, rng)?;
    Ok(run_chain_coords(init, &mut kernel, m, default_burn_in(m), rng)?.0)
}

/// Limiting chain started from its stationary law.
pub fn run_limiting(
    d: usize,
    ell: f64,
    sigma: f64,
    m: usize,
    rng: &mut RngStream,
) -> Result<CoordinateTraces> {
    let mut kernel = LimitingKernel::new(LimitingKernelSpec::new(d, ell, sigma)?)?;
    let init = kernel.stationary_init(rng);
    Ok(run_chain_coords(init, &mut kernel, m, 0, rng)?.0)
}

fn draws(traces: &CoordinateTraces) -> Vec<Vec<f64>> {
    let n = traces.coords.first().map_or(0, Vec::len);
    (0..n)
        .map(|i| traces.coords.iter().map(|c| c[i]).collect())
        .collect()
}

/// Two-stage preliminary run: `m/2` steps with `init_cov`, then `m/2` steps
/// with the covariance of the first stage. Returns the mean and covariance
/// of the second stage, falling back to the earlier covariance if a stage
/// produced a singular estimate.
pub fn pilot_moments<T: PseudoMarginalTarget>(
    target: &T,
    ell: f64,
    init_cov: CovarianceMatrix,
    theta0: &[f64],
    m: usize,
    rng: &mut RngStream,
) -> Result<(Vec<f64>, CovarianceMatrix)> {
    let half = (m / 2).max(2);
    let mut cov = init_cov;
    let mut start = theta0.to_vec();
    for _ in 0..2 {
        let tr = run_pm(target, ell, cov.clone(), &start, half, rng)?;
        let d = draws(&tr);
        let dim = start.len();
        start = (0..dim)
            .map(|j| d.iter().map(|x| x[j]).sum::<f64>() / d.len() as f64)
            .collect();
        if let Ok(c) = CovarianceMatrix::from_samples(&d) {
            cov = c;
        }
    }
    Ok((start, cov))
}
