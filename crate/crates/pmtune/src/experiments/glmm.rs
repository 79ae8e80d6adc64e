//! Random-intercept GLMM on simulated data: a sweep over the number of
//! importance samples, compared with the limiting chain at the same noise.

use pmtune_core::estimators::{estimate_sigma, n_for_sigma, IsTarget};
use pmtune_core::linalg::{CovarianceMatrix, Matrix};
use pmtune_core::models::{
    glmm_design, glmm_simulate, ExpFamilySpec, GlmmModel, IsProposal, ProposalScale,
};
use pmtune_core::rng::stream_id_from;
use pmtune_core::RngStream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pilot_moments, run_limiting, run_pm, summarize_coords, Experiment, IatMethod};
use crate::config::{ExperimentConfig, Preset};
use crate::error::{RunError, RunResult};
use crate::output::{Cell, CsvRow, OutputDir};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    #[default]
    Logistic,
    Poisson,
}

impl Family {
    fn spec(self) -> ExpFamilySpec {
        match self {
            Self::Logistic => ExpFamilySpec::LOGISTIC,
            Self::Poisson => ExpFamilySpec::Poisson,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProposalFamily {
    #[default]
    Gaussian,
    T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlmmConfig {
    /// Number of clusters.
    pub t: usize,
    /// Observations per cluster.
    pub j: usize,
    /// Fixed effects, including the intercept.
    pub p: usize,
    pub family: Family,
    /// True fixed effects; defaults to an intercept of −1 and alternating
    /// ±0.25 slopes.
    pub beta: Option<Vec<f64>>,
    pub tau: f64,
    pub ell: f64,
    pub proposal: ProposalFamily,
    /// Degrees of freedom of the t proposal.
    pub nu: f64,
    /// Proposal scale as a multiple of `τ`.
    pub proposal_scale: f64,
    /// Explicit sample sizes; when absent they are chosen to hit
    /// `sigma_targets`.
    pub n_list: Option<Vec<usize>>,
    pub sigma_targets: Vec<f64>,
    /// Sample size at which the noise is first measured for calibration.
    pub n_ref: usize,
    pub pilot_m: usize,
    pub pilot_n: usize,
    pub sigma_reps: usize,
    pub m: usize,
    pub iat_method: IatMethod,
}

impl ExperimentConfig for GlmmConfig {
    const COMMAND: &'static str = "glmm";

    fn preset(p: Preset) -> Self {
        let (t, m, pilot_m, sigma_reps) = match p {
            Preset::Smoke => (40, 1_000, 1_000, 50),
            Preset::Desk => (250, 50_000, 10_000, 1_000),
            Preset::Paper => (250, 1_000_000, 10_000, 10_000),
        };
        Self {
            t,
            j: 5,
            p: 8,
            family: Family::Logistic,
            beta: None,
            tau: 1.0,
            ell: 2.2,
            proposal: ProposalFamily::Gaussian,
            nu: 5.0,
            proposal_scale: 1.0,
            n_list: None,
            sigma_targets: vec![1.0, 1.2, 1.4, 1.6, 1.8, 2.0],
            n_ref: 8,
            pilot_m,
            pilot_n: 64,
            sigma_reps,
            m,
            iat_method: IatMethod::default(),
        }
    }

    fn validate(&self) -> RunResult<()> {
        if self.t == 0 || self.j == 0 || self.p == 0 {
            return Err(RunError::config("t, j and p must be positive"));
        }
        if let Some(b) = &self.beta {
            if b.len() != self.p {
                return Err(RunError::config(format!(
                    "beta has {} entries, expected p = {}",
                    b.len(),
                    self.p
                )));
            }
        }
        if !(self.tau > 0.0 && self.ell > 0.0 && self.proposal_scale > 0.0 && self.nu > 0.0) {
            return Err(RunError::config(
                "tau, ell, nu and proposal_scale must be positive",
            ));
        }
        match &self.n_list {
            Some(l) if l.is_empty() || l.contains(&0) => {
                return Err(RunError::config("n_list needs positive entries"))
            }
            None if self.sigma_targets.is_empty()
                || self.sigma_targets.iter().any(|s| s.is_nan() || *s <= 0.0) =>
            {
                return Err(RunError::config("sigma_targets needs positive entries"))
            }
            _ => {}
        }
        if self.n_ref == 0 || self.pilot_n == 0 {
            return Err(RunError::config("n_ref and pilot_n must be positive"));
        }
        if self.sigma_reps < 2 || self.m < 100 || self.pilot_m < 100 {
            return Err(RunError::config(
                "need sigma_reps >= 2, m >= 100 and pilot_m >= 100",
            ));
        }
        Ok(())
    }
}

impl GlmmConfig {
    pub fn true_beta(&self) -> Vec<f64> {
        self.beta.clone().unwrap_or_else(|| {
            (0..self.p)
                .map(|k| match k {
                    0 => -1.0,
                    k if k % 2 == 1 => 0.25,
                    _ => -0.25,
                })
                .collect()
        })
    }

    fn is_proposal(&self) -> IsProposal {
        let scale = ProposalScale::TauMultiple(self.proposal_scale);
        match self.proposal {
            ProposalFamily::Gaussian => IsProposal::gaussian(scale),
            ProposalFamily::T => IsProposal::student_t(self.nu, scale),
        }
    }

    /// Simulated data set: design from `indexed(seed, [0])`, responses from
    /// `indexed(seed, [1])`.
    pub fn model(&self, seed: u64) -> RunResult<GlmmModel> {
        let design = glmm_design(self.t, self.j, self.p, &mut RngStream::indexed(seed, &[0]));
        let clusters = glmm_simulate(
            self.family.spec(),
            &design,
            &self.true_beta(),
            self.tau,
            &mut RngStream::indexed(seed, &[1]),
        );
        Ok(GlmmModel::new(
            self.family.spec(),
            clusters,
            self.is_proposal(),
        )?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlmmRow {
    pub n: usize,
    pub sigma_hat: f64,
    pub pm_acceptance: f64,
    pub pm_iat_sum: f64,
    pub pm_iat_avg: f64,
    /// `IAT_avg / σ̂²`.
    pub pm_ct: f64,
    pub lim_acceptance: f64,
    pub lim_iat_sum: f64,
    pub lim_iat_avg: f64,
    pub lim_ct: f64,
}

impl CsvRow for GlmmRow {
    fn header() -> &'static [&'static str] {
        &[
            "n",
            "sigma_hat",
            "pm_acceptance",
            "pm_iat_sum",
            "pm_iat_avg",
            "pm_ct",
            "lim_acceptance",
            "lim_iat_sum",
            "lim_iat_avg",
            "lim_ct",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.n.into(),
            self.sigma_hat.into(),
            self.pm_acceptance.into(),
            self.pm_iat_sum.into(),
            self.pm_iat_avg.into(),
            self.pm_ct.into(),
            self.lim_acceptance.into(),
            self.lim_iat_sum.into(),
            self.lim_iat_avg.into(),
            self.lim_ct.into(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GlmmSummary {
    pub d: usize,
    pub true_theta: Vec<f64>,
    pub theta_hat: Vec<f64>,
    /// Marginal posterior sds from the preliminary run.
    pub posterior_sd: Vec<f64>,
    pub sigma_ref: f64,
    pub n_ref: usize,
    pub n_list: Vec<usize>,
    pub sigma_hat_opt_pm: f64,
    pub sigma_hat_opt_lim: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GlmmOutput {
    pub rows: Vec<GlmmRow>,
    pub summary: GlmmSummary,
}

fn argmin_sigma(rows: &[GlmmRow], ct: impl Fn(&GlmmRow) -> f64) -> f64 {
    rows.iter()
        .filter(|r| ct(r).is_finite())
        .min_by(|a, b| ct(a).total_cmp(&ct(b)))
        .map_or(f64::NAN, |r| r.sigma_hat)
}

impl Experiment for GlmmConfig {
    type Output = GlmmOutput;

    fn run(&self, seed: u64) -> RunResult<GlmmOutput> {
        self.validate()?;
        let model = self.model(seed)?;
        let d = model.p + 1;
        let mut true_theta = self.true_beta();
        true_theta.push(self.tau.ln());

        // preliminary run at a large sample size
        let tf = self.t as f64;
        let mut init = vec![4.0 / (tf * self.j as f64); d];
        init[d - 1] = 2.0 / tf;
        let init = CovarianceMatrix::new(Matrix::diagonal(&init))?;
        let pilot_target = IsTarget {
            model: model.clone(),
            n: self.pilot_n,
        };
        let mut rng = RngStream::indexed(seed, &[2]);
        let (theta_hat, cov) = pilot_moments(
            &pilot_target,
            self.ell,
            init,
            &true_theta,
            self.pilot_m,
            &mut rng,
        )?;

        let sigma_ref = estimate_sigma(
            &model,
            &theta_hat,
            self.n_ref,
            self.sigma_reps,
            stream_id_from(&[seed, 3]),
        )?;
        let n_list = match &self.n_list {
            Some(l) => l.clone(),
            None => {
                if !sigma_ref.is_finite() {
                    return Err(RunError::Numerical(pmtune_core::Error::EstimatorFailure));
                }
                let mut l: Vec<usize> = self
                    .sigma_targets
                    .iter()
                    .map(|&s| n_for_sigma(s, sigma_ref, self.n_ref))
                    .collect();
                l.sort_unstable();
                l.dedup();
                l
            }
        };

        let rows = n_list
            .par_iter()
            .map(|&n| -> RunResult<GlmmRow> {
                let key = n as u64;
                let sigma_hat = estimate_sigma(
                    &model,
                    &theta_hat,
                    n,
                    self.sigma_reps,
                    stream_id_from(&[seed, 4, key]),
                )?;
                let target = IsTarget {
                    model: model.clone(),
                    n,
                };
                let mut rng = RngStream::indexed(seed, &[5, key]);
                let pm = summarize_coords(
                    &run_pm(target, self.ell, cov.clone(), &theta_hat, self.m, &mut rng)?,
                    self.iat_method,
                )?;
                let mut rng = RngStream::indexed(seed, &[6, key]);
                let lim = summarize_coords(
                    &run_limiting(d, self.ell, sigma_hat, self.m, &mut rng)?,
                    self.iat_method,
                )?;
                let s2 = sigma_hat * sigma_hat;
                Ok(GlmmRow {
                    n,
                    sigma_hat,
                    pm_acceptance: pm.acceptance,
                    pm_iat_sum: pm.iat_sum,
                    pm_iat_avg: pm.iat_mean,
                    pm_ct: pm.iat_mean / s2,
                    lim_acceptance: lim.acceptance,
                    lim_iat_sum: lim.iat_sum,
                    lim_iat_avg: lim.iat_mean,
                    lim_ct: lim.iat_mean / s2,
                })
            })
            .collect::<RunResult<Vec<_>>>()?;

        let summary = GlmmSummary {
            d,
            true_theta,
            posterior_sd: (0..d).map(|i| cov.entries().get(i, i).sqrt()).collect(),
            theta_hat,
            sigma_ref,
            n_ref: self.n_ref,
            sigma_hat_opt_pm: argmin_sigma(&rows, |r| r.pm_ct),
            sigma_hat_opt_lim: argmin_sigma(&rows, |r| r.lim_ct),
            n_list,
        };
        Ok(GlmmOutput { rows, summary })
    }

    fn write(out: &GlmmOutput, dir: &OutputDir) -> RunResult<()> {
        dir.write_csv("glmm.csv", &out.rows)?;
        dir.write_json("summary.json", &out.summary)?;
        Ok(())
    }
}
