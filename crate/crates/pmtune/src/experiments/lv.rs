//! Stochastic Lotka-Volterra model with a bootstrap particle filter: a
//! sweep over the number of particles.

use pmtune_core::linalg::{CovarianceMatrix, Matrix};
use pmtune_core::pf::{
    lv_experiment_row, lv_simulate_data, BpfConfig, InitialDist, LvExperiment, LvParams, LvPrior,
    LvState, LvTarget, Resampling,
};
use pmtune_core::RngStream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pilot_moments, Experiment};
use crate::config::{ExperimentConfig, Preset};
use crate::error::{RunError, RunResult};
use crate::output::{Cell, CsvRow, OutputDir};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ResamplingScheme {
    #[default]
    Multinomial,
    Systematic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LvConfig {
    /// Observations at `0, 1, …, t_max`.
    pub t_max: usize,
    pub x0: [u64; 2],
    pub beta: [f64; 3],
    pub obs_sd: f64,
    pub prior_shape: [f64; 3],
    pub prior_rate: [f64; 3],
    pub n_list: Vec<usize>,
    pub ell: f64,
    pub m: usize,
    /// Length and particle count of the preliminary run that sets the
    /// random-walk covariance.
    pub pilot_m: usize,
    pub pilot_n: usize,
    pub sigma_reps: usize,
    pub resampling: ResamplingScheme,
}

impl ExperimentConfig for LvConfig {
    const COMMAND: &'static str = "lv";

    fn preset(p: Preset) -> Self {
        let prior = LvPrior::default();
        let (t_max, n_list, m, pilot_m, sigma_reps) = match p {
            Preset::Smoke => (10, vec![50, 100], 500, 200, 20),
            Preset::Desk => (50, vec![100, 200, 300], 3_000, 1_000, 100),
            Preset::Paper => (
                50,
                vec![100, 150, 200, 225, 250, 300, 350],
                250_000,
                10_000,
                1_000,
            ),
        };
        Self {
            t_max,
            x0: [50, 100],
            beta: LvParams::REFERENCE_BETA,
            obs_sd: 10.0,
            prior_shape: prior.shape,
            prior_rate: prior.rate,
            n_list,
            ell: 2.17,
            m,
            pilot_m,
            pilot_n: 200,
            sigma_reps,
            resampling: ResamplingScheme::default(),
        }
    }

    fn validate(&self) -> RunResult<()> {
        if self.t_max == 0 {
            return Err(RunError::config("t_max must be positive"));
        }
        if self
            .beta
            .iter()
            .chain(&self.prior_shape)
            .chain(&self.prior_rate)
            .any(|v| v.is_nan() || *v <= 0.0)
        {
            return Err(RunError::config(
                "rates and prior parameters must be positive",
            ));
        }
        if !(self.obs_sd > 0.0 && self.ell > 0.0) {
            return Err(RunError::config("obs_sd and ell must be positive"));
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) || self.pilot_n == 0 {
            return Err(RunError::config("particle counts must be positive"));
        }
        if self.m < 100 || self.pilot_m < 100 || self.sigma_reps < 2 {
            return Err(RunError::config(
                "need m >= 100, pilot_m >= 100 and sigma_reps >= 2",
            ));
        }
        Ok(())
    }
}

impl LvConfig {
    fn prior(&self) -> LvPrior {
        LvPrior {
            shape: self.prior_shape,
            rate: self.prior_rate,
        }
    }

    fn init(&self) -> InitialDist {
        InitialDist::Point {
            x1: self.x0[0],
            x2: self.x0[1],
        }
    }

    fn scheme(&self) -> Resampling {
        match self.resampling {
            ResamplingScheme::Multinomial => Resampling::Multinomial,
            ResamplingScheme::Systematic => Resampling::Systematic,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LvCsvRow {
    pub particles: usize,
    pub sigma_hat: f64,
    pub acceptance: f64,
    pub iat: [f64; 3],
    /// `IAT · N`.
    pub ct: [f64; 3],
}

impl CsvRow for LvCsvRow {
    fn header() -> &'static [&'static str] {
        &[
            "particles",
            "sigma_hat",
            "acceptance",
            "iat_beta1",
            "iat_beta2",
            "iat_beta3",
            "ct_beta1",
            "ct_beta2",
            "ct_beta3",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        let mut v = vec![
            self.particles.into(),
            self.sigma_hat.into(),
            self.acceptance.into(),
        ];
        v.extend(self.iat.iter().chain(&self.ct).map(|&x| Cell::from(x)));
        v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LvSummary {
    pub observations: usize,
    pub posterior_mean: Vec<f64>,
    pub posterior_sd: Vec<f64>,
    /// Particle count minimizing `IAT · N` for each rate.
    pub n_opt: [usize; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct LvOutput {
    pub rows: Vec<LvCsvRow>,
    pub summary: LvSummary,
}

impl Experiment for LvConfig {
    type Output = LvOutput;

    fn run(&self, seed: u64) -> RunResult<LvOutput> {
        self.validate()?;
        let params = LvParams {
            beta: self.beta,
            obs_sd: self.obs_sd,
        };
        let x0 = LvState::new(self.x0[0], self.x0[1]);
        let data = lv_simulate_data(&params, x0, self.t_max, &mut RngStream::indexed(seed, &[0]))?;

        let init = CovarianceMatrix::new(Matrix::diagonal(&[
            0.05 * 0.05,
            0.0003 * 0.0003,
            0.04 * 0.04,
        ]))?;
        let pilot = LvTarget {
            data: &data,
            prior: self.prior(),
            obs_sd: self.obs_sd,
            bpf: BpfConfig {
                resampling: self.scheme(),
                ..BpfConfig::new(self.pilot_n, self.init())
            },
        };
        let mut rng = RngStream::indexed(seed, &[1]);
        let (mean, cov) =
            pilot_moments(&pilot, self.ell, init, &self.beta, self.pilot_m, &mut rng)?;

        let exp = LvExperiment {
            prior: self.prior(),
            true_beta: self.beta,
            obs_sd: self.obs_sd,
            init: self.init(),
            resampling: self.scheme(),
            ell: self.ell,
            base_cov: cov.clone(),
            m: self.m,
            sigma_reps: self.sigma_reps,
            seed: pmtune_core::rng::stream_id_from(&[seed, 2]),
        };
        let rows = self
            .n_list
            .par_iter()
            .enumerate()
            .map(|(k, &n)| lv_experiment_row(&exp, &data, n, k))
            .collect::<pmtune_core::Result<Vec<_>>>()?;
        let rows: Vec<LvCsvRow> = rows
            .into_iter()
            .map(|r| LvCsvRow {
                particles: r.particles,
                sigma_hat: r.sigma_hat,
                acceptance: r.acceptance,
                iat: r.iat,
                ct: r.ct,
            })
            .collect();
        let n_opt = [0, 1, 2].map(|i| {
            rows.iter()
                .min_by(|a, b| a.ct[i].total_cmp(&b.ct[i]))
                .map_or(0, |r| r.particles)
        });
        let summary = LvSummary {
            observations: data.len(),
            posterior_mean: mean,
            posterior_sd: (0..3).map(|i| cov.entries().get(i, i).sqrt()).collect(),
            n_opt,
        };
        Ok(LvOutput { rows, summary })
    }

    fn write(out: &LvOutput, dir: &OutputDir) -> RunResult<()> {
        dir.write_csv("lv.csv", &out.rows)?;
        dir.write_json("summary.json", &out.summary)?;
        Ok(())
    }
}
