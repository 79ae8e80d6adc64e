//! Toy Gaussian latent-variable model: the pseudo-marginal chain against
//! the limiting chain run at the measured noise level.

use pmtune_core::clt_checks::toy_for_size;
use pmtune_core::estimators::{estimate_sigma, IsTarget};
use pmtune_core::linalg::{CovarianceMatrix, Matrix};
use pmtune_core::rng::stream_id_from;
use pmtune_core::RngStream;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_limiting, run_pm, summarize_coords, Experiment, IatMethod};
use crate::config::{ExperimentConfig, Preset};
use crate::error::{RunError, RunResult};
use crate::output::{Cell, CsvRow, OutputDir};

/// One data size and the sample sizes run on it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyBlock {
    pub t: usize,
    pub n_list: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyConfig {
    pub blocks: Vec<ToyBlock>,
    pub m: usize,
    pub ell: f64,
    pub theta_bar: f64,
    pub sigma0_sq: f64,
    /// Replicate estimates behind each `σ̂`.
    pub sigma_reps: usize,
    pub iat_method: IatMethod,
}

impl ExperimentConfig for ToyConfig {
    const COMMAND: &'static str = "toy";

    fn preset(p: Preset) -> Self {
        let blocks = vec![
            ToyBlock {
                t: 20,
                n_list: vec![6, 8, 10, 12],
            },
            ToyBlock {
                t: 50,
                n_list: vec![20, 30, 40, 50],
            },
        ];
        let (m, sigma_reps, blocks) = match p {
            Preset::Smoke => (1_000, 200, blocks[..1].to_vec()),
            Preset::Desk => (250_000, 2_000, blocks),
            Preset::Paper => {
                let mut b = blocks;
                b.push(ToyBlock {
                    t: 200,
                    n_list: vec![80, 120, 160, 200],
                });
                (5_000_000, 10_000, b)
            }
        };
        Self {
            blocks,
            m,
            ell: 2.0,
            theta_bar: 0.5,
            sigma0_sq: 1e10,
            sigma_reps,
            iat_method: IatMethod::default(),
        }
    }

    fn validate(&self) -> RunResult<()> {
        if self.blocks.is_empty() {
            return Err(RunError::config(
                "at least one (t, n_list) block is required",
            ));
        }
        for b in &self.blocks {
            if b.t == 0 || b.n_list.is_empty() || b.n_list.contains(&0) {
                return Err(RunError::config(
                    "each block needs t >= 1 and a non-empty list of positive n",
                ));
            }
        }
        if self.m < 100 {
            return Err(RunError::config("m must be at least 100"));
        }
        if !(self.ell > 0.0 && self.sigma0_sq > 0.0 && self.theta_bar.is_finite()) {
            return Err(RunError::config("ell and sigma0_sq must be positive"));
        }
        if self.sigma_reps < 2 {
            return Err(RunError::config("sigma_reps must be at least 2"));
        }
        Ok(())
    }
}

/// One `(T, N)` row, mirroring the pseudo-marginal and limiting columns.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyRow {
    pub t: usize,
    pub n: usize,
    pub sigma_hat: f64,
    pub pm_iat: f64,
    pub pm_acceptance: f64,
    pub lim_iat: f64,
    pub lim_acceptance: f64,
}

impl CsvRow for ToyRow {
    fn header() -> &'static [&'static str] {
        &[
            "t",
            "n",
            "sigma_hat",
            "pm_iat",
            "pm_acceptance",
            "lim_iat",
            "lim_acceptance",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.t.into(),
            self.n.into(),
            self.sigma_hat.into(),
            self.pm_iat.into(),
            self.pm_acceptance.into(),
            self.lim_iat.into(),
            self.lim_acceptance.into(),
        ]
    }
}

impl ToyConfig {
    /// Row for `(t, n)`. Data come from `indexed(seed, [t, 0])`; the noise
    /// sd, the pseudo-marginal chain and the limiting chain use streams
    /// keyed by `(t, n)`.
    pub fn row(&self, t: usize, n: usize, seed: u64) -> RunResult<ToyRow> {
        let model = toy_for_size(self.theta_bar, self.sigma0_sq, t, seed)?;
        let (post_mean, _) = model.posterior();
        let key = [t as u64, n as u64];
        let sigma_seed = stream_id_from(&[seed, key[0], key[1], 1]);
        let sigma_hat = estimate_sigma(&model, &[post_mean], n, self.sigma_reps, sigma_seed)?;
        // random walk on the scale of the inverse Fisher information 2/T
        let base = CovarianceMatrix::new(Matrix::diagonal(&[2.0 / t as f64]))?;
        let mut rng = RngStream::indexed(seed, &[key[0], key[1], 2]);
        let pm = run_pm(
            IsTarget { model, n },
            self.ell,
            base,
            &[post_mean],
            self.m,
            &mut rng,
        )?;
        let pm = summarize_coords(&pm, self.iat_method)?;
        let mut rng = RngStream::indexed(seed, &[key[0], key[1], 3]);
        let lim = run_limiting(1, self.ell, sigma_hat, self.m, &mut rng)?;
        let lim = summarize_coords(&lim, self.iat_method)?;
        Ok(ToyRow {
            t,
            n,
            sigma_hat,
            pm_iat: pm.iat_mean,
            pm_acceptance: pm.acceptance,
            lim_iat: lim.iat_mean,
            lim_acceptance: lim.acceptance,
        })
    }
}

impl Experiment for ToyConfig {
    type Output = Vec<ToyRow>;

    fn run(&self, seed: u64) -> RunResult<Vec<ToyRow>> {
        self.validate()?;
        let units: Vec<(usize, usize)> = self
            .blocks
            .iter()
            .flat_map(|b| b.n_list.iter().map(move |&n| (b.t, n)))
            .collect();
        units
            .par_iter()
            .map(|&(t, n)| self.row(t, n, seed))
            .collect()
    }

    fn write(out: &Vec<ToyRow>, dir: &OutputDir) -> RunResult<()> {
        dir.write_csv("toy.csv", out)?;
        Ok(())
    }
}
