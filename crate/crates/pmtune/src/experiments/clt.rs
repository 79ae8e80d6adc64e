//! Log-likelihood noise as the data size grows, with `N = ⌈γT⌉`.

use pmtune_core::clt_checks::{noise_clt_report, toy_for_size, CltRow};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Experiment;
use crate::config::{ExperimentConfig, Preset};
use crate::error::{RunError, RunResult};
use crate::output::{Cell, CsvRow, OutputDir};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CltModel {
    #[default]
    Toy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltConfig {
    pub model: CltModel,
    pub t_list: Vec<usize>,
    pub gamma: f64,
    pub reps: usize,
    /// Data-generating parameter.
    pub theta_bar: f64,
    /// Points at which the noise is evaluated.
    pub theta: Vec<f64>,
    pub sigma0_sq: f64,
}

impl ExperimentConfig for CltConfig {
    const COMMAND: &'static str = "clt";

    fn preset(p: Preset) -> Self {
        let reps = match p {
            Preset::Smoke => 200,
            Preset::Desk => 2_000,
            Preset::Paper => 10_000,
        };
        Self {
            model: CltModel::Toy,
            t_list: vec![25, 100, 400],
            gamma: 1.0,
            reps,
            theta_bar: 0.5,
            theta: vec![0.5],
            sigma0_sq: 1e10,
        }
    }

    fn validate(&self) -> RunResult<()> {
        if self.t_list.is_empty() || self.t_list.contains(&0) {
            return Err(RunError::config("t_list needs positive entries"));
        }
        if !(self.gamma > 0.0 && self.sigma0_sq > 0.0) {
            return Err(RunError::config("gamma and sigma0_sq must be positive"));
        }
        if self.reps < 2 {
            return Err(RunError::config("reps must be at least 2"));
        }
        if self.theta.is_empty() || self.theta.iter().any(|v| !v.is_finite()) {
            return Err(RunError::config("theta needs finite entries"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CltCsvRow {
    pub theta: f64,
    pub row: CltRow,
}

impl CsvRow for CltCsvRow {
    fn header() -> &'static [&'static str] {
        &[
            "theta",
            "t",
            "n",
            "reps",
            "mean_z",
            "var_z",
            "mean_plus_half_var",
            "ks",
            "stationary_mean_z",
            "stationary_dev",
            "unbiasedness_dev",
            "unbiasedness_se",
            "ess",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        let r = &self.row;
        vec![
            self.theta.into(),
            r.t.into(),
            r.n.into(),
            r.reps.into(),
            r.mean_z.into(),
            r.var_z.into(),
            r.mean_plus_half_var.into(),
            r.ks.into(),
            r.stationary_mean_z.into(),
            r.stationary_dev.into(),
            r.unbiasedness_dev.into(),
            r.unbiasedness_se.into(),
            r.ess.into(),
        ]
    }
}

impl Experiment for CltConfig {
    type Output = Vec<CltCsvRow>;

    fn run(&self, seed: u64) -> RunResult<Vec<CltCsvRow>> {
        self.validate()?;
        let units: Vec<(f64, usize)> = self
            .theta
            .iter()
            .flat_map(|&th| self.t_list.iter().map(move |&t| (th, t)))
            .collect();
        units
            .par_iter()
            .map(|&(theta, t)| {
                let build = |t| toy_for_size(self.theta_bar, self.sigma0_sq, t, seed);
                let row =
                    noise_clt_report(build, &[theta], &[t], self.gamma, self.reps, seed)?.remove(0);
                Ok(CltCsvRow { theta, row })
            })
            .collect()
    }

    fn write(out: &Vec<CltCsvRow>, dir: &OutputDir) -> RunResult<()> {
        dir.write_csv("clt.csv", out)?;
        Ok(())
    }
}
