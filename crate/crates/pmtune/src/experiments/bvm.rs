//! Total-variation distance between the toy posterior and its Gaussian
//! approximation as the data size grows.

use pmtune_core::clt_checks::{bvm_report, BvmRow};
use serde::{Deserialize, Serialize};

use super::Experiment;
use crate::config::{ExperimentConfig, Preset};
use crate::error::{RunError, RunResult};
use crate::output::{Cell, CsvRow, OutputDir};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BvmConfig {
    /// Prior variance; `null` means a flat prior.
    pub sigma0_sq: Option<f64>,
    pub theta_bar: f64,
    pub t_list: Vec<usize>,
}

impl ExperimentConfig for BvmConfig {
    const COMMAND: &'static str = "bvm";

    fn preset(_: Preset) -> Self {
        Self {
            sigma0_sq: Some(1.0),
            theta_bar: 0.5,
            t_list: vec![10, 30, 100, 300, 1000],
        }
    }

    fn validate(&self) -> RunResult<()> {
        if self.t_list.is_empty() || self.t_list.contains(&0) {
            return Err(RunError::config("t_list needs positive entries"));
        }
        if self.sigma0_sq.is_some_and(|v| !(v > 0.0 && v.is_finite())) {
            return Err(RunError::config("sigma0_sq must be positive and finite"));
        }
        if !self.theta_bar.is_finite() {
            return Err(RunError::config("theta_bar must be finite"));
        }
        Ok(())
    }
}

impl CsvRow for BvmRow {
    fn header() -> &'static [&'static str] {
        &["t", "theta_hat", "post_mean", "post_var", "tv"]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.t.into(),
            self.theta_hat.into(),
            self.post_mean.into(),
            self.post_var.into(),
            self.tv.into(),
        ]
    }
}

impl Experiment for BvmConfig {
    type Output = Vec<BvmRow>;

    fn run(&self, seed: u64) -> RunResult<Vec<BvmRow>> {
        self.validate()?;
        Ok(bvm_report(
            self.sigma0_sq.unwrap_or(f64::INFINITY),
            self.theta_bar,
            &self.t_list,
            seed,
        )?)
    }

    fn write(out: &Vec<BvmRow>, dir: &OutputDir) -> RunResult<()> {
        dir.write_csv("bvm.csv", out)?;
        Ok(())
    }
}
