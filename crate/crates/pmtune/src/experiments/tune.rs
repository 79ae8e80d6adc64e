//! Grid search for the `(ℓ, σ)` minimizing the computing time of the
//! limiting chain.

use pmtune_core::tuning::{
    assemble, evaluate_cell, linspace_step, recommend, BatchRule, CellEstimator, GridResult,
    GridSpec,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Experiment;
use crate::config::{ExperimentConfig, Preset};
use crate::error::{RunError, RunResult};
use crate::output::{Cell, CsvRow, OutputDir};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CellMethod {
    /// `θ₁` only, `⌊√M⌋` batches, an independent stream per cell.
    Plain,
    /// Pilot batch length, IAT pooled over coordinates, common random
    /// numbers across cells.
    #[default]
    Pooled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuneConfig {
    /// Parameter dimension; required.
    pub d: Option<usize>,
    pub ell_min: f64,
    pub ell_max: f64,
    pub ell_step: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub sigma_step: f64,
    /// Chain length per replicate.
    pub m: usize,
    pub replicates: usize,
    pub method: CellMethod,
    /// Evaluate only `(ell, sigma)` instead of the grid.
    pub single_cell: bool,
    pub ell: Option<f64>,
    pub sigma: Option<f64>,
}

impl ExperimentConfig for TuneConfig {
    const COMMAND: &'static str = "tune";

    fn preset(p: Preset) -> Self {
        let (m, replicates, step) = match p {
            Preset::Smoke => (20_000, 1, 0.4),
            Preset::Desk => (200_000, 3, 0.1),
            Preset::Paper => (5_000_000, 10, 0.05),
        };
        Self {
            d: None,
            ell_min: 1.6,
            ell_max: 2.8,
            ell_step: 2.0 * step,
            sigma_min: 0.9,
            sigma_max: 2.0,
            sigma_step: step,
            m,
            replicates,
            method: CellMethod::Pooled,
            single_cell: false,
            ell: None,
            sigma: None,
        }
    }

    fn validate(&self) -> RunResult<()> {
        let d = self
            .d
            .ok_or_else(|| RunError::config("the dimension `d` is required"))?;
        if d == 0 {
            return Err(RunError::config("d must be at least 1"));
        }
        if self.single_cell && (self.ell.is_none() || self.sigma.is_none()) {
            return Err(RunError::config("single_cell needs both ell and sigma"));
        }
        if !self.single_cell {
            for (lo, hi, st, name) in [
                (self.ell_min, self.ell_max, self.ell_step, "ell"),
                (self.sigma_min, self.sigma_max, self.sigma_step, "sigma"),
            ] {
                if !(lo > 0.0 && hi >= lo && st > 0.0) {
                    return Err(RunError::config(format!(
                        "{name} grid needs 0 < min <= max and step > 0"
                    )));
                }
            }
        }
        self.grid_spec(0)
            .validate()
            .map_err(|e| RunError::config(e.to_string()))?;
        if self.m < 100 {
            return Err(RunError::config("m must be at least 100"));
        }
        Ok(())
    }
}

impl TuneConfig {
    pub fn estimator(&self) -> CellEstimator {
        match self.method {
            CellMethod::Plain => CellEstimator::PLAIN,
            CellMethod::Pooled => CellEstimator::default(),
        }
    }

    pub fn grid_spec(&self, seed: u64) -> GridSpec {
        let (ells, sigmas) = if self.single_cell {
            (
                vec![self.ell.unwrap_or(0.0)],
                vec![self.sigma.unwrap_or(0.0)],
            )
        } else {
            (
                linspace_step(self.ell_min, self.ell_max, self.ell_step),
                linspace_step(self.sigma_min, self.sigma_max, self.sigma_step),
            )
        };
        let mut spec = GridSpec::new(
            self.d.unwrap_or(0),
            ells,
            sigmas,
            self.m,
            self.replicates,
            seed,
        );
        spec.estimator = self.estimator();
        spec
    }
}

/// One grid cell in `grid.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct GridRow {
    pub ell: f64,
    pub sigma: f64,
    pub ct_mean: f64,
    pub ct_sd: f64,
    pub iat_mean: f64,
    pub acceptance_mean: f64,
    pub failed: bool,
}

impl CsvRow for GridRow {
    fn header() -> &'static [&'static str] {
        &[
            "ell",
            "sigma",
            "ct_mean",
            "ct_sd",
            "iat_mean",
            "acceptance_mean",
            "failed",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.ell.into(),
            self.sigma.into(),
            self.ct_mean.into(),
            self.ct_sd.into(),
            self.iat_mean.into(),
            self.acceptance_mean.into(),
            self.failed.into(),
        ]
    }
}

/// One `(cell, replicate)` unit in `replicates.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateRow {
    pub cell: usize,
    pub replicate: usize,
    pub ell: f64,
    pub sigma: f64,
    pub ct: f64,
    pub iat: f64,
    pub acceptance: f64,
    pub error: String,
}

impl CsvRow for ReplicateRow {
    fn header() -> &'static [&'static str] {
        &[
            "cell",
            "replicate",
            "ell",
            "sigma",
            "ct",
            "iat",
            "acceptance",
            "error",
        ]
    }

    fn cells(&self) -> Vec<Cell> {
        vec![
            self.cell.into(),
            self.replicate.into(),
            self.ell.into(),
            self.sigma.into(),
            self.ct.into(),
            self.iat.into(),
            self.acceptance.into(),
            self.error.as_str().into(),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuneSummary {
    pub d: usize,
    pub ell_opt: f64,
    pub sigma_opt: f64,
    pub ct_opt: f64,
    pub ct_opt_sd: f64,
    pub acceptance_opt: f64,
    pub iat_opt: f64,
    /// Mean and sd of the per-replicate minimizers.
    pub ell_opt_replicates: (f64, f64),
    pub sigma_opt_replicates: (f64, f64),
    /// Tabulated reference `(ℓ, σ)` for this dimension.
    pub reference: (f64, f64),
    pub num_cells: usize,
    pub failed_cells: usize,
    pub ell_grid: Vec<f64>,
    pub sigma_grid: Vec<f64>,
    pub m: usize,
    pub replicates: usize,
    pub method: CellMethod,
    pub batch_rule: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TuneOutput {
    pub grid: Vec<GridRow>,
    pub replicates: Vec<ReplicateRow>,
    pub summary: TuneSummary,
}

/// Evaluates every unit in parallel and reduces in canonical order.
pub fn parallel_grid_search(spec: &GridSpec) -> pmtune_core::Result<GridResult> {
    spec.validate()?;
    let units: Vec<(usize, usize)> = spec.units().collect();
    let results = units
        .par_iter()
        .map(|&(c, r)| evaluate_cell(spec, c, r))
        .collect();
    assemble(spec, results)
}

fn batch_rule_name(r: BatchRule) -> String {
    match r {
        BatchRule::Sqrt => "sqrt".into(),
        BatchRule::Power(p) => format!("power({p})"),
        BatchRule::Pilot(k) => format!("pilot({k})"),
    }
}

impl Experiment for TuneConfig {
    type Output = TuneOutput;

    fn run(&self, seed: u64) -> RunResult<TuneOutput> {
        self.validate()?;
        let spec = self.grid_spec(seed);
        let res = parallel_grid_search(&spec)?;
        let best = res
            .best()
            .ok_or(RunError::Numerical(pmtune_core::Error::DegenerateTrace))?;
        let ((ml, sl), (ms, ss)) = res
            .minimizer_spread()
            .unwrap_or(((f64::NAN, f64::NAN), (f64::NAN, f64::NAN)));
        let grid = res
            .cells
            .iter()
            .map(|c| GridRow {
                ell: c.ell,
                sigma: c.sigma,
                ct_mean: c.ct_mean,
                ct_sd: c.ct_sd,
                iat_mean: c.iat_mean,
                acceptance_mean: c.acceptance_mean,
                failed: c.failed,
            })
            .collect();
        let mut replicates = Vec::new();
        for (i, c) in res.cells.iter().enumerate() {
            for (r, rep) in c.replicates.iter().enumerate() {
                let (ct, iat, acc, err) = match rep {
                    Ok(x) => (x.ct, x.iat, x.acceptance, String::new()),
                    Err(e) => (f64::NAN, f64::NAN, f64::NAN, e.to_string()),
                };
                replicates.push(ReplicateRow {
                    cell: i,
                    replicate: r,
                    ell: c.ell,
                    sigma: c.sigma,
                    ct,
                    iat,
                    acceptance: acc,
                    error: err,
                });
            }
        }
        let d = spec.d;
        let summary = TuneSummary {
            d,
            ell_opt: best.ell,
            sigma_opt: best.sigma,
            ct_opt: best.ct_mean,
            ct_opt_sd: best.ct_sd,
            acceptance_opt: best.acceptance_mean,
            iat_opt: best.iat_mean,
            ell_opt_replicates: (ml, sl),
            sigma_opt_replicates: (ms, ss),
            reference: recommend(d)?,
            num_cells: res.cells.len(),
            failed_cells: res.cells.iter().filter(|c| c.failed).count(),
            ell_grid: spec.ell_grid.clone(),
            sigma_grid: spec.sigma_grid.clone(),
            m: spec.m,
            replicates: spec.replicates,
            method: self.method,
            batch_rule: batch_rule_name(spec.estimator.batch_rule),
        };
        Ok(TuneOutput {
            grid,
            replicates,
            summary,
        })
    }

    fn write(out: &TuneOutput, dir: &OutputDir) -> RunResult<()> {
        dir.write_csv("grid.csv", &out.grid)?;
        dir.write_csv("replicates.csv", &out.replicates)?;
        dir.write_json("summary.json", &out.summary)?;
        Ok(())
    }
}
