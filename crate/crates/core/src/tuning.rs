//! Grid optimization of `CT(ℓ, σ)` on the limiting chain.
//!
//! The work unit is one `(cell, replicate)` pair, evaluated by
//! [`evaluate_cell`] on its own indexed stream. [`assemble`] reduces unit
//! results in a fixed order, so a parallel driver reproduces the sequential
//! [`grid_search`] bit for bit.

use alloc::vec::Vec;
use libm::sqrt;

use crate::diagnostics::{compute_ct, default_batch_len, iat_obm};
use crate::kernel::{run_chain, run_chain_coords, LimitingKernel, LimitingKernelSpec};
use crate::{Error, Result, RngStream};

/// Optimal `(d, ℓ, σ)` rows for the limiting chain.
pub const REFERENCE_OPTIMA: [(usize, f64, f64); 9] = [
    (1, 2.05, 1.16),
    (2, 1.97, 1.21),
    (3, 2.11, 1.24),
    (5, 2.17, 1.30),
    (10, 2.20, 1.44),
    (15, 2.33, 1.50),
    (20, 2.34, 1.54),
    (30, 2.36, 1.61),
    (50, 2.41, 1.74),
];

/// Large-dimension asymptote `(ℓ∞, σ∞)`.
pub const ELL_INF: f64 = 2.56;
pub const SIGMA_INF: f64 = 1.81;

/// How the IAT of a limiting-chain run is estimated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BatchRule {
    /// `⌊√M⌋`.
    Sqrt,
    /// `⌊M^p⌋`.
    Power(f64),
    /// Pilot-based: with `τ₀` the IAT at `⌊√M⌋`, use
    /// `b = k·(τ₀²·n_pool)^{1/3}` clamped to `[√M, M/20]`, where `n_pool` is
    /// the total number of pooled draws. This is the mean-squared-error
    /// optimal order for OBM, which `√M` undershoots once the IAT is large.
    Pilot(f64),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellEstimator {
    pub batch_rule: BatchRule,
    /// Average the IAT over all coordinates of `θ`. On the isotropic target
    /// every coordinate has the IAT of `θ₁`.
    pub pool_coordinates: bool,
    /// Drive every cell of a replicate from the same stream, so neighbouring
    /// cells see correlated noise and their CT differences are sharper.
    pub common_random_numbers: bool,
}

impl CellEstimator {
    /// Plain `f = θ₁`, `⌊√M⌋` batches, one stream per cell.
    pub const PLAIN: Self = Self {
        batch_rule: BatchRule::Sqrt,
        pool_coordinates: false,
        common_random_numbers: false,
    };
}

impl Default for CellEstimator {
    fn default() -> Self {
        Self {
            batch_rule: BatchRule::Pilot(1.5),
            pool_coordinates: true,
            common_random_numbers: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub d: usize,
    pub ell_grid: Vec<f64>,
    pub sigma_grid: Vec<f64>,
    pub m: usize,
    pub replicates: usize,
    pub seed: u64,
    pub estimator: CellEstimator,
}

impl GridSpec {
    pub fn new(
        d: usize,
        ell_grid: Vec<f64>,
        sigma_grid: Vec<f64>,
        m: usize,
        replicates: usize,
        seed: u64,
    ) -> Self {
        Self {
            d,
            ell_grid,
            sigma_grid,
            m,
            replicates,
            seed,
            estimator: CellEstimator::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1"));
        }
        if self.ell_grid.is_empty() || self.sigma_grid.is_empty() {
            return Err(Error::InvalidArgument("grids must be non-empty"));
        }
        if self.ell_grid.iter().any(|&l| !(l > 0.0) || !l.is_finite())
            || self
                .sigma_grid
                .iter()
                .any(|&s| !(s > 0.0) || !s.is_finite())
        {
            return Err(Error::InvalidArgument(
                "grid values must be positive and finite",
            ));
        }
        let sorted = |g: &[f64]| g.windows(2).all(|w| w[0] < w[1]);
        if !sorted(&self.ell_grid) || !sorted(&self.sigma_grid) {
            return Err(Error::InvalidArgument("grids must be strictly increasing"));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidArgument("need at least one replicate"));
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.ell_grid.len() * self.sigma_grid.len()
    }

    /// Cells are numbered σ-major: `cell = i_sigma · |ℓ grid| + i_ell`.
    pub fn cell(&self, index: usize) -> (f64, f64) {
        let n_ell = self.ell_grid.len();
        (self.ell_grid[index % n_ell], self.sigma_grid[index / n_ell])
    }

    /// All `(cell, replicate)` work units in canonical order.
    pub fn units(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.num_cells()).flat_map(move |c| (0..self.replicates).map(move |r| (c, r)))
    }

    /// Stream for one unit.
    pub fn stream(&self, cell: usize, replicate: usize) -> RngStream {
        if self.estimator.common_random_numbers {
            RngStream::indexed(self.seed, &[u64::MAX, replicate as u64])
        } else {
            RngStream::indexed(self.seed, &[cell as u64, replicate as u64])
        }
    }
}

/// Evenly spaced grid `start, start+step, …` up to `stop` inclusive.
pub fn linspace_step(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9) as usize + 1;
    (0..n).map(|i| start + step * i as f64).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplicateResult {
    pub ct: f64,
    pub iat: f64,
    pub acceptance: f64,
}

/// Runs one limiting chain of length `m` from its stationary law and
/// returns its CT.
pub fn evaluate(
    d: usize,
    ell: f64,
    sigma: f64,
    m: usize,
    estimator: &CellEstimator,
    rng: &mut RngStream,
) -> Result<ReplicateResult> {
    let spec = LimitingKernelSpec::new(d, ell, sigma)?;
    let mut kernel = LimitingKernel::new(spec)?;
    let init = kernel.stationary_init(rng);
    let (iat, acceptance) = if estimator.pool_coordinates {
        let (tr, _) = run_chain_coords(init, &mut kernel, m, 0, rng)?;
        (
            pooled_iat(&tr.coords, estimator.batch_rule)?,
            tr.acceptance_rate(),
        )
    } else {
        let tr = run_chain(init, &mut kernel, m, 0, rng, |s| s.theta[0])?;
        let iat = pooled_iat(core::slice::from_ref(&tr.f_values), estimator.batch_rule)?;
        (iat, tr.acceptance_rate())
    };
    Ok(ReplicateResult {
        ct: compute_ct(iat, sigma)?,
        iat,
        acceptance,
    })
}

/// Mean OBM IAT over equally long traces under `rule`.
pub fn pooled_iat(traces: &[Vec<f64>], rule: BatchRule) -> Result<f64> {
    if traces.is_empty() {
        return Err(Error::InvalidArgument("need at least one trace"));
    }
    let m = traces[0].len();
    let mean_iat = |b: usize| -> Result<f64> {
        let mut t = 0.0;
        for c in traces {
            t += iat_obm(c, Some(b))?.iat;
        }
        Ok(t / traces.len() as f64)
    };
    let sqrt_m = default_batch_len(m);
    match rule {
        BatchRule::Sqrt => mean_iat(sqrt_m),
        BatchRule::Power(p) => mean_iat((libm::pow(m as f64, p) as usize).max(1)),
        BatchRule::Pilot(k) => {
            let pilot = mean_iat(sqrt_m)?;
            let n_pool = (traces.len() * m) as f64;
            let b = (k * libm::cbrt(pilot * pilot * n_pool)) as usize;
            mean_iat(b.clamp(sqrt_m, (m / 20).max(sqrt_m)))
        }
    }
}

/// Evaluates one `(cell, replicate)` unit on its stream.
pub fn evaluate_cell(spec: &GridSpec, cell: usize, replicate: usize) -> Result<ReplicateResult> {
    let (ell, sigma) = spec.cell(cell);
    let mut rng = spec.stream(cell, replicate);
    evaluate(spec.d, ell, sigma, spec.m, &spec.estimator, &mut rng)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellResult {
    pub ell: f64,
    pub sigma: f64,
    pub replicates: Vec<Result<ReplicateResult>>,
    pub ct_mean: f64,
    pub ct_sd: f64,
    pub iat_mean: f64,
    pub acceptance_mean: f64,
    /// Some replicate failed; the cell is excluded from the argmin.
    pub failed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult {
    pub spec: GridSpec,
    pub cells: Vec<CellResult>,
    pub argmin: Option<usize>,
    /// Per replicate, the cell minimizing that replicate's CT.
    pub replicate_minimizers: Vec<Option<usize>>,
}

impl GridResult {
    pub fn best(&self) -> Option<&CellResult> {
        self.argmin.map(|i| &self.cells[i])
    }

    /// Mean and sd of the per-replicate minimizers `(ℓ, σ)`.
    pub fn minimizer_spread(&self) -> Option<((f64, f64), (f64, f64))> {
        let pts: Vec<(f64, f64)> = self
            .replicate_minimizers
            .iter()
            .flatten()
            .map(|&c| (self.cells[c].ell, self.cells[c].sigma))
            .collect();
        if pts.is_empty() {
            return None;
        }
        let (ml, sl) = mean_sd(pts.iter().map(|p| p.0));
        let (ms, ss) = mean_sd(pts.iter().map(|p| p.1));
        Some(((ml, sl), (ms, ss)))
    }
}

fn mean_sd(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count() as f64;
    let m = xs.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (m, 0.0);
    }
    let v = xs.map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, sqrt(v))
}

/// Strictly-smaller comparison over cells in σ-major order gives the
/// lexicographically smallest `(σ, ℓ)` among ties.
fn argmin_by(values: impl Iterator<Item = Option<f64>>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if let Some(v) = v {
            if best.is_none_or(|(_, b)| v < b) {
                best = Some((i, v));
            }
        }
    }
    best.map(|(i, _)| i)
}

/// Reduces unit results, given in [`GridSpec::units`] order.
pub fn assemble(spec: &GridSpec, units: Vec<Result<ReplicateResult>>) -> Result<GridResult> {
    if units.len() != spec.num_cells() * spec.replicates {
        return Err(Error::DimensionMismatch {
            expected: spec.num_cells() * spec.replicates,
            found: units.len(),
        });
    }
    let mut cells = Vec::with_capacity(spec.num_cells());
    let mut it = units.into_iter();
    for c in 0..spec.num_cells() {
        let (ell, sigma) = spec.cell(c);
        let reps: Vec<Result<ReplicateResult>> = it.by_ref().take(spec.replicates).collect();
        let failed = reps.iter().any(|r| r.is_err());
        let ok: Vec<ReplicateResult> = reps
            .iter()
            .filter_map(|r| r.as_ref().ok().copied())
            .collect();
        let (ct_mean, ct_sd, iat_mean, acceptance_mean) = if ok.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
        } else {
            let (cm, cs) = mean_sd(ok.iter().map(|r| r.ct));
            let n = ok.len() as f64;
            (
                cm,
                cs,
                ok.iter().map(|r| r.iat).sum::<f64>() / n,
                ok.iter().map(|r| r.acceptance).sum::<f64>() / n,
            )
        };
        cells.push(CellResult {
            ell,
            sigma,
            replicates: reps,
            ct_mean,
            ct_sd,
            iat_mean,
            acceptance_mean,
            failed,
        });
    }
    let argmin = argmin_by(cells.iter().map(|c| (!c.failed).then_some(c.ct_mean)));
    let replicate_minimizers = (0..spec.replicates)
        .map(|r| {
            argmin_by(
                cells
                    .iter()
                    .map(|c| c.replicates[r].as_ref().ok().map(|x| x.ct)),
            )
        })
        .collect();
    Ok(GridResult {
        spec: spec.clone(),
        cells,
        argmin,
        replicate_minimizers,
    })
}

/// Sequential grid search.
pub fn grid_search(spec: &GridSpec) -> Result<GridResult> {
    spec.validate()?;
    let units = spec
        .units()
        .map(|(c, r)| evaluate_cell(spec, c, r))
        .collect();
    assemble(spec, units)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointEstimate {
    pub ct_mean: f64,
    pub ct_sd: f64,
    pub acceptance: f64,
    pub iat_mean: f64,
}

/// CT at a single `(ℓ, σ)`; a one-cell grid search.
pub fn ct_at(
    d: usize,
    ell: f64,
    sigma: f64,
    m: usize,
    replicates: usize,
    seed: u64,
) -> Result<PointEstimate> {
    ct_at_with(d, ell, sigma, m, replicates, seed, CellEstimator::default())
}

pub fn ct_at_with(
    d: usize,
    ell: f64,
    sigma: f64,
    m: usize,
    replicates: usize,
    seed: u64,
    estimator: CellEstimator,
) -> Result<PointEstimate> {
    if !(sigma > 0.0) {
        return Err(Error::ZeroSigma);
    }
    let mut spec = GridSpec::new(d, alloc::vec![ell], alloc::vec![sigma], m, replicates, seed);
    spec.estimator = estimator;
    let res = grid_search(&spec)?;
    let cell = &res.cells[0];
    if let Some(Err(e)) = cell.replicates.iter().find(|r| r.is_err()) {
        return Err(e.clone());
    }
    Ok(PointEstimate {
        ct_mean: cell.ct_mean,
        ct_sd: cell.ct_sd,
        acceptance: cell.acceptance_mean,
        iat_mean: cell.iat_mean,
    })
}

/// Recommended `(ℓ, σ)` for dimension `d`: piecewise-linear in `d` through
/// the tabulated optima, `(ℓ∞, σ∞)` beyond `d = 50`.
pub fn recommend(d: usize) -> Result<(f64, f64)> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be at least 1"));
    }
    if d > REFERENCE_OPTIMA[REFERENCE_OPTIMA.len() - 1].0 {
        return Ok((ELL_INF, SIGMA_INF));
    }
    for w in REFERENCE_OPTIMA.windows(2) {
        let (d0, l0, s0) = w[0];
        let (d1, l1, s1) = w[1];
        if d == d0 {
            return Ok((l0, s0));
        }
        if d < d1 {
            let t = (d - d0) as f64 / (d1 - d0) as f64;
            return Ok((l0 + t * (l1 - l0), s0 + t * (s1 - s0)));
        }
    }
    let (_, l, s) = REFERENCE_OPTIMA[REFERENCE_OPTIMA.len() - 1];
    Ok((l, s))
}
