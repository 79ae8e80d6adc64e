//! Numerical core for tuning pseudo-marginal Metropolis–Hastings.
//!
//! The crate is `no_std` and only needs `alloc`. It contains everything that
//! is pure computation: counter-based random streams, Cholesky-based Gaussian
//! utilities, the pseudo-marginal and limiting kernels, batch-means
//! diagnostics, importance-sampling and particle-filter likelihood
//! estimators, the model zoo, and the empirical asymptotics checks.
//! File formats, parallel execution and the command line live in the
//! `pmtune` crate.
#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod clt_checks;
pub mod diagnostics;
pub mod dist;
mod error;
pub mod estimators;
pub mod kernel;
pub mod linalg;
pub mod models;
pub mod pf;
pub mod quadrature;
pub mod rng;
pub mod tuning;

pub use error::{Error, Result};
pub use rng::RngStream;
