//! Experiment runner for pseudo-marginal tuning: configuration, output
//! files and the `pmtune` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

pub use error::{RunError, RunResult};
