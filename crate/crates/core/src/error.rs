use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(&'static str),

    /// The likelihood estimator produced NaN. This is a model bug, not a
    /// zero estimate.
    #[error("likelihood estimator returned NaN")]
    EstimatorFailure,

    #[error("could not obtain a finite likelihood estimate after {attempts} attempts")]
    InitializationFailed { attempts: usize },

    #[error("trace is constant; sample variance is zero")]
    DegenerateTrace,

    #[error("trace of length {len} is too short for batch length {batch_len}")]
    TraceTooShort { len: usize, batch_len: usize },

    #[error("noise standard deviation must be positive for the computing-time criterion")]
    ZeroSigma,

    #[error("mode search did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },

    /// The requested importance-weight moment may be infinite.
    #[error("moment condition violated: tau_q^2 = {tau_q_sq} <= {threshold}")]
    ConditionViolated { tau_q_sq: f64, threshold: f64 },

    #[error("Gillespie event budget of {limit} exceeded")]
    BudgetExceeded { limit: u64 },
}
