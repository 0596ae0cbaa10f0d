use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("grid mismatch: field on (n={found_n}, r_max={found_r}) but expected (n={expected_n}, r_max={expected_r})")]
    GridMismatch {
        expected_n: usize,
        expected_r: f64,
        found_n: usize,
        found_r: f64,
    },

    #[error("singular Hankel plan for (n={n}, r_max={r_max}, xi_max={xi_max}): condition estimate {condition:.3e}")]
    SingularPlan {
        n: usize,
        r_max: f64,
        xi_max: f64,
        condition: f64,
    },

    #[error("map outside the admissible class: {0}")]
    ClassViolation(String),

    #[error("threshold violation: mass ||psi_minus||^2 = {mass} must be below 8")]
    Threshold { mass: f64 },

    #[error("fixed point failed to contract after {iterations} iterations (increments: {trace:?})")]
    NonContracting { iterations: usize, trace: Vec<f64> },

    #[error("admissibility failure: {0}")]
    Admissibility(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("non-finite field values at t = {t}")]
    NonFinite { t: f64 },

    #[error("singular denominator: min(1 - A2) = {min} below 1e-6")]
    SingularDenominator { min: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
