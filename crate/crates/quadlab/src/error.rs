use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("point {x} lies outside the invariant interval [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },

    #[error("parameter t = {t} is outside the admissible range")]
    Parameter { t: f64 },

    #[error("orbit left the invariant interval at step {index} (value {value})")]
    Escape { index: usize, value: f64 },

    #[error("iteration cap of {cap} steps exceeded")]
    CapExceeded { cap: u64 },

    #[error("series did not converge: {0}")]
    NoConvergence(String),

    #[error("critical orbit is not strictly preperiodic onto a repelling cycle: {0}")]
    NotPreperiodic(String),

    #[error("parameter derivative overflowed at n = {n}")]
    Overflow { n: usize },

    #[error("no root found for n = {n} on a grid of {grid} points")]
    NoRootFound { n: usize, grid: usize },

    #[error("every root for n = {n} violates the clearance {theta}")]
    ClearanceFailed { n: usize, theta: f64 },

    #[error("Newton continuation diverged: {0}")]
    NewtonDiverged(String),

    #[error("could not construct the requested object: {0}")]
    ConstructionFailed(String),

    #[error("the orbit of the critical point does not return to the inducing interval")]
    NoCentralBranch,

    #[error("method unavailable: {0}")]
    MethodUnavailable(String),

    #[error("contract violated on cell {cell}: {condition} ({detail})")]
    ContractViolation {
        cell: usize,
        condition: String,
        detail: String,
    },

    #[error("operation not supported for this family: {0}")]
    Unsupported(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
