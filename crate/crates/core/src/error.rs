//! Crate-wide error type.

/// Errors reported by the simulator.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("pilot length {tau} must equal the number of users {k}")]
    PilotLength { tau: usize, k: usize },

    #[error(
        "CSI quantization noise {q:.3e} exceeds estimate variance {gamma:.3e} at (ap {m}, ue {k})"
    )]
    CsiNoiseTooLarge { m: usize, k: usize, q: f64, gamma: f64 },

    #[error("combiner noise covariance is not positive definite for ue {ue}")]
    NotPositiveDefinite { ue: usize },

    #[error("linear solve residual {residual:.3e} exceeds tolerance {tol:.3e} for ue {ue}")]
    SolveResidual { ue: usize, residual: f64, tol: f64 },

    #[error("power optimization stalled after {iterations} iterations (objective {objective:.6e})")]
    GpNoConvergence { iterations: usize, objective: f64 },

    #[error("lower-bound power problem is infeasible: {0}")]
    GpInfeasible(String),

    #[error("operation requires a single-user scenario, got k = {k}")]
    NotSingleUser { k: usize },

    #[error("validation failed: {failures} of {total} pairings out of tolerance")]
    ValidationFailed { failures: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
