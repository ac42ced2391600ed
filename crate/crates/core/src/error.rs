use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// A continued logarithm would jump by at least π/2; the caller should shorten its step.
    #[error("continuation step too large: no branch of log within pi/2 of the previous value")]
    StepTooLarge,

    #[error("singular point: {0}")]
    Singular(String),

    #[error("parse error at line {line}, column {column} (field `{path}`): {message}")]
    Parse {
        line: usize,
        column: usize,
        path: String,
        message: String,
    },

    #[error("invalid potential spec: {0}")]
    Validation(String),

    #[error("zero denominator in slope {p}/{q}")]
    ZeroDenominator { p: i64, q: i64 },

    #[error("singular Jacobian (condition estimate {condition:.3e})")]
    SingularJacobian { condition: f64 },

    #[error("Newton did not converge in {iterations} iterations (residual {residual:.3e})")]
    MaxIterations { iterations: usize, residual: f64 },

    #[error("Newton stalled: residual {residual:.3e} could not be decreased")]
    NoProgress { residual: f64 },

    #[error("no convergence from any seed (best residual {best_residual:.3e})")]
    NoConvergence { best_residual: f64 },

    #[error("no geometric root: every converged root is flat")]
    NoGeometricRoot,

    #[error("path obstruction: {0}")]
    PathObstruction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
