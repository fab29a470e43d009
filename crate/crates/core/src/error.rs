use thiserror::Error;

/// Errors reported by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum CtgError {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A factorization broke down; `condition` is the best available
    /// estimate of the 1-norm condition number (infinite when singular).
    #[error("linear solve failed: {reason} (condition estimate {condition:e})")]
    Solver { reason: String, condition: f64 },

    /// Block LU pivot is too ill-conditioned; callers should reroute to the
    /// partial-fraction reconstruction.
    #[error("block tridiagonal pivot {block} ill-conditioned (estimate {condition:e})")]
    PivotBreakdown { block: usize, condition: f64 },

    #[error("state error: {0}")]
    State(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T, E = CtgError> = std::result::Result<T, E>;

impl From<std::io::Error> for CtgError {
    fn from(e: std::io::Error) -> Self {
        CtgError::Io(e.to_string())
    }
}

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(CtgError::Argument(msg.into()))
}
