use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    /// A dense representation would exceed its size cap.
    #[error("{what} exceeds cap: {size} > {cap}")]
    CapExceeded { what: &'static str, size: usize, cap: usize },

    /// Gate-time search found no crossing of the target phase.
    #[error("no crossing of target {target} in (0, {window}]; largest phase reached {achieved_max}")]
    NotFound { target: f64, window: f64, achieved_max: f64 },

    #[error("integrator did not converge within {max_steps} steps (error estimate {error_estimate:e})")]
    NonConvergence { max_steps: usize, error_estimate: f64 },

    /// The field did not return to vacuum, so no qubit-only phase can be read off.
    #[error("invalid extraction: residual field excitation {residual:e} exceeds {limit:e}")]
    InvalidExtraction { residual: f64, limit: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
