use thiserror::Error;

/// Errors produced by the analysis, simulation and optimization routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time argument must be nonnegative, got {0}")]
    NegativeTime(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid phase-type representation: {0}")]
    InvalidPhaseType(String),

    #[error("invalid absorbing chain: {0}")]
    InvalidChain(String),

    #[error("matrix is singular")]
    Singular,

    #[error("absorbing column {index} out of range (chain has {count})")]
    AbsorbingIndex { index: usize, count: usize },

    #[error("stationary solve failed: residual {0:e} exceeds tolerance")]
    Stationary(f64),

    #[error("golden-section search did not contract within {0} evaluations")]
    NonContraction(usize),

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
