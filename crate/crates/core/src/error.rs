use thiserror::Error;

/// Errors raised by model construction, families, detectors and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid index set: {0}")]
    InvalidSet(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("correlation block is not positive definite")]
    NotPositiveDefinite,

    #[error("family has {size} members, exceeding the enumeration cap of {cap}")]
    EnumerationCap { size: String, cap: u64 },

    #[error("exact overlap law is not available for {0}; use Monte Carlo mode")]
    ExactUnavailable(&'static str),

    #[error("duplicate member in explicit family: {0}")]
    DuplicateMember(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable tag, used in CLI error JSON and by the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::InvalidSet(_) => "invalid_set",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotPositiveDefinite => "not_positive_definite",
            Error::EnumerationCap { .. } => "enumeration_cap",
            Error::ExactUnavailable(_) => "exact_unavailable",
            Error::DuplicateMember(_) => "duplicate_member",
            Error::Unsupported(_) => "unsupported",
            Error::Precondition(_) => "precondition",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
