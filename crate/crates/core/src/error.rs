use thiserror::Error;

/// Errors raised across estimation, generation and graph code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: String, got: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("insufficient exceedances: {found} above threshold, need at least {required}")]
    InsufficientExceedances { found: usize, required: usize },

    #[error("conditioning set {set:?} has a singular tail dependence block")]
    SingularConditioningSet { set: Vec<usize> },

    #[error("graph contains a cycle: {cycle:?}")]
    Cyclic { cycle: Vec<usize> },

    #[error("generation failed: {0}")]
    Generation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal invariant breached: {0}")]
    Invariant(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::InvalidParameter(_)
            | Error::Dimension { .. }
            | Error::Domain(_) => 1,
            Error::InsufficientExceedances { .. }
            | Error::SingularConditioningSet { .. }
            | Error::Cyclic { .. }
            | Error::Generation(_) => 2,
            Error::Invariant(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
