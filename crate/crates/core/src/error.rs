use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("probability {0} outside the open interval (0, 1)")]
    Domain(f64),

    #[error("{x} is outside the support of {family}")]
    Support { family: String, x: f64 },

    #[error("transport derivative is singular at {0}")]
    SingularDerivative(f64),

    #[error("{0} is not applicable to this family")]
    NotApplicable(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("gradient undefined: {0}")]
    UndefinedGradient(&'static str),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("n = {n} too small: {reason}")]
    TooSmallN { n: u64, reason: String },

    #[error("not enough data: {0}")]
    InsufficientData(String),

    #[error("root finding did not converge for target {0}")]
    NoConvergence(f64),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
