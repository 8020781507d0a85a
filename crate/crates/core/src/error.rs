use thiserror::Error;

/// Errors raised anywhere in the engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid transition matrix: {0}")]
    InvalidTransitionMatrix(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("selector out of window: {0}")]
    SelectorOutOfWindow(String),

    #[error("regime path explosion: {paths} paths exceed the limit of {limit}")]
    PathExplosion { paths: u128, limit: u128 },

    #[error("malformed life table: {0}")]
    MalformedTable(String),

    #[error("age out of range: {0}")]
    AgeOutOfRange(String),

    #[error("tilted probability out of range: {0}")]
    TiltedProbabilityOutOfRange(String),

    #[error("call option on maximum needs a positive guarantee")]
    GuaranteeZeroInCall,

    #[error("payoff is not finite on path {path}")]
    NonFinitePayoff { path: usize },

    #[error("invalid product: {0}")]
    InvalidProduct(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors that mean the user's inputs failed validation, as
    /// opposed to a failure while computing.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::NotPositiveDefinite { .. }
                | Error::DimensionMismatch(_)
                | Error::InvalidTransitionMatrix(_)
                | Error::InvalidModel(_)
                | Error::InvalidArgument(_)
                | Error::MalformedTable(_)
                | Error::InvalidProduct(_)
                | Error::Parse(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
