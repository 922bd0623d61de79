use std::path::PathBuf;

/// Errors surfaced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("state {state:?} lies outside the state space")]
    InfeasibleState { state: Vec<i64> },

    #[error("dominance violated at state {state:?}: {detail}")]
    DominanceViolation { state: Vec<i64>, detail: String },

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),

    #[error("need at least {needed} uncensored samples, have {available}")]
    InsufficientSamples { needed: usize, available: usize },

    #[error("{0}")]
    Unsupported(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: malformed file: {detail}")]
    Format { path: PathBuf, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
