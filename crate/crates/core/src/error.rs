use std::path::PathBuf;

/// Errors raised by the castwin library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("not a preferred pair: {0}")]
    NotPreferredPair(String),

    #[error("truncated: {floats} floats")]
    TruncatedIq { floats: usize },

    #[error("non-finite sample at index {index}")]
    NonFiniteSample { index: usize },

    #[error("invalid tap set: {0}")]
    InvalidTapSet(String),

    #[error("input too short: {0}")]
    InputTooShort(String),

    #[error("malformed input at row {row}: {message}")]
    Malformed { row: usize, message: String },

    #[error("invalid binary frame: {0}")]
    InvalidBinary(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("link {tx}->{rx} not present")]
    MissingLink { tx: u32, rx: u32 },

    #[error("zero-variance series")]
    ZeroVariance,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
