use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    MalformedInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Configuration(String),

    /// The mesh is too coarse for the requested scale.
    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("precondition failed: {message} (witness {witness:?})")]
    Precondition { message: String, witness: Vec<usize> },

    #[error("modulus fit failed: {0}")]
    FitFailure(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("stage `{stage}` failed: {message} (witness {witness:?})")]
    StageFailed {
        stage: String,
        message: String,
        witness: Vec<usize>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn malformed(msg: impl Into<String>) -> Self {
        Error::MalformedInput(msg.into())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<toml::de::Error> for Error {
    fn from(e: toml::de::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
