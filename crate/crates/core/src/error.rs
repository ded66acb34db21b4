use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A black-box function produced NaN or an infinity.
    #[error("non-finite function output at input {input:?}")]
    NonFiniteOutput { input: Vec<f64> },

    #[error("rollout diverged at step {index}")]
    RolloutDiverged { index: usize },

    #[error("derivative failure at timestep {index}: {source}")]
    AtTimestep {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("unknown {kind} '{name}' (valid: {valid})")]
    Unknown {
        kind: &'static str,
        name: String,
        valid: String,
    },

    #[error("mismatched benchmark configs: {0}")]
    ConfigMismatch(String),

    #[error("io: {0}")]
    Io(String),

    #[error("format: {0}")]
    Format(String),
}

impl Error {
    pub fn at_timestep(index: usize, err: Error) -> Self {
        Error::AtTimestep {
            index,
            source: Box::new(err),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Format(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Format(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
