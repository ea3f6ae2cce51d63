use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violated an operation's precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The post-selection filter removed (numerically) all of the state.
    #[error("filter annihilated the state (success probability {probability:e})")]
    FilterAnnihilated { probability: f64 },

    /// No optimizer candidate survived post-selection.
    #[error("filter optimization failed: {0}")]
    OptimizationFailed(String),

    /// Reading or writing an output file failed.
    #[error("I/O failure on {path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
