use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the engine.
///
/// Variants are grouped by what the caller can do about them: bad inputs
/// (`Format`, `Data`, `Config`, `Io`) versus broken internal contracts
/// (`Invariant`). The CLI maps the first group to exit code 2 and the
/// second to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file did not match its declared format. `location` names the byte
    /// offset or the (row, col) cell where parsing stopped.
    #[error("{path}: {location}: {message}")]
    Format { path: PathBuf, location: String, message: String },

    #[error("{0}")]
    Data(String),

    #[error("config: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("fold {fold}, stage {stage}: {source}")]
    Fold {
        fold: usize,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("internal invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// Wraps an error with the fold and pipeline stage that produced it.
    pub fn in_fold(self, fold: usize, stage: &'static str) -> Self {
        Error::Fold {
            fold,
            stage,
            source: Box::new(self),
        }
    }

    /// True when the error reflects a broken internal contract rather than
    /// bad input.
    pub fn is_internal(&self) -> bool {
        match self {
            Error::Invariant(_) => true,
            Error::Fold { source, .. } => source.is_internal(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
