use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the simulation, data and training stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric input error: {0}")]
    NumericInput(String),

    #[error("degenerate vector: L2 norm {norm:e} is below the encoding threshold")]
    DegenerateVector { norm: f64 },

    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("sequence of {len} tokens exceeds the fixed length {max}")]
    Length { len: usize, max: usize },

    #[error("training diverged: {0}")]
    Divergence(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by missing or malformed input data, as opposed
    /// to invalid configuration.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::Dataset(_)
                | Error::Io { .. }
                | Error::Length { .. }
                | Error::Lookup(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
