use std::path::PathBuf;

/// Errors raised by the imputation pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or out-of-contract input (bad ids, shapes, parameters).
    #[error("invalid input: {0}")]
    Input(String),

    /// A data file could not be parsed.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A computation produced NaN or infinite values.
    #[error("numeric failure in {stage}: {message}")]
    Numeric { stage: String, message: String },

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn numeric(stage: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Numeric {
            stage: stage.into(),
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
