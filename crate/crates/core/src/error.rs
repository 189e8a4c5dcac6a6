use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = QtcError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum QtcError {
    /// Input is missing a required column or field.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("validation error: {0}")]
    Validation(String),

    /// A stage artifact does not match what the caller expected
    /// (wrong stage name, stale upstream hash, unknown format version).
    #[error("versioning error: {0}")]
    Versioning(String),

    #[error("parse error in {}: row {row}: {message}", path.display())]
    Parse {
        path: PathBuf,
        row: usize,
        message: String,
    },

    /// Non-finite objective values and similar numerical aborts.
    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl QtcError {
    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        QtcError::Validation(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        QtcError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the `qtc` binary.
    pub fn exit_code(&self) -> i32 {
        match self {
            QtcError::Numerical(_) => 2,
            _ => 1,
        }
    }
}
