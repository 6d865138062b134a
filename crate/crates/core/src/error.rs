use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad or missing user input: files, arguments, configuration.
    #[error("input error: {0}")]
    Input(String),

    #[error("cannot read repository {path}: {reason}")]
    Repository { path: PathBuf, reason: String },

    #[error("git {args} failed: {stderr}")]
    Git { args: String, stderr: String },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("duplicate keys: {}", .0.join(", "))]
    DuplicateKeys(Vec<String>),

    #[error("numerical failure: {0}")]
    Numeric(String),

    /// A broken internal invariant.
    #[error("internal error: {0}")]
    Internal(String),

    #[error("io error on {path}: {source}")]
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

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 1 for input errors, 2 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Input(_)
            | Error::Repository { .. }
            | Error::Schema(_)
            | Error::DuplicateKeys(_)
            | Error::Io { .. }
            | Error::Csv(_) => 1,
            Error::Git { .. } | Error::Numeric(_) | Error::Internal(_) | Error::Json(_) => 2,
        }
    }
}
