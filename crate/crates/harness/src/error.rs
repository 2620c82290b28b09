use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("capacity exceeded: {what} is {size}, cap is {cap}")]
    Capacity { what: String, size: f64, cap: f64 },
    #[error("cannot merge reports: {0}")]
    Mismatch(String),
    #[error("report does not match the published schema: {0}")]
    Schema(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(qdecouple_core::Error),
    #[error("{0}")]
    Invalid(String),
}

impl From<qdecouple_core::Error> for HarnessError {
    fn from(e: qdecouple_core::Error) -> Self {
        match e {
            qdecouple_core::Error::Intractable { what, size, cap } => HarnessError::Capacity {
                what: what.to_string(),
                size,
                cap,
            },
            other => HarnessError::Core(other),
        }
    }
}

impl HarnessError {
    /// Process exit code: every harness error is a usage or configuration failure.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
