use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("invalid {field}: {message}")]
    Validation { field: String, message: String },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        CliError::Validation { field: field.into(), message: message.into() }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    /// Core errors raised while checking a scenario.
    pub fn invalid(field: &str, e: darwinics::Error) -> Self {
        CliError::validation(field, e.to_string())
    }

    /// Core errors raised while running: bad input stays a validation error.
    pub fn from_run(context: &str, e: darwinics::Error) -> Self {
        match e {
            darwinics::Error::InvalidInput(m) => CliError::validation(context, m),
            other => CliError::Numeric(format!("{context}: {other}")),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse { .. } | CliError::Validation { .. } => 2,
            CliError::Numeric(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
