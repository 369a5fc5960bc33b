//! Error type shared by every subcommand, carrying the process exit code.

use std::fmt;

/// What went wrong, split by exit code.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CliError {
    /// The request itself is malformed: bad flags, bad config, bad plan.
    /// Exit code 1; nothing was computed.
    #[error("{0}")]
    Validation(String),
    /// The request was well-formed but the computation or its output
    /// failed. Exit code 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    /// Validation failure from anything printable.
    pub fn validation(message: impl fmt::Display) -> Self {
        CliError::Validation(message.to_string())
    }

    /// Runtime failure from anything printable.
    pub fn runtime(message: impl fmt::Display) -> Self {
        CliError::Runtime(message.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {err}"))
    }
}
