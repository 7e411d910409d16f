//! CLI-level error classification driving the process exit code:
//! 2 for configuration errors, 3 for numerical failures, 1 otherwise.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config content; exit code 2.
    Config(String),
    /// Truncation/regime or other numerical failure during compute; exit code 3.
    Numerical(String),
    /// Filesystem trouble; exit code 1.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }

    /// Classifies an error raised while computing (after validation).
    pub fn compute(e: sqtherm::Error) -> Self {
        CliError::Numerical(e.to_string())
    }

    /// Classifies an error raised while validating configuration.
    pub fn config(e: impl fmt::Display) -> Self {
        CliError::Config(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
