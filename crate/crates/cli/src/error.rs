//! Error split mirroring the exit-code contract: configuration problems are
//! the user's to fix (exit 1), everything past validation is a runtime
//! failure (exit 2).

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// The configuration could not be parsed or failed validation.
    Validation(String),
    /// Computation or output writing failed after validation passed.
    Runtime(String),
}

impl CliError {
    /// Process exit code for the contract `0 = ok, 1 = validation,
    /// 2 = runtime`.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::Runtime(msg) => write!(f, "run failed: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type Result<T> = std::result::Result<T, CliError>;
