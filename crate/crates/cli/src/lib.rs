//! Library side of the `aerialnav` command: configuration layering and the
//! generate / run / eval / plot commands.

pub mod commands;
pub mod config;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config keys or values. Exit code 1.
    #[error("{0}")]
    Usage(String),
    /// IO, missing inputs, generation failures. Exit code 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}
