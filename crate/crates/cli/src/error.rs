//! CLI error type and the exit-code contract.
//!
//! Exit codes: 0 success, 1 configuration problem, 2 numerical failure
//! (non-convergence, sign-problem escalation), 3 capacity guard.

use std::path::PathBuf;

use pfield_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration errors:\n{}", .0.join("\n"))]
    Config(Vec<String>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Core(e) => match e {
                CoreError::InvalidSpec(_) | CoreError::NotLizorkin { .. } => 1,
                CoreError::TooLarge { .. } | CoreError::CapacityExceeded { .. } => 3,
                _ => 2,
            },
            CliError::Numerical(_) => 2,
        }
    }
}
