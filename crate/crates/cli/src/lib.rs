//! Configuration-driven front end for the `madm` binary: sampling runs, verification
//! suites, scaling studies and plot-ready exports.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use thiserror::Error;

pub use config::{ConfigSources, ExperimentConfig, PRESETS};
pub use verify::{run_suite, Effort, SuiteReport, Verdict, SUITES};

/// Version string of the form `v<crate version>[-g<git describe>]`.
pub const VERSION: &str = env!("MADM_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("verification failed: {0}")]
    VerifyFailed(String),
}

impl CliError {
    /// Process exit code: 2 for configuration, 3 for numerics, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) | CliError::VerifyFailed(_) => 1,
        }
    }
}

impl From<madm_core::Error> for CliError {
    fn from(e: madm_core::Error) -> Self {
        match e {
            madm_core::Error::Io(_) | madm_core::Error::Csv(_) => CliError::Io(e.to_string()),
            e if e.is_config() => CliError::Config(e.to_string()),
            e => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
