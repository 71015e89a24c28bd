//! Experiment runner for the `quadsense` command-line tool.

pub mod config;
pub mod emit;
pub mod runner;

pub use config::{Mode, RunConfig, ValidatedRun};
pub use emit::{emit, parse, Format};
pub use runner::{run, RunOutcome};

/// Environment variable that overrides the worker count from a config file.
pub const WORKERS_ENV: &str = "QUADSENSE_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    /// 2 for usage and configuration errors, 3 for I/O failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
        }
    }
}
