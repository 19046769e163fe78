//! Experiment runner behind the `prognet` binary.
//!
//! Exit codes: 0 success, 2 configuration (including unpaired t-test
//! inputs), 3 data or I/O, 4 internal numeric failure.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use prognet_core::Error as CoreError;

/// Environment variable that sets the worker count when `--workers` is absent.
pub const WORKERS_ENV: &str = "PROGNET_WORKERS";

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Output { .. } => EXIT_DATA,
            CliError::Core(e) if e.is_data_error() => EXIT_DATA,
            CliError::Core(e) if e.is_numeric_error() => EXIT_NUMERIC,
            CliError::Core(e) => match e.root() {
                CoreError::Shape(_) | CoreError::Label { .. } | CoreError::EmptyEvaluation => EXIT_NUMERIC,
                _ => EXIT_CONFIG,
            },
        }
    }
}

pub(crate) fn write_file(path: &std::path::Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, bytes).map_err(|source| CliError::Output {
        path: path.to_path_buf(),
        source,
    })
}
