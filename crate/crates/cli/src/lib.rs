//! Experiment driver for `adapid-core`: TOML configs, named recipes, and
//! CSV / JSON / SVG outputs.

pub mod config;
pub mod output;
pub mod plot;
pub mod recipes;

use thiserror::Error;

pub use config::{ExperimentConfig, Overrides, Resolved};
pub use output::{Row, RunWriter};
pub use recipes::{run_experiment, Recipe, RECIPES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(adapid_core::Error),

    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<adapid_core::Error> for CliError {
    fn from(e: adapid_core::Error) -> Self {
        use adapid_core::Error as E;
        match e {
            E::Config(_) | E::UnknownModel(_) | E::InvalidSchedule(_) | E::InvalidMixture(_) | E::Json(_) => {
                CliError::Config(e.to_string())
            }
            E::Io(io) => CliError::Io(io.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
