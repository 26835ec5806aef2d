//! Experiment plumbing behind the `ilqr-track` binary: TOML configs, controller runs,
//! trajectory CSVs and JSON reports.

pub mod commands;
pub mod config;
pub mod experiment;
pub mod output;
pub mod report;

use thiserror::Error;

pub use commands::{cmd_compare, cmd_path_generate, cmd_run, CommandOutcome};
pub use config::{ControllerChoice, ControllerKind, ExperimentConfig};
pub use experiment::{standard_perturbations, ControllerRun, Scenario};
pub use output::{read_trajectory_csv, write_trajectory_csv, TrajectoryTable, TRAJECTORY_CSV_HEADER};
pub use report::{CompareReport, RunReport};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("numerical failure: {0}")]
    Numeric(crate::Error),
}

impl HarnessError {
    /// Process exit code: 1 for configuration problems, 2 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Numeric(_) => 1,
            HarnessError::Io(_) => 2,
        }
    }
}

impl From<crate::Error> for HarnessError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Io(msg) => HarnessError::Io(msg),
            crate::Error::InvalidArgument(msg) => HarnessError::Config(msg),
            e @ crate::Error::NotPositiveDefinite { .. } => HarnessError::Numeric(e),
        }
    }
}

pub(crate) fn io_error(what: &std::path::Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", what.display()))
}
