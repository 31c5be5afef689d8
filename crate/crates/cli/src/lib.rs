//! Front end for the `ddmtest` binary: configuration, CSV ingestion and
//! the simulate / estimate / test / calibrate workflows.

pub mod cli;
pub mod commands;
pub mod config;
pub mod data;
pub mod error;

pub use cli::{Cli, Command};
pub use commands::{calibration, run, CalibrationSummary, Outcome};
pub use config::RunConfig;
pub use error::CliError;
