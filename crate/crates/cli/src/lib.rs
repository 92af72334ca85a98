//! Configuration files and subcommands of the `isac` binary.

pub mod commands;
pub mod config;
pub mod error;

pub use commands::{cmd_design, cmd_montecarlo, cmd_verify, DesignSummary, Overrides};
pub use config::{dbm_to_watts, ExperimentConfig};
pub use error::CliError;
