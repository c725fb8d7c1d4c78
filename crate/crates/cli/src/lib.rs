//! Experiment runner: JSON configs in, CSV and JSON artifacts out.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod error;

pub use config::{load_config, parse_config, Experiment, ExperimentConfig};
pub use error::CliError;
