//! Configuration parsing, experiment orchestration and bit-stable CSV
//! emission for the transport solvers.

pub mod commands;
pub mod config;
pub mod csv;

pub use commands::{run_command, CliError};
pub use config::{manifest, parse_config, DataSpec, ModelChoice, RunConfig};
