//! Configuration, orchestration and result files for the `cavarray` command.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod run;

pub use config::{parse_config, ExperimentConfig};
pub use error::{CliError, Result};
pub use output::{Manifest, OutputDir};
pub use run::{run_experiment, Comparison, RunOptions};
