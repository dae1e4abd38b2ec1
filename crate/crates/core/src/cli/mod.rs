//! Command-line runner: configs, orchestration and report files.

pub mod config;
pub mod output;
pub mod run;

pub use config::{load_config, parse_config, RunConfig};
pub use run::{run, RunOptions, Subcommand};
