//! Experiment harness for `ntkt-core`.
//!
//! Subcommands `bounds`, `build`, `verify` and `sweep` read a strict JSON
//! [`config::ExperimentConfig`], run with deterministic seeding and write CSV
//! (first line `# schema=1`) or a JSON [`commands::RunRecord`].

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;

pub use error::{CliError, Result};
