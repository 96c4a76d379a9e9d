//! Command-line experiments for optomechanical array simulations.
//!
//! Each experiment reads an optional JSON configuration, runs on a fixed-size
//! worker pool and writes CSV tables plus a `manifest.json` with SHA-256
//! digests of every file. Outputs depend only on the configuration and the
//! seed, never on the number of threads.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod validate;

pub use commands::run;
pub use config::{load, Experiment, Flags, Level, RunConfig};
pub use error::{CliError, Result};
