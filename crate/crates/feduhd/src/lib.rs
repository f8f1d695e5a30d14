//! Std companion to `feduhd-core`: dataset files, partition manifests,
//! experiment configs, a rayon client executor, result reports and the
//! subcommands behind the `feduhd` binary.

pub mod commands;
pub mod config;
pub mod dataset_io;
mod error;
pub mod experiment;
pub mod manifest;
pub mod parallel;
pub mod report;

pub use error::{CliError, DatasetError, Result};
