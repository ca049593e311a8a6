//! Command-line front end for `daub-core`: TOML run configs, JSONL traces,
//! CSV summaries and comparison tables.

pub mod commands;
pub mod compare;
pub mod config;
pub mod error;
pub mod summary;
pub mod trace;

pub use error::{CliError, CliResult, ExitKind};
