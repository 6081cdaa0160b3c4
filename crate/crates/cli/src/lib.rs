//! Pipeline commands behind the `oamspec` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod plot;

pub use error::{CliError, CliResult};
