//! File formats, configuration, the on-disk pulse cache and the batch
//! commands behind the `vqpulse` binary.

pub mod commands;
pub mod config;
pub mod dircache;
pub mod error;
pub mod files;

pub use error::{CliError, CliResult};
