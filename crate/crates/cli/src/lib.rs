//! File formats, reports, the benchmark harness and the command
//! implementations behind the `relquant` binary.

pub mod bench;
pub mod commands;
pub mod config;
pub mod error;
pub mod keys;
pub mod report;
pub mod snapshot;

pub use error::{CliError, CliResult};
