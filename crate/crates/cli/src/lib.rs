//! Command-line front end: single-file compression, checkpoint chains,
//! analysis tables and benchmarks.

pub mod args;
pub mod chain;
pub mod commands;
pub mod error;

pub use args::Cli;
pub use commands::run;
pub use error::{exit, CliError, CliResult};
