//! Command-line front end for `dynatomo`: config handling, subcommands and
//! report emission. The binary in `main.rs` is a thin wrapper.

pub mod commands;
pub mod config;
pub mod error;
pub mod golden;
pub mod report;

pub use error::CliError;
