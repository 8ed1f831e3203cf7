//! Library side of the `rcbf` command: configuration and scenario file
//! formats plus the command implementations, kept out of `main` so they
//! can be tested directly.

pub mod commands;
pub mod config;
mod error;
mod files;
pub mod scenario;

pub use error::{CliError, Result};
