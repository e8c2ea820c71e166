//! `mixpois` command-line driver.

pub mod commands;
pub mod config;

pub use commands::{execute, Outcome};
pub use config::{Command, Format, RunConfig, DEFAULT_SEED};
