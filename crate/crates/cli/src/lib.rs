//! Command-line front end of the dissipative toolkit: TOML run configs,
//! sweep drivers, result files and a content-addressed steady-state cache.

pub mod cache;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use cli::run;
pub use config::{ConfigError, LoadedConfig, RunConfig};
pub use error::{CliError, Result};
