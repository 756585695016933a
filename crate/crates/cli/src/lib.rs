//! Experiment files and the command surface of `bertini-sieve`.

pub mod commands;
pub mod config;

pub use commands::{run_command, Command, CommandError, Options, RunReport};
pub use config::{load, parse_config, ConfigError, ErrorKind, ExperimentConfig, Setup};
