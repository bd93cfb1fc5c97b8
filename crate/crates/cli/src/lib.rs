//! Config parsing and command dispatch for the `impactlab` binary.

pub mod config;
pub mod run;

pub use config::{parse_config, ConfigBuilder, ConfigError, GridSpec, Origin, RunConfig};
pub use run::{default_output, dispatch, render, Check, CliError, Command, RunManifest, RunReport};
