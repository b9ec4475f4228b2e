//! Library side of the `htl` command: configuration handling and dispatch.

pub mod config;
pub mod run;

pub use config::{parse_config, parse_document, ConfigError, StudyConfig, StudyName};
pub use run::{resolve, run, Failure, Outcome, Overrides};
