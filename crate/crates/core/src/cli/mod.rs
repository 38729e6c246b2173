//! Batch front end behind the `wforge` binary.

pub mod config;
pub mod run;

pub use config::{Command, ConfigError, RunConfig, Tolerances};
pub use run::{main_with_args, run, Check, Report, RunOutcome};
