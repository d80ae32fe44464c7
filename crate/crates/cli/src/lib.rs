//! Experiment harness behind the `fraclap` binary.

pub mod config;
pub mod error;
pub mod output;
pub mod plot;
pub mod run;

pub use config::{RunConfig, SourceSpec, Theta};
pub use error::{CliError, Result};
pub use run::RunContext;
