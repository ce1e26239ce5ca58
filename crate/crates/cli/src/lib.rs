//! Config-driven front end: parses a run configuration, dispatches to the
//! solver and studies, and writes CSV/JSON artifacts with a pass/fail summary.

pub mod config;
pub mod error;
pub mod registry;
pub mod run;

pub use config::{parse_config, parse_config_with, Command, RunConfig};
pub use error::{CliError, Result};
pub use run::{run, Outcome};
