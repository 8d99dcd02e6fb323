//! Scenario runner for the `kmsbound` command-line tool.

pub mod output;
pub mod pipeline;
pub mod scenario;

use std::path::PathBuf;

pub use output::{emit_report, parse_grid, sweep, Format, SweepParam};
pub use pipeline::{run_scenario, RunOutput, SCHEMA_VERSION};
pub use scenario::{load_scenario, parse_scenario, validate, Scenario};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid scenario at {path}: {message}")]
    Validation { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] kmsbound_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        2
    }
}
