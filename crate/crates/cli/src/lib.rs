//! Batch orchestration of the orchestrakit stages over directories of
//! MIDI files.

pub mod args;
pub mod commands;
pub mod config;
mod corpus;

pub use args::{Cli, Command};
pub use commands::{run, Context};
pub use config::PipelineConfig;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("input: {0}")]
    Input(String),
    #[error(transparent)]
    Processing(#[from] anyhow::Error),
}

impl CliError {
    /// Process exit status; 2 is reserved for usage errors reported by clap.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Input(_) => 5,
            CliError::Processing(_) => 6,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}
