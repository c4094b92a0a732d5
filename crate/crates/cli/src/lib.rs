//! Batch front-end for the identification pipeline: a run configuration,
//! provenance-stamped run directories, and one function per subcommand.

pub mod artifacts;
pub mod commands;
pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use commands::{Evaluation, Report, Run};
pub use config::{Overrides, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{phase}: {message}")]
    Phase { phase: String, message: String },
    #[error("{0}")]
    Artifact(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Tags a failure with the phase it happened in; configuration errors
    /// keep their own category.
    pub fn in_phase(self, phase: &str) -> Self {
        match self {
            CliError::Config(_) => self,
            CliError::Phase { phase: inner, message } => CliError::Phase {
                phase: format!("{phase}: {inner}"),
                message,
            },
            other => CliError::Phase {
                phase: phase.to_string(),
                message: other.to_string(),
            },
        }
    }

    /// 2 for configuration errors, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}
