//! Configuration, experiment drivers and output writers for the `tresca` binary.

use std::path::PathBuf;

use thiserror::Error;
use tresca_core::adapt::AdaptError;
use tresca_core::contact::ContactError;
use tresca_core::estimator::EstimatorError;
use tresca_core::mesh::MeshParseError;

pub mod config;
pub mod run;
pub mod verify;
pub mod vtk;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}: {source}", .path.display())]
    Mesh { path: PathBuf, source: MeshParseError },
    #[error("solver error: {0}")]
    Solver(#[source] ContactError),
    #[error("estimator error: {0}")]
    Estimator(#[source] EstimatorError),
    #[error("adaptive loop failed after {} levels: {}", .0.history().len(), .0)]
    Adapt(#[source] AdaptError),
    #[error("{} of {total} verification checks failed", .failed)]
    Verification { failed: usize, total: usize },
    #[error("{}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl CliError {
    /// 1 config or parse, 2 solver or failed check, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Mesh { source: MeshParseError::Io(_), .. } => 3,
            CliError::Mesh { .. } => 1,
            CliError::Solver(_) | CliError::Estimator(_) | CliError::Adapt(_) | CliError::Verification { .. } => 2,
            CliError::Io { .. } => 3,
        }
    }
}
