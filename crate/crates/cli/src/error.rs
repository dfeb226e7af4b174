use std::path::PathBuf;

use crossflux_core::{DiagnosticsError, MeshError, ModelError, SolverError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("mesh error: {0}")]
    Mesh(#[from] MeshError),
    #[error("solver error: {0}")]
    Solver(#[from] SolverError),
    #[error("structure violation: {0}")]
    Structure(String),
    #[error("convergence study: {0}")]
    Study(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Study(_) => 2,
            CliError::Mesh(_) => 3,
            CliError::Structure(_) => 5,
            CliError::Solver(e) => match e.root() {
                SolverError::StructureViolation { .. } | SolverError::Aborted(_) => 5,
                SolverError::InvalidOptions(_) | SolverError::Model(_) => 2,
                _ => 4,
            },
            CliError::Io { .. } => 1,
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Mesh(m) => CliError::Mesh(m),
            ModelError::Linear(l) => CliError::Solver(SolverError::Linear(l)),
            e => CliError::Config(e.to_string()),
        }
    }
}

impl From<DiagnosticsError> for CliError {
    fn from(e: DiagnosticsError) -> Self {
        match e {
            DiagnosticsError::Mesh(m) => CliError::Mesh(m),
            e => CliError::Structure(e.to_string()),
        }
    }
}
