use std::path::Path;

use grwflow::GrwError;

use crate::config::ConfigErrors;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigErrors),
    #[error("{0}")]
    Core(#[from] GrwError),
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("missing data: {0}")]
    MissingData(String),
    #[error("check failed: {0}")]
    CheckFailed(String),
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.display().to_string(), msg: e.to_string() }
    }

    /// 2 configuration, assumption, checkpoint, I/O and missing data;
    /// 3 space-like guard; 4 numerical blow-up; 5 failed checks.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(GrwError::NotSpacelike { .. }) => 3,
            CliError::Core(GrwError::NumericalBlowup { .. }) => 4,
            CliError::CheckFailed(_) => 5,
            _ => 2,
        }
    }
}
