//! Experiment driver for the simulator: configuration files, single runs,
//! parameter sweeps and reference verification.

pub mod config;
pub mod run;
pub mod sweep;
pub mod verify;

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Sim(claasic::Error),

    #[error("{message} (trace written to {})", trace.display())]
    Fault { message: String, trace: PathBuf },

    #[error("divergence from the reference model: {0}")]
    Divergence(String),

    #[error("{failed} of {total} sweep points failed")]
    SweepFailures { failed: usize, total: usize },
}

impl From<claasic::Error> for CliError {
    fn from(e: claasic::Error) -> Self {
        match e {
            claasic::Error::Simulation { .. } => CliError::Sim(e),
            claasic::Error::Io(io) => CliError::Io(io),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl CliError {
    /// 1 for configuration, usage and I/O problems, 2 for simulation faults
    /// and divergences.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 1,
            CliError::Sim(_) | CliError::Fault { .. } | CliError::Divergence(_) | CliError::SweepFailures { .. } => 2,
        }
    }
}
