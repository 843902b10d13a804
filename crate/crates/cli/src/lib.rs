//! Reproducible scenario runner: `evolve`, `verify` and `probe` over a flat
//! `key = value` config, writing CSV files with a config-hash header.

pub mod config;
pub mod evolve;
pub mod oracle;
pub mod output;
pub mod probe;
pub mod verify;

pub use config::ScenarioConfig;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("numeric: {0}")]
    Numeric(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for config problems, 3 for numeric failures and output errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
        }
    }
}

/// Library errors caused by the scenario itself are config errors.
impl From<semilab::Error> for CliError {
    fn from(e: semilab::Error) -> Self {
        use semilab::Error::*;
        match e {
            InvalidGrid(_)
            | GridMismatch { .. }
            | NotHermitian { .. }
            | NotDensity(_)
            | InvalidTime { .. }
            | InvalidParameter(_)
            | BoundaryNonzero(_)
            | Snapshot { .. } => CliError::Config(e.to_string()),
            other => CliError::Numeric(other.to_string()),
        }
    }
}
