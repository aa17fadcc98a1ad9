//! Command-line layer of boxtdse: configuration, the basis cache and the
//! commands behind the `boxtdse` binary.

pub mod cache;
pub mod commands;
pub mod config;

use boxtdse::propagator::PropagationError;
use thiserror::Error;

/// Failure of a command, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        match e {
            config::ConfigError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<boxtdse::Error> for CliError {
    fn from(e: boxtdse::Error) -> Self {
        match e {
            boxtdse::Error::Config(_) | boxtdse::Error::Propagation(PropagationError::InvalidOptions(_)) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<PropagationError> for CliError {
    fn from(e: PropagationError) -> Self {
        boxtdse::Error::from(e).into()
    }
}

impl From<boxtdse::observables::ObservablesError> for CliError {
    fn from(e: boxtdse::observables::ObservablesError) -> Self {
        CliError::Numerical(e.to_string())
    }
}
