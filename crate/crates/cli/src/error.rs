use std::io;
use std::path::Path;

use epictrl_core::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// 2 for bad input or configuration, 3 when a solver gives up, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Io { .. } => 1,
            CliError::Core(e) => match e {
                Error::Parse { .. }
                | Error::EmptyInput
                | Error::InvalidParameter(_)
                | Error::Dimension(_)
                | Error::Disconnected { .. }
                | Error::IsolatedNode { .. }
                | Error::UnknownName { .. }
                | Error::Unsupported(_) => 2,
                Error::NoConvergence { .. } | Error::Bracket { .. } => 3,
                Error::NonFinite { .. } => 1,
            },
        }
    }
}
