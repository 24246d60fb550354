use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("unknown {kind} `{name}` (known: {known})")]
    RegistryMiss {
        kind: &'static str,
        name: String,
        known: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed record: {message}")]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Core(#[from] contraction::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// 2 for anything wrong with the request itself, 1 for failures while running.
    pub fn exit_code(&self) -> i32 {
        use contraction::Error as E;
        match self {
            CliError::Config(_) | CliError::RegistryMiss { .. } | CliError::Record { .. } => 2,
            CliError::Core(
                E::OutOfRange { .. }
                | E::Precondition(_)
                | E::DimensionMismatch { .. }
                | E::InvalidWeights(_)
                | E::InvalidPmf(_)
                | E::UnsupportedKind { .. },
            ) => 2,
            CliError::Io { .. } | CliError::Core(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
