use std::path::PathBuf;

use drapestack::Error as CoreError;

/// Documented process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const IO: i32 = 3;
    pub const DIVERGENCE: i32 = 4;
    pub const VALIDATION: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("config: {path}: {source}")]
    ConfigInput {
        path: PathBuf,
        #[source]
        source: CoreError,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] CoreError),

    /// A check ran to completion and failed.
    #[error("{0}")]
    Validation(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::ConfigInput { .. } => exit::CONFIG,
            CliError::Io { .. } => exit::IO,
            CliError::Core(CoreError::Io { .. }) => exit::IO,
            CliError::Core(CoreError::Divergence { .. }) => exit::DIVERGENCE,
            CliError::Core(_) | CliError::Validation(_) => exit::VALIDATION,
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
