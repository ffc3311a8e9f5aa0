use std::path::Path;

use relquant_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("capacity exhausted")]
    Capacity,
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("sketch error: {0}")]
    Sketch(CoreError),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// 2 for configuration, 3 for capacity exhaustion, 4 for I/O, 1 for
    /// anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Capacity => 3,
            CliError::Io { .. } => 4,
            CliError::Sketch(_) => 1,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::CapacityExhausted => CliError::Capacity,
            CoreError::InvalidParameter(m) => CliError::Config(m.to_string()),
            other => CliError::Sketch(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
