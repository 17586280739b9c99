use emocorpus::ErrorKind;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] emocorpus::Error),

    #[error("configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Internal(String),
}

impl CliError {
    /// 0 success, 1 validation, 2 I/O, 3 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) => match e.kind() {
                ErrorKind::Validation => 1,
                ErrorKind::Io => 2,
                ErrorKind::Internal => 3,
            },
            CliError::Config(_) => 1,
            CliError::Internal(_) => 3,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
