use thiserror::Error;

/// Harness-level failures, mapped onto the CLI exit codes.
#[derive(Debug, Error)]
pub enum HarnessError {
    /// Bad configuration file, key, value, or CLI flag (exit code 2).
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem problem reading configs or writing results (exit code 2).
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Numerical failure inside the core library (exit code 3).
    #[error(transparent)]
    Core(#[from] cfran_core::Error),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Io(_) => 2,
            HarnessError::Core(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
