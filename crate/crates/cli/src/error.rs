use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invariant failure: {0}")]
    Invariant(String),
    #[error("report is empty")]
    EmptyReport,
    #[error(transparent)]
    Core(#[from] noisytd_core::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// Process exit code: 2 for failed invariants, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Invariant(_) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
