use thiserror::Error;

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_CERTIFICATION: u8 = 2;
pub const EXIT_CHECKS: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] qmle_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    ChecksFailed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(qmle_core::Error::ConstructionFailed { .. }) => EXIT_CERTIFICATION,
            CliError::ChecksFailed(_) => EXIT_CHECKS,
            _ => EXIT_CONFIG,
        }
    }
}
