use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("series error: {0}")]
    Series(String),
    #[error("numerical validation failed: {0}")]
    Validation(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("did not converge: {0}")]
    NoConvergence(String),
    #[error("cap breached: {0}")]
    CapBreached(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

impl LabError {
    /// Process exit code associated with this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::InvalidArgument(_) | LabError::Parse(_) | LabError::Io(_) => 1,
            LabError::Series(_)
            | LabError::Validation(_)
            | LabError::Singular(_)
            | LabError::NoConvergence(_) => 2,
            LabError::CapBreached(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(LabError::InvalidArgument(msg.into()))
}
