use thiserror::Error;

/// Library error type. The CLI maps variants onto process exit codes:
/// configuration/format/parameter problems exit 2, resource-limit hits exit 3.
/// Suite failures are not errors; they are reported in the verification report
/// and mapped to exit 1 by the CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid input format: {0}")]
    Format(String),

    #[error("empty set: {0}")]
    EmptySet(String),

    #[error("scale too fine: {0}")]
    ScaleTooFine(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Process exit code the CLI uses for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::ResourceLimit(_) => 3,
            _ => 2,
        }
    }
}
