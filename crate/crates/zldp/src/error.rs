use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("resource error: {0}")]
    Resource(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("precondition unmet: {0}")]
    Precondition(String),
    #[error("internal consistency error: {0}")]
    Internal(String),
}

impl Error {
    /// Process exit code for this class of failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Resource(_) => 3,
            Error::Internal(_) => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn resource<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Resource(msg.into()))
}
