use thiserror::Error;

#[derive(Clone, Debug, Error)]
pub enum Error {
    /// Inputs outside the domain of an operation.
    #[error("validation: {0}")]
    Validation(String),
    /// A numerical self-check failed.
    #[error("numerical: {0}")]
    Numerical(String),
    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Validation(msg.into()))
}
