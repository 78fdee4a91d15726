use thiserror::Error;

/// Failure categories shared by every module of the crate.
///
/// The split mirrors how callers react: `InvalidInput` is a caller bug or a bad
/// configuration, `Regime` means the asymptotic model is outside the range where
/// its equations have a solution, `Numerical` means a solver gave up.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("inadmissible nonlinearity: {0}")]
    Inadmissible(String),

    #[error("regime failure: {0}")]
    Regime(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn regime(msg: impl Into<String>) -> Self {
        Error::Regime(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}
