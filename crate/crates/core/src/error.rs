use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("near essential spectrum: {0}")]
    NearEssentialSpectrum(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("contour failure: {0}")]
    Contour(String),
    #[error("fit failure: {0}")]
    Fit(String),
}

impl Error {
    /// Bad input (as opposed to a numerical breakdown).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParams(_) | Error::InvalidInput(_) | Error::Shape { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
