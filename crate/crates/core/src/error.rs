use thiserror::Error;

/// Errors raised by spline construction, solves and the greedy drivers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EpsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("basis function {index} could not be constructed: {reason}")]
    Construction { index: usize, reason: String },

    #[error("singular system: {0}")]
    SingularSystem(String),
}

impl EpsError {
    /// `true` for errors caused by the caller's input rather than by numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, EpsError::InvalidInput(_) | EpsError::Domain(_))
    }
}

pub type Result<T> = std::result::Result<T, EpsError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(EpsError::InvalidInput(msg.into()))
}
