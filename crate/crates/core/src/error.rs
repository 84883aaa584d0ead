use thiserror::Error;

/// Errors raised by the market model, solvers and simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum MarketError {
    /// A parameter is outside its admissible range. `field` names the offending input.
    #[error("invalid {field}: {message}")]
    Validation { field: &'static str, message: String },

    /// A quantity was requested that does not exist in the given equilibrium.
    #[error("{0}")]
    Undefined(&'static str),

    #[error("numeric search failed: {0}")]
    Search(String),
}

impl MarketError {
    pub(crate) fn validation(field: &'static str, message: impl Into<String>) -> Self {
        MarketError::Validation {
            field,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, MarketError>;
