use thiserror::Error;

/// Errors raised by the laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside its admissible range.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A field or state contains NaN or infinite entries.
    #[error("non-finite value in {context} at index {index}")]
    NonFinite { context: &'static str, index: usize },

    /// Two objects live on different grids.
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    /// The time integration produced a non-finite state.
    #[error("blow-up at t = {time} (step {step})")]
    BlowUp { time: f64, step: usize },

    /// Polynomial evaluation overflowed.
    #[error("evaluation overflow at s = {at}")]
    Overflow { at: f64 },

    /// A scan range for certification is unusable.
    #[error("invalid scan range: {0}")]
    InvalidScan(String),

    /// Constants violate a structural requirement.
    #[error("invalid constants: {0}")]
    InvalidConstants(String),

    /// A required certification did not pass.
    #[error("certification failed: {0}")]
    NotCertified(String),

    /// A requested initial profile cannot be represented on the grid.
    #[error("profile not representable: {0}")]
    NotRepresentable(String),

    /// Binary dump could not be read or written.
    #[error("io: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
