//! Error type shared by all modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Mismatched dimensions or otherwise malformed inputs.
    #[error("structural error: {0}")]
    Structure(String),
    /// Arguments outside an operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A stated precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),
    /// Exhaustive enumeration would exceed the configured cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),
    /// A kernel produced quantities inconsistent with its own bounds.
    #[error("kernel inconsistency: {0}")]
    KernelInconsistency(String),
    /// Bad configuration file or incompatible option combination.
    #[error("configuration error: {0}")]
    Config(String),
    /// An input family failed validation (H1-H3 and friends).
    #[error("validation failed: {0}")]
    Validation(String),
    /// The requested index is outside the density sets required for the construction.
    #[error("ineligible: {0}")]
    Ineligible(String),
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 capacity, 4 verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Capacity(_) => 3,
            Error::Validation(_) => 4,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
