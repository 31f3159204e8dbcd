//! Crate-wide error type.

/// Errors surfaced by estimation, sampling, and I/O routines.
///
/// Numerical routines return errors for invalid *inputs*; panics are reserved
/// for programming errors such as mismatched buffer lengths inside the crate.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Matrix/vector dimensions are inconsistent with the model layout.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A matrix that must be invertible / positive definite is not.
    #[error("singular matrix: {0}")]
    Singular(String),

    /// An identification condition fails, so the requested object is not
    /// unique (e.g. two shocks share the same variance path).
    #[error("not identified: {0}")]
    NotIdentified(String),

    /// Input data are unusable (wrong length, non-finite entries, ...).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// Configuration values are out of range or inconsistent.
    #[error("invalid config: {0}")]
    InvalidConfig(String),

    /// An iterative scheme failed to converge within its budget.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// Underlying file or stream failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed serialized payload (artifact header, config document, ...).
    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),

    /// Artifact bytes do not follow the documented layout.
    #[error("malformed artifact: {0}")]
    MalformedArtifact(String),
}

pub type Result<T> = std::result::Result<T, Error>;
