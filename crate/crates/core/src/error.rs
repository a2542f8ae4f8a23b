use thiserror::Error;

/// Errors produced by kernel construction, data handling, and the solver.
#[derive(Debug, Error)]
pub enum Error {
    /// A configuration value is outside its admissible range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// A data file or in-memory dataset violates the expected schema.
    #[error("invalid data: {0}")]
    Data(String),

    /// An input point lies outside the kernel's domain.
    #[error("domain violation: {0}")]
    Domain(String),

    /// A user-supplied loss description contains a piece the solver
    /// has no closed-form proximal step for.
    #[error("unsupported loss piece: {0}")]
    UnsupportedPiece(String),

    /// The ADMM iteration produced a non-finite or exploding iterate.
    #[error("solver diverged: {0}")]
    Divergence(String),

    /// A model file could not be read, parsed, or validated.
    #[error("invalid model file: {0}")]
    Model(String),

    /// Underlying I/O failure.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
