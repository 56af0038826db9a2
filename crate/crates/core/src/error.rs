use thiserror::Error;

/// Errors raised while constructing or evaluating models.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The (family, convolution type) pair has no reversible kernel.
    #[error("unsupported combination: {0}")]
    Unsupported(String),

    /// A hypergeometric parameter list has no nonpositive-integer numerator.
    #[error("series does not terminate: no numerator parameter is a nonpositive integer")]
    NonTerminating,

    /// A denominator parameter vanishes before the series terminates.
    #[error("denominator parameter {param} vanishes at term {term}")]
    Singularity { param: f64, term: usize },

    /// An input violates the contract of the operation (e.g. asymmetric matrix).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Dense many-body constructions are capped in size.
    #[error("lattice size {size} exceeds the cap of {cap}")]
    SizeCap { size: usize, cap: usize },

    /// Malformed recipe, family spec or exported file.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
