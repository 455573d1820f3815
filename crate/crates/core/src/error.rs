use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("{0} is not prime")]
    NonPrime(u64),
    #[error("input exceeds guard: {0}")]
    TooLarge(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("modulus polynomial must have degree at least 1")]
    ZeroModulus,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("{base} and {modulus} are not coprime")]
    NotCoprime { base: String, modulus: String },
    #[error("polynomial is divisible by x")]
    NotCoprimeToX,
    #[error("non-integral cycle count: {0}")]
    NonIntegralCount(String),
    #[error("not a product of (C_1 + a C_k) factors: {0}")]
    NotAProduct(String),
    #[error("matrix is not nilpotent")]
    NotNilpotent,
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn too_large(msg: impl Into<String>) -> Error {
    Error::TooLarge(msg.into())
}
