use thiserror::Error;

/// Errors produced by the poly-attention engines and their inputs.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("invalid polynomial: {0}")]
    InvalidPolynomial(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("exponent overflow: exp({value}) is not representable")]
    Overflow { value: f64 },

    #[error("softmax denominator underflowed to zero in row {row}")]
    Underflow { row: usize },

    #[error("brute-force budget exceeded: {tuples} summand tuples > budget {budget}")]
    Budget { tuples: u128, budget: u128 },

    #[error("engine {engine} not admissible: {reason}")]
    NotAdmissible { engine: &'static str, reason: String },

    #[error("entry bound too large: radius {radius} needs polynomial degree above cap {cap}")]
    RadiusTooLarge { radius: f64, cap: usize },

    #[error("feature rank {rank} exceeds cap {cap}")]
    RankTooLarge { rank: u128, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("decode failure: {0}")]
    Decode(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
