use thiserror::Error;

/// Errors reported by every fallible operation in the crate.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("characteristic {0} is neither 0 nor a prime")]
    BadCharacteristic(u64),
    #[error("period {period} is not a power of the characteristic {p}")]
    NotCharPower { period: usize, p: u32 },
    #[error("hypothesis violated at pair ({0}, {1})")]
    NotSeparating(usize, usize),
    #[error("family is not closed under complement (member {0})")]
    NotClosed(usize),
    #[error("input is periodic with period {0}")]
    Periodic(usize),
    #[error("arity mismatch: expected {expected}, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("size cap exceeded: {0}")]
    Cap(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn range<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Range(msg.into()))
}
