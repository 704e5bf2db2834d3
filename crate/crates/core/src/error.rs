use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cutoff k = {k} is outside 2 < k < {upper}")]
    CutoffOutOfRange { k: u64, upper: u64 },

    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("checkpoint parse error: {0}")]
    Parse(String),

    #[error("checkpoint invariant violated at member {index}: {reason}")]
    Invariant { index: usize, reason: String },

    #[error("insufficient precision at n = {0}")]
    InsufficientPrecision(u32),

    #[error("no probable prime in the window at n = {0}")]
    EmptyWindow(usize),

    #[error("missing parent map for stage {0}; re-run with genealogy enabled")]
    MissingParents(usize),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
