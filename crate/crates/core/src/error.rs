//! Crate error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("spacetime index {0} out of range (expected 0..=2)")]
    IndexOutOfRange(usize),

    #[error("vector field index {0} out of range (expected 1..=7)")]
    VectorFieldIndex(usize),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("ghost weight requires delta > 0, got {0}")]
    NonPositiveDelta(f64),

    #[error("unknown data profile `{0}`")]
    UnknownProfile(String),

    #[error("vector field order {requested} exceeds the supported desk-scale order {max}")]
    OrderTooLarge { requested: usize, max: usize },

    #[error("non-finite value detected at t = {t}: {what}")]
    NonFinite { t: f64, what: String },

    #[error("config parse error at line {line}: {msg}")]
    ConfigParse { line: usize, msg: String },

    #[error("invalid config: {0}")]
    ConfigInvalid(String),

    #[error("scattering accumulator disabled for this run")]
    AccumulatorDisabled,

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
