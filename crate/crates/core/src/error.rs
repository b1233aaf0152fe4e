use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("vector sums to zero; cannot normalize")]
    AllZero,
    #[error("negative entry {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("undefined 0/0 or log-of-zero term in {0}")]
    UndefinedTerm(&'static str),
    #[error("empty input")]
    EmptyInput,
    #[error("index {index} out of range for {len} labels")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("empty label set")]
    EmptySet,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("objective became non-finite")]
    NonFiniteObjective,
    #[error("configuration error: {0}")]
    Config(String),
    #[error("vector has zero variance")]
    ZeroVariance,
    #[error("image {height}x{width} smaller than kernel size {kernel}")]
    ImageTooSmall { height: usize, width: usize, kernel: usize },
    #[error("shape mismatch in {op}: {detail}")]
    ShapeMismatch { op: &'static str, detail: String },
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
    #[error("backward requires a scalar output, got shape {0:?}")]
    NotScalarOutput(Vec<usize>),
    #[error("target sample {0} has zero norm")]
    ZeroNorm(usize),
    #[error("value {0} outside the open interval (0, 1)")]
    Domain(f64),
    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    VersionMismatch { found: u16, expected: u16 },
    #[error("malformed {what} at line {line}: {detail}")]
    Parse { what: &'static str, line: usize, detail: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}
