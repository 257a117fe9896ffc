use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),

    #[error("bad magic at byte {offset}")]
    BadMagic { offset: u64 },

    #[error("input truncated at byte {offset}")]
    Truncated { offset: u64 },

    #[error("non-finite value at byte {offset}")]
    NonFiniteValue { offset: u64 },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("label {label} out of range for {k} classes")]
    LabelOutOfRange { label: u64, k: usize },

    #[error("need at least 2 scores to rank, got {0}")]
    DegenerateLength(usize),

    #[error("shape mismatch: expected length {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },

    #[error("keep ratio {0} is outside (0, 1]")]
    InvalidKeepRatio(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("class {0} has no assigned rows")]
    EmptyClass(usize),

    #[error("index {index} does not fit below n_ref = {n_ref}")]
    IndexOverflow { index: u64, n_ref: u64 },

    #[error("indices are not strictly increasing at position {position}")]
    NonMonotoneIndices { position: u64 },

    #[error("bitstream length mismatch: header says {expected} bits, decoded {found}")]
    BitLengthMismatch { expected: u64, found: u64 },

    #[error("count mismatch: expected {expected}, found {found}")]
    CountMismatch { expected: u64, found: u64 },

    #[error("code lengths violate the Kraft inequality")]
    KraftViolation,

    #[error("invalid codeword at bit {bit_offset}")]
    InvalidCodeword { bit_offset: u64 },

    #[error("container is not in canonical form: {0}")]
    NonCanonical(&'static str),

    #[error("unsupported container version {0}")]
    UnsupportedVersion(u8),

    #[error("unknown {what} tag {tag}")]
    UnknownTag { what: &'static str, tag: u8 },

    #[error("{0} trailing bytes after container body")]
    TrailingBytes(usize),

    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },

    #[error("coordinate {value} at row {row}, column {col} is outside [0, 1]")]
    CoordinateOutOfRange { row: usize, col: usize, value: f64 },

    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },
}
