use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input sequence is empty")]
    EmptyInput,

    #[error("order {order} requires more than {available} samples")]
    OrderTooLarge { order: usize, available: usize },

    #[error("autocorrelation has no energy (r[0] = {0})")]
    ZeroEnergy(f64),

    #[error("levinson recursion became unstable at order {order} (reflection coefficient {reflection})")]
    UnstableModel { order: usize, reflection: f64 },

    #[error("invalid length {0}")]
    InvalidLength(usize),

    #[error("invalid range: a = {a} exceeds b = {b}")]
    InvalidRange { a: usize, b: usize },

    #[error("invalid frequency {0} Hz")]
    InvalidFrequency(f64),

    #[error("{bands} bands requested over only {bins} bins")]
    TooManyBands { bands: usize, bins: usize },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    ShapeMismatch { expected: usize, actual: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unsupported audio format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt header: {0}")]
    CorruptHeader(String),

    #[error("sample rate mismatch: expected {expected} Hz, got {actual} Hz")]
    SampleRateMismatch { expected: u32, actual: u32 },

    #[error("archive version {found} is not supported (expected {expected})")]
    VersionMismatch { expected: u16, found: u16 },

    #[error("checksum failure in entry {0:?}")]
    ChecksumFailure(String),

    #[error("malformed archive: {0}")]
    MalformedArchive(String),

    #[error("manifest error at line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("all {0} utterances failed")]
    AllFailed(usize),

    #[error(transparent)]
    Io(#[from] io::Error),
}
