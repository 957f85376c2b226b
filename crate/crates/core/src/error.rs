use std::path::PathBuf;

use thiserror::Error;

/// Errors produced across the crate.
///
/// Layer indices in messages are 1-based, matching the file formats and CLI.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: String, expected: u32 },

    #[error("truncated file: {0}")]
    Truncated(String),

    #[error("dimension mismatch at layer {layer}: {message}")]
    DimensionMismatch { layer: usize, message: String },

    #[error("non-finite entry in layer {layer}: {what}")]
    NonFinite { layer: usize, what: String },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("input length {found} does not match network input dimension {expected}")]
    InputLength { expected: usize, found: usize },

    #[error("non-finite input entry at position {0}")]
    NonFiniteInput(usize),

    #[error("layer index {layer} out of range 1..={max}")]
    LayerOutOfRange { layer: usize, max: usize },

    #[error("empty layer selection")]
    EmptyLayers,

    #[error("activation graph has an empty side ({in_size}x{out_size})")]
    EmptyGraph { in_size: usize, out_size: usize },

    #[error("diagram cardinality mismatch: {0} vs {1}")]
    CardinalityMismatch(usize, usize),

    #[error("empty diagram")]
    EmptyDiagram,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("brute-force oracle limited to {limit} points per diagram, got {found}")]
    OracleTooLarge { limit: usize, found: usize },

    #[error("label {label} out of range for {num_classes} classes (sample {index})")]
    LabelOutOfRange {
        index: usize,
        label: usize,
        num_classes: usize,
    },

    #[error("classes uncovered by predicted labels: {0:?}")]
    UncoveredClasses(Vec<usize>),

    #[error("predicted class {0} is not covered by the profile")]
    UncoveredClass(usize),

    #[error("profile fingerprint {profile} does not match network fingerprint {network}")]
    FingerprintMismatch { profile: String, network: String },

    #[error("profile file has no network fingerprint")]
    MissingFingerprint,

    #[error("sample {index}: {source}")]
    Sample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix is not symmetric (|m[{row},{col}] - m[{col},{row}]| = {gap:e})")]
    NotSymmetric { row: usize, col: usize, gap: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }

    pub(crate) fn at_sample(index: usize, source: Error) -> Self {
        Error::Sample {
            index,
            source: Box::new(source),
        }
    }
}
