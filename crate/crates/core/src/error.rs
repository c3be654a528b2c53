use thiserror::Error;

/// Errors raised by the filterbank toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FbError {
    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid image: {0}")]
    InvalidImage(String),

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("signal length {0} is odd; a two-channel operation needs an even length")]
    OddLength(usize),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("length {len} is not divisible by 2^{depth}")]
    Depth { len: usize, depth: u32 },

    #[error("unsupported depth {depth}: {reason}")]
    UnsupportedDepth { depth: u32, reason: String },

    #[error("depth mismatch: {left} vs {right}")]
    DepthMismatch { left: u32, right: u32 },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("incomplete subband set: {0}")]
    IncompleteSubbandSet(String),

    #[error("subband sets have mismatched provenance: {0}")]
    Provenance(String),

    #[error("filterbank `{name}` fails perfect reconstruction (time error {time_error:e}, frequency error {freq_error:e})")]
    NotPerfectReconstruction {
        name: String,
        time_error: f64,
        freq_error: f64,
    },

    #[error(
        "no complement parameters (a, b) fit filterbank `{name}` (best residual {residual:e})"
    )]
    NoComplementParams { name: String, residual: f64 },

    #[error("filterbank normalization must be {expected}, found {found}")]
    Normalization { expected: String, found: String },

    #[error("operation requires the reference Haar filterbank, found `{0}`")]
    NotHaar(String),

    #[error("filterbank `{0}` is not self-complementary")]
    NotSelfComplementary(String),

    #[error(
        "support conflict between channels {channels:?} at position {position}, subband {index}"
    )]
    SupportConflict {
        position: usize,
        index: String,
        channels: Vec<usize>,
    },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{path}: malformed file: {message}")]
    Format { path: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, FbError>;
