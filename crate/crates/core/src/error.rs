use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("ragged rows: line {line} has {found} values, expected {expected}")]
    RaggedRows {
        line: usize,
        found: usize,
        expected: usize,
    },

    #[error("non-finite value at line {line}")]
    NonFinite { line: usize },

    #[error("duplicate channel name {0:?}")]
    DuplicateChannel(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("offset before onset: event at line {line} has offset {offset_s} <= onset {onset_s}")]
    OffsetBeforeOnset {
        line: usize,
        onset_s: f64,
        offset_s: f64,
    },

    #[error("overlapping events: [{a_onset}, {a_offset}) and [{b_onset}, {b_offset})")]
    OverlappingEvents {
        a_onset: f64,
        a_offset: f64,
        b_onset: f64,
        b_offset: f64,
    },

    #[error("signal has no envelope peak (all zero)")]
    NoEnvelopePeak,

    #[error("signal of {len} samples is shorter than one frame ({frame} samples)")]
    SignalTooShort { len: usize, frame: usize },

    #[error("frame {frame} has zero total power; spectral centroid/entropy undefined")]
    ZeroPowerFrame { frame: usize },

    #[error("channel {channel} has no power in any frame")]
    SilentChannel { channel: usize },

    #[error("filterbank collapse: {0}")]
    FilterbankCollapse(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("stale cache: {0}")]
    StaleCache(String),

    #[error("numerical divergence: {0}")]
    Divergence(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("config: {0}")]
    Config(String),

    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) => 2,
            Error::Divergence(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
