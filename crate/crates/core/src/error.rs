use std::path::PathBuf;

/// Errors surfaced by the simulator, the equalizer engine and the harness.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("unsupported order {0}: expected one of 16, 32, 64, 128")]
    UnsupportedOrder(usize),

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("non-finite sample at index {index} of the {pol} polarization")]
    NonFinite { pol: &'static str, index: usize },

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("received sequence has zero energy")]
    ZeroEnergy,

    #[error("alignment failure: correlation peak {peak:.4} below 0.2")]
    AlignmentFailure { peak: f64 },

    #[error("frame too short: length {len} needs more than {needed} symbols")]
    FrameTooShort { len: usize, needed: usize },

    #[error("shape mismatch: model expects {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("architecture mismatch in block(s): {}", .0.join(", "))]
    ArchitectureMismatch(Vec<String>),

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),

    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("no source checkpoint for `{0}`: train source first")]
    MissingSource(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Structured failures while decoding a binary checkpoint.
#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CheckpointError {
    #[error("bad checkpoint magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("unexpected end of checkpoint")]
    Truncated,
    #[error("checkpoint checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum { stored: u32, computed: u32 },
    #[error("{0} trailing bytes after checkpoint payload")]
    TrailingBytes(usize),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NonFinite { .. }
            | Error::NonFiniteLoss { .. }
            | Error::AlignmentFailure { .. }
            | Error::ZeroEnergy => 3,
            _ => 2,
        }
    }
}
