use std::fmt;
use std::io;
use std::path::PathBuf;

/// Where in an input file a parse failure happened.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    /// 1-based line number (CSV).
    Line(usize),
    /// 0-based byte offset (BIN).
    Byte(u64),
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(l) => write!(f, "line {l}"),
            Location::Byte(b) => write!(f, "byte {b}"),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}: {location}: {message}", path.display())]
    Parse { path: PathBuf, location: Location, message: String },
    #[error("{}: not an ARSSMAT1 file", path.display())]
    BadMagic { path: PathBuf },
    #[error("labels are required but the dataset has none")]
    MissingLabels,
    #[error("count {count} out of range 1..={available}")]
    InvalidCount { count: usize, available: usize },
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("labels length {found} does not match {expected} samples")]
    LabelMismatch { expected: usize, found: usize },
    #[error("invalid noise spec: {0}")]
    InvalidNoise(&'static str),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Solver(#[from] arss_core::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
