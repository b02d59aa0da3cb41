use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input record. `location` is a 1-based line number for text
    /// formats or a 1-based element index for binary PLY.
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("empty cloud")]
    EmptyCloud,

    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },

    #[error("need at least {required} points, got {actual}")]
    TooFewPoints { required: usize, actual: usize },

    #[error("radius formula out of valid range (ps = {ps})")]
    RadiusOutOfRange { ps: f64 },

    #[error("neighbour {index} coincides with the query point")]
    CoincidentNeighbour { index: usize },

    #[error("signal needs at least {required} angle pairs, got {actual}")]
    SparseSignal { required: usize, actual: usize },

    #[error("vector is not unit length (norm {norm})")]
    NotUnit { norm: f64 },

    #[error("pole lies outside the unit disk (radius {radius})")]
    PoleOutsideDisk { radius: f64 },

    #[error("degenerate point set: {0}")]
    Degenerate(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("config error: {0}")]
    Config(String),

    /// An error raised inside a named pipeline stage.
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Process exit code: 2 for configuration, 3 for input, 4 for anything
    /// that fails while the pipeline runs.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) => 2,
            Error::Stage { stage: "input", .. } => 3,
            Error::Stage { .. } => 4,
            Error::Io { .. } | Error::Parse { .. } | Error::EmptyCloud | Error::NonFinite { .. } => 3,
            _ => 4,
        }
    }

    pub(crate) fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |source| Error::Stage {
            stage,
            source: Box::new(source),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
