use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed markup at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    #[error("table has no rows")]
    EmptyTable,

    #[error("no <table> element found")]
    NoTable,

    #[error("invalid bounding box ({x0}, {y0}, {x1}, {y1})")]
    InvalidBBox { x0: f64, y0: f64, x1: f64, y1: f64 },

    #[error("invalid table shape: {0}")]
    InvalidTable(String),

    #[error("rotation detection needs at least one token")]
    InsufficientEvidence,

    #[error("{side} {index} has no {missing}, required in {mode} matching mode")]
    ModeMismatch {
        side: &'static str,
        index: usize,
        missing: &'static str,
        mode: &'static str,
    },

    #[error("match sets describe different corpora: {0}")]
    CorpusMismatch(String),

    #[error("{rows}x{cols} matrix exceeds the exhaustive search limit of {limit}x{limit}")]
    TooLarge { rows: usize, cols: usize, limit: usize },

    #[error("{value} is outside the valid range for {name}")]
    OutOfRange { name: &'static str, value: f64 },

    #[error("line {line}: {message}")]
    Corpus { line: usize, message: String },

    #[error("{} page(s) failed validation:\n{}", .0.len(), .0.join("\n"))]
    Evaluation(Vec<String>),

    #[error("I/O error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Image(#[from] image::ImageError),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Whether the failure was caused by user input rather than by the
    /// toolkit itself. The CLI maps this onto its exit status.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Csv(_) | Error::Json(_))
    }
}
