use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid search space: {0}")]
    InvalidSpace(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("value {value} out of bounds for hyperparameter `{name}` [{low}, {high}]")]
    OutOfBounds {
        name: String,
        value: f64,
        low: f64,
        high: f64,
    },

    #[error("sobol sampler supports at most {max} dimensions, got {got}")]
    TooManyDimensions { max: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid plan: {0}")]
    InvalidPlan(String),

    #[error("training failed for phase {phase}, config {conf_index}, seed {seed}: {reason}")]
    Training {
        phase: usize,
        conf_index: usize,
        seed: u64,
        reason: String,
    },

    #[error("missing records: {0}")]
    MissingRecords(String),

    #[error("degenerate normalization scope: all values equal {0}")]
    DegenerateScope(f64),

    #[error("csv schema error: {0}")]
    Schema(String),

    #[error("duplicate RBF center at index {0}")]
    DuplicateCenter(usize),

    #[error("linear system is singular after jitter escalation")]
    Singular,

    #[error("kernel matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("fitting the {band} surface: {source}")]
    SurfaceFit {
        band: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("zero variance sample")]
    ZeroVariance,

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

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
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
