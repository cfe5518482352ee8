use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("model mismatch: {0}")]
    ModelMismatch(String),

    #[error("sample count {requested} exceeds capacity {capacity}")]
    Capacity { requested: usize, capacity: usize },

    #[error("cannot compute a covering radius from an empty state list")]
    NoCover,

    #[error("{row} lies outside its declared region: {detail}")]
    RegionViolation { row: String, detail: String },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("insufficient samples: P = {retained} must exceed c = {decision_vars}")]
    InsufficientSamples { retained: usize, decision_vars: usize },

    #[error("geometry factor saturated: phi = {0} must lie in [0, 1)")]
    GeometrySaturation(f64),

    #[error("solver: {0}")]
    Solver(String),

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: u64, message: String },

    #[error("config: {0}")]
    Config(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn at_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.at_stage(stage))
    }
}
