use std::path::PathBuf;

use crate::qp::Status;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("singular matrix: zero pivot at index {index}")]
    SingularMatrix { index: usize },

    #[error("iterative refinement stalled after {steps} steps with residual {residual:e}")]
    RefinementStalled { steps: usize, residual: f64 },

    #[error("backward KKT system is singular (residual {residual:e}); active constraints are likely redundant")]
    SingularBackwardSystem { residual: f64 },

    #[error("forward solve did not succeed: status {0:?}")]
    LayerForwardFailed(Status),

    #[error("unsupported SOCP: {0}")]
    UnsupportedSocp(String),

    #[error("external solution rejected: KKT residual {residual:e} exceeds {threshold:e}")]
    InvalidExternalSolution { residual: f64, threshold: f64 },

    #[error("zero-norm vector in cosine similarity")]
    ZeroVector,

    #[error("active set changed under perturbation of coordinate {coordinate}")]
    ActiveSetFlip { coordinate: usize },

    #[error("degenerate series: {0}")]
    DegenerateSeries(&'static str),

    #[error("insufficient history: need at least {needed} rows, got {got}")]
    InsufficientHistory { needed: usize, got: usize },

    #[error("non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
