use thiserror::Error;

/// Errors reported by model construction, the solvers and the data tooling.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid bound on {what} {index}: lower {lo} > upper {hi}")]
    InvalidBound {
        what: &'static str,
        index: usize,
        lo: f64,
        hi: f64,
    },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("empty lambda grid")]
    EmptyGrid,

    #[error("lambda grid must be strictly decreasing and positive")]
    InvalidGrid,

    #[error("invalid lambda anchor: {0}")]
    InvalidAnchor(String),

    #[error("power method did not produce a finite eigenvalue estimate")]
    PowerMethodDivergence,

    #[error("y is not in the column span of X; basis pursuit is infeasible")]
    InitInfeasible,

    #[error("column {0} is identically zero after sparsification")]
    DegenerateColumn(usize),

    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
