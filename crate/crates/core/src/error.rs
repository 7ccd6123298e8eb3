use thiserror::Error;

use crate::pcm::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed input: {0}")]
    Parse(String),

    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },

    #[error("a comparison matrix needs at least 2 alternatives, got {0}")]
    TooSmall(usize),

    #[error("expected {expected} labels, got {got}")]
    LabelCount { expected: usize, got: usize },

    #[error("invalid comparison matrix: {}", join_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("adjacency graph is disconnected ({} components)", .components.len())]
    Disconnected { components: Vec<Vec<usize>> },

    #[error("matrix has a negative or non-finite entry at ({row}, {col})")]
    NotNonnegative { row: usize, col: usize },

    #[error(
        "Perron eigenpair did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("{index} requires a complete matrix; {missing} comparisons are missing")]
    Incomplete { index: &'static str, missing: usize },

    #[error("no comparison between alternatives {a} and {b}")]
    MissingEdge { a: usize, b: usize },

    #[error("alternative index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("more than {budget} simple paths between {source_vertex} and {target}")]
    PathBudgetExceeded {
        source_vertex: usize,
        target: usize,
        budget: usize,
    },

    #[error("{what}: {lhs:e} vs {rhs:e}")]
    NumericalMismatch {
        what: &'static str,
        lhs: f64,
        rhs: f64,
    },

    #[error("correlation undefined: {0} has zero variance")]
    DegenerateVariance(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
