use thiserror::Error;

use crate::expr::{EvalError, ExprError};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("map component {component}: {source}")]
    MapParse { component: usize, source: ExprError },

    #[error(transparent)]
    MapEval(#[from] EvalError),

    #[error("no comparable pair of distinct points")]
    NoComparablePairs,

    #[error("limit mismatch: trace ends at {terminal}, got {given}")]
    LimitMismatch { terminal: usize, given: usize },

    #[error("trace did not converge")]
    NonConvergedTrace,

    #[error("orbit entered a cycle before a step dropped below epsilon")]
    NotReachable,

    #[error("path does not join x0 to f(x0): endpoint gap {gap}")]
    EndpointMismatch { gap: f64 },

    #[error("degenerate orbit: image path {index} has zero length")]
    DegenerateOrbit { index: usize },

    #[error("no catalogue route connects the requested points")]
    NoPathKnown,

    #[error("condition (e) fails for pair ({x}, {y})")]
    ConditionEFailed { x: usize, y: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
