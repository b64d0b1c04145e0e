use thiserror::Error;

use crate::funcspace::{Interval, Violation};

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {x} lies outside the domain {domain}")]
    Domain { x: f64, domain: Interval },

    #[error("value {u} lies outside the range hull {hull}")]
    Range { u: f64, hull: Interval },

    #[error("arity mismatch: expected {expected}, found {found}")]
    Arity { expected: usize, found: usize },

    #[error("invalid weights: {0}")]
    Weight(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid generator: {0}")]
    InvalidGenerator(#[from] Violation),

    #[error("cannot compose: {0}")]
    Composition(String),

    #[error("invalid problem: {0}")]
    Problem(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("LP solver failure: {0}")]
    Solver(String),

    #[error("internal inconsistency: {0}")]
    Inconsistency(String),
}

pub type Result<T> = std::result::Result<T, Error>;
