//! Model counting for 2-DQBF.

pub mod branching;
pub mod candidates;
pub mod component;
mod explicit;
pub mod oracle;
mod pipeline;
pub mod support;

use thiserror::Error;

use crate::bdd::{BddAbort, BddError};
use crate::bigcount::BigCountError;
use crate::formula::FormulaError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CountError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("budget exceeded: {what} needs {needed}, limit {limit}")]
    Budget {
        what: String,
        needed: String,
        limit: String,
    },
    #[error(transparent)]
    Abort(#[from] BddAbort),
    #[error(transparent)]
    Diagram(#[from] BddError),
    #[error(transparent)]
    Arithmetic(#[from] BigCountError),
    #[error("internal inconsistency: {0}")]
    InternalInconsistency(String),
    #[error(transparent)]
    Reduction(Box<crate::reductions::ReductionError>),
}

pub use pipeline::{
    count, ComponentReport, CountOptions, CountReport, ExpansionReport, Method, ReductionReport, Strategy,
};
