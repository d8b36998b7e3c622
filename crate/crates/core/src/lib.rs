//! Exact model counting for dependency quantified Boolean formulas.

pub mod bdd;
pub mod bigcount;
pub mod counter;
pub mod expansion;
pub mod formula;
pub mod generators;
pub mod reachability;
pub mod reductions;

pub use bigcount::BigCount;
pub use formula::{Dqbf, DqbfBuilder, VarId};
