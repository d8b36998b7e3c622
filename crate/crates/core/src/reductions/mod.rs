//! Transformations that lift counting beyond 2-DQBF: uniformization, the
//! subtraction pipeline through extended 2-DQBF, and the encoding of
//! universal first-order sentences.

mod extended;
mod fomc;
mod uniform;

pub use extended::{count_general, extended_to_2dqbf, to_extended_pair, ExtendedTwoDqbf, GeneralReport};
pub use fomc::{fomc_encode, parse_fo, structure_count, FoError, FoExpr, FoSentence, Predicate};
pub use uniform::to_uniform;

use rustc_hash::FxHashSet;
use thiserror::Error;

use crate::counter::CountError;
use crate::formula::{Dqbf, FormulaError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error("conjunct {part} mentions {count} existential variables (at most 2 allowed)")]
    NotExtended { part: usize, count: usize },
    #[error(transparent)]
    Count(#[from] CountError),
    #[error("subtraction underflow: {minuend} - {subtrahend}")]
    Underflow { minuend: String, subtrahend: String },
}

/// Hands out variable names that collide neither with each other nor
/// with the names of an input instance.
pub(crate) struct Names {
    taken: FxHashSet<String>,
}

impl Names {
    pub(crate) fn new() -> Self {
        Names {
            taken: FxHashSet::default(),
        }
    }

    pub(crate) fn of(d: &Dqbf) -> Self {
        let taken = (0..d.num_vars())
            .map(|i| d.name(crate::formula::VarId(i as u32)).to_string())
            .collect();
        Names { taken }
    }

    pub(crate) fn fresh(&mut self, base: &str) -> String {
        let mut name = base.to_string();
        while self.taken.contains(&name) {
            name.push('_');
        }
        self.taken.insert(name.clone());
        name
    }
}

/// Bits needed to index `m` items (`0` for `m <= 1`).
pub(crate) fn index_width(m: usize) -> usize {
    if m <= 1 {
        0
    } else {
        (usize::BITS - (m - 1).leading_zeros()) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths() {
        assert_eq!(index_width(1), 0);
        assert_eq!(index_width(2), 1);
        assert_eq!(index_width(3), 2);
        assert_eq!(index_width(4), 2);
        assert_eq!(index_width(9), 4);
    }
}
