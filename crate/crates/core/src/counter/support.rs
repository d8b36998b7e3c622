//! Support cells: the expansion variables that occur in some clause.

use num_bigint::BigUint;
use num_traits::One;
use serde::Serialize;

use super::CountError;
use crate::bdd::{Bdd, Manager};
use crate::reachability::{Implication, Slot};

/// `S_1`, `S_2` and the non-support exponent `m`.
#[derive(Debug, Clone)]
pub struct SupportSets {
    /// `S_i` over the diagram variables of z̄_i.
    pub sets: [Bdd; 2],
    pub sizes: [BigUint; 2],
    /// `(2^{|z̄_1|} − |S_1|) + (2^{|z̄_2|} − |S_2|)`
    pub nonsupport_exponent: BigUint,
    /// Literals of support cells, over `Cur`.
    pub literals: Bdd,
}

/// Serializable tallies of [`SupportSets`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SupportReport {
    pub s1: String,
    pub s2: String,
    pub nonsupport_exponent: String,
}

impl SupportSets {
    pub fn report(&self) -> SupportReport {
        SupportReport {
            s1: self.sizes[0].to_string(),
            s2: self.sizes[1].to_string(),
            nonsupport_exponent: self.nonsupport_exponent.to_string(),
        }
    }
}

/// `S_i = ∃(everything but z̄_i). ¬φ`
pub fn support_sets(mgr: &mut Manager, imp: &Implication) -> Result<SupportSets, CountError> {
    let sp = &imp.space;
    let mut sets = [mgr.zero(); 2];
    let mut sizes = [BigUint::default(), BigUint::default()];
    let mut nonsupport = BigUint::default();
    let mut literals = mgr.zero();
    for side in 0..2 {
        let z = sp.z(side).to_vec();
        let mut drop: Vec<u32> = sp
            .universal_vars()
            .iter()
            .copied()
            .filter(|v| !z.contains(v))
            .collect();
        drop.extend([sp.y(0), sp.y(1)]);
        let s = mgr.exists_vars(imp.neg_matrix, &drop);
        let size = mgr.count_models(s, &z)?;
        nonsupport += (BigUint::one() << z.len()) - &size;
        let cells = sp.instance_to_cells(mgr, s, side);
        let lits = sp.lits_of_cells(mgr, cells, Slot::Cur, side);
        literals = mgr.or(literals, lits);
        sets[side] = s;
        sizes[side] = size;
    }
    let valid = sp.valid(mgr, Slot::Cur);
    let literals = mgr.and(literals, valid);
    Ok(SupportSets {
        sets,
        sizes,
        nonsupport_exponent: nonsupport,
        literals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_circuit;

    fn sets(text: &str) -> SupportSets {
        let d = parse_circuit(text).unwrap();
        let mut m = Manager::new();
        let imp = Implication::build(&mut m, &d).unwrap();
        support_sets(&mut m, &imp).unwrap()
    }

    #[test]
    fn examples() {
        let s = sets("#dqcir\nforall(x)\nexists(y1; x)\nexists(y2; x)\ng = or(y1, y2)\noutput(g)\n");
        assert_eq!(s.sizes, [BigUint::from(2u32), BigUint::from(2u32)]);
        assert_eq!(s.nonsupport_exponent, BigUint::default());
        let s = sets("#dqcir\nforall(x)\nexists(y1; x)\nexists(y2; x)\ng = and()\noutput(g)\n");
        assert_eq!(s.nonsupport_exponent, BigUint::from(4u32));
        let s = sets("#dqcir\nforall(x)\nexists(y1; x)\nexists(y2; x)\ng = implies(x, y1)\noutput(g)\n");
        // ¬φ = x ∧ ¬y1 is satisfiable with either value of y2 at x = ⊤.
        assert_eq!(s.sizes, [BigUint::from(1u32), BigUint::from(1u32)]);
        assert_eq!(s.nonsupport_exponent, BigUint::from(2u32));
    }
}
