//! Weakly connected components of the implication graph over support
//! literals. Clauses in distinct components share no variables, so their
//! model counts multiply.

use num_bigint::BigUint;

use super::CountError;
use crate::bdd::{Bdd, Manager};
use crate::reachability::{Implication, LitCode, Slot};

#[derive(Debug, Clone)]
pub struct Component {
    /// Literal set over `Cur`, closed under negation and adjacency.
    pub lits: Bdd,
    /// Cells of each existential, over the `Cur` cell variables.
    pub cells: [Bdd; 2],
    pub sizes: [BigUint; 2],
    pub seed: LitCode,
}

impl Component {
    pub fn from_lits(
        mgr: &mut Manager,
        imp: &Implication,
        lits: Bdd,
        seed: LitCode,
    ) -> Result<Self, CountError> {
        let sp = &imp.space;
        let mut cells = [mgr.zero(); 2];
        let mut sizes = [BigUint::default(), BigUint::default()];
        for side in 0..2 {
            cells[side] = sp.cells_of(mgr, lits, Slot::Cur, side);
            sizes[side] = mgr.count_models(cells[side], sp.side_cells(Slot::Cur, side))?;
        }
        Ok(Component {
            lits,
            cells,
            sizes,
            seed,
        })
    }
}

/// Least `adj`-closed literal set containing `seed` and `¬seed`.
pub fn extract_component(
    mgr: &mut Manager,
    imp: &Implication,
    adj: Bdd,
    support: Bdd,
    seed: LitCode,
) -> Result<Component, CountError> {
    let sp = &imp.space;
    let s = sp.lit(mgr, Slot::Cur, seed);
    let inside = mgr.and(s, support);
    if !mgr.is_sat(inside) {
        return Err(CountError::InternalInconsistency(format!(
            "component seed {seed:?} is not a support literal"
        )));
    }
    let ns = sp.lit(mgr, Slot::Cur, seed.negate());
    let start = mgr.or(s, ns);
    let lits = imp.close_under(mgr, adj, start);
    Component::from_lits(mgr, imp, lits, seed)
}

/// Splits the support literals into components (the outer loop of the counter).
pub fn decompose(
    mgr: &mut Manager,
    imp: &Implication,
    support: Bdd,
) -> Result<Vec<Component>, CountError> {
    let adj = imp.weak_adjacency(mgr, support);
    let mut rest = support;
    let mut out = Vec::new();
    while let Some(cube) = mgr.pick_cube(rest) {
        let seed = imp.space.decode(Slot::Cur, &cube);
        let comp = extract_component(mgr, imp, adj, support, seed)?;
        rest = mgr.diff(rest, comp.lits);
        out.push(comp);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counter::support::support_sets;
    use crate::formula::parse_circuit;

    fn components(text: &str) -> Vec<Component> {
        let d = parse_circuit(text).unwrap();
        let mut m = Manager::new();
        let imp = Implication::build(&mut m, &d).unwrap();
        let s = support_sets(&mut m, &imp).unwrap();
        decompose(&mut m, &imp, s.literals).unwrap()
    }

    #[test]
    fn phi0_splits_per_cell() {
        let c = components("#dqcir\nforall(x)\nexists(y1; x)\nexists(y2; x)\ng = or(y1, y2)\noutput(g)\n");
        assert_eq!(c.len(), 2);
        for comp in &c {
            assert_eq!(comp.sizes, [BigUint::from(1u32), BigUint::from(1u32)]);
        }
    }

    #[test]
    fn equality_splits_by_cell() {
        let t = "#dqcir\nforall(x, xp)\nexists(y1; x)\nexists(y2; xp)\ng1 = iff(x, xp)\ng2 = iff(y1, y2)\ng = implies(g1, g2)\noutput(g)\n";
        let c = components(t);
        assert_eq!(c.len(), 2);
        for comp in &c {
            assert_eq!(comp.sizes, [BigUint::from(1u32), BigUint::from(1u32)]);
        }
    }
}
