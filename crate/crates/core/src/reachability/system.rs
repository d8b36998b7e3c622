//! Satisfiability as a reachability question over states `(b, L, L0)`.
//!
//! A walk starts at `L0` with the flag cleared, follows implication edges,
//! may raise the flag when it stands on `¬L0`, and is bad when it returns
//! to `L0` with the flag raised: that witnesses `L0 →* ¬L0 →* L0`.

use super::{Implication, Slot};
use crate::bdd::{Bdd, Manager};

#[derive(Debug, Clone, Copy)]
pub struct TransitionSystem {
    /// Over `(flag, Cur, Start)`.
    pub init: Bdd,
    /// Over `(flag, Cur, Start)` and `(flag', Next, StartNext)`.
    pub trans: Bdd,
    pub bad: Bdd,
}

impl TransitionSystem {
    /// Built over `rel(Cur, Next)`, normally the edge relation.
    pub fn new(mgr: &mut Manager, imp: &Implication, rel: Bdd, support: Bdd) -> Self {
        let sp = &imp.space;
        let (flag, flag_next) = sp.flag_vars();
        let f = mgr.var(flag);
        let nf = mgr.nvar(flag);
        let fnext = mgr.var(flag_next);

        let start_support = sp.rename(mgr, support, &[(Slot::Cur, Slot::Start)]);
        let at_start = sp.equal(mgr, Slot::Cur, Slot::Start);
        let init = mgr.and_all([nf, at_start, start_support]);

        let keep_start = sp.equal(mgr, Slot::Start, Slot::StartNext);
        let same_flag = mgr.iff(f, fnext);
        let walk = mgr.and_all([same_flag, keep_start, rel]);
        let stay = sp.equal(mgr, Slot::Cur, Slot::Next);
        let on_neg = sp.negated(mgr, Slot::Start, Slot::Cur);
        let flip = mgr.and_all([nf, fnext, stay, keep_start, on_neg]);
        let trans = mgr.or(walk, flip);

        let bad = mgr.and(f, at_start);
        TransitionSystem { init, trans, bad }
    }

    /// Forward breadth-first reachability. Returns the reached set and the
    /// number of image steps.
    pub fn reachable(&self, mgr: &mut Manager, imp: &Implication) -> (Bdd, usize) {
        let sp = &imp.space;
        let (flag, _) = sp.flag_vars();
        let mut vars = sp.slot_vars(Slot::Cur);
        vars.extend(sp.slot_vars(Slot::Start));
        vars.push(flag);
        let cube = mgr.var_cube(&vars);
        let mut reached = self.init;
        let mut frontier = self.init;
        let mut steps = 0;
        while mgr.is_sat(frontier) {
            steps += 1;
            let img = mgr.and_exists(frontier, self.trans, cube);
            let img = prime_to_current(mgr, imp, img);
            frontier = mgr.diff(img, reached);
            reached = mgr.or(reached, frontier);
        }
        (reached, steps)
    }

    pub fn is_unsat(&self, mgr: &mut Manager, imp: &Implication) -> bool {
        let (reached, _) = self.reachable(mgr, imp);
        let hit = mgr.and(reached, self.bad);
        mgr.is_sat(hit)
    }
}

fn prime_to_current(mgr: &mut Manager, imp: &Implication, f: Bdd) -> Bdd {
    let sp = &imp.space;
    let (flag, flag_next) = sp.flag_vars();
    let mut pairs: Vec<(u32, u32)> = sp
        .slot_vars(Slot::Next)
        .into_iter()
        .zip(sp.slot_vars(Slot::Cur))
        .collect();
    pairs.extend(
        sp.slot_vars(Slot::StartNext)
            .into_iter()
            .zip(sp.slot_vars(Slot::Start)),
    );
    pairs.push((flag_next, flag));
    mgr.rename(f, &pairs).expect("priming is injective")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_circuit;
    use crate::reachability::LitCode;

    fn system(text: &str) -> (Manager, Implication, TransitionSystem) {
        let d = parse_circuit(text).unwrap();
        let mut m = Manager::new();
        let imp = Implication::build(&mut m, &d).unwrap();
        let vc = imp.space.valid(&mut m, Slot::Cur);
        let ts = TransitionSystem::new(&mut m, &imp, imp.edges, vc);
        (m, imp, ts)
    }

    #[test]
    fn phi0_step() {
        let t = "#dqcir\nforall(x)\nexists(y1; x)\nexists(y2; x)\ng = or(y1, y2)\noutput(g)\n";
        let (mut m, imp, ts) = system(t);
        let (reached, _) = ts.reachable(&mut m, &imp);
        let sp = &imp.space;
        let cur = sp.lit(&mut m, Slot::Cur, LitCode::new(1, 0, true));
        let start = sp.lit(&mut m, Slot::Start, LitCode::new(0, 0, false));
        let nf = m.nvar(sp.flag_vars().0);
        let state = m.and_all([cur, start, nf]);
        let hit = m.and(state, reached);
        assert!(m.is_sat(hit));
        assert!(!ts.is_unsat(&mut m, &imp));
    }

    #[test]
    fn tautology_reaches_only_init() {
        let t = "#dqcir\nforall(x)\nexists(y1; x)\nexists(y2; x)\ng = and()\noutput(g)\n";
        let (mut m, imp, ts) = system(t);
        let (reached, _) = ts.reachable(&mut m, &imp);
        assert_eq!(reached, ts.init);
    }

    #[test]
    fn contradiction_reaches_bad() {
        let t = "#dqcir\nforall(x)\nexists(y1; x)\nexists(y2; x)\ng1 = iff(y1, y2)\ng2 = xor(y1, y2)\ng = and(g1, g2)\noutput(g)\n";
        let (mut m, imp, ts) = system(t);
        assert!(ts.is_unsat(&mut m, &imp));
    }
}
