//! Per-component counting by enumerating the distinct restrictions of one
//! existential to its cells in the component.
//!
//! Every accepted candidate `f` extends to a model; its completions on the
//! other side are counted in closed form by [`count_1dqbf_restricted`]. The search
//! state `A` lives over fresh cell vectors `v̄_1 … v̄_t`: an assignment
//! names, for every earlier candidate `f_i`, a cell where the next candidate
//! must differ from `f_i`.

use serde::Serialize;

use super::component::Component;
use super::CountError;
use crate::bdd::{Bdd, Manager};
use crate::bigcount::BigCount;
use crate::reachability::{Implication, LitCode, Slot};

/// Knobs of the enumeration.
#[derive(Debug, Clone)]
pub struct EnumerateConfig {
    /// Conjoin the pairwise pruning constraints into `A`.
    pub pruning: bool,
    /// Enumerate on the side with fewer cells.
    pub smaller_side: bool,
    pub max_candidates: Option<u64>,
    pub max_iterations: Option<u64>,
    /// Keep every 1-DQBF slice for later auditing.
    pub record_slices: bool,
}

impl Default for EnumerateConfig {
    fn default() -> Self {
        EnumerateConfig {
            pruning: true,
            smaller_side: true,
            max_candidates: None,
            max_iterations: None,
            record_slices: false,
        }
    }
}

/// One restricted 1-DQBF solved during enumeration: a candidate on
/// `side` and the number of its completions on the other side.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Slice {
    pub side: usize,
    /// `(cell, value)` for every cell of the component on `side`.
    pub candidate: Vec<(u64, bool)>,
    /// Cells of the component on the other side.
    pub other_cells: Vec<u64>,
    pub completions: BigCount,
}

#[derive(Debug, Clone)]
pub struct Enumeration {
    pub n_c: BigCount,
    pub side: usize,
    pub candidates: u64,
    pub blocked: u64,
    pub slices: Vec<Slice>,
}

#[derive(Debug, Clone)]
pub enum EnumOutcome {
    Counted(Enumeration),
    OverBudget { candidates: u64, iterations: u64 },
}

/// Fresh cell vectors, reused by successive components of one manager.
#[derive(Debug, Default)]
pub struct VarPool {
    blocks: Vec<Vec<u32>>,
}

impl VarPool {
    fn block(&mut self, mgr: &mut Manager, i: usize, width: usize) -> Vec<u32> {
        while self.blocks.len() <= i {
            let b = mgr.new_vars(width as u32);
            self.blocks.push(b);
        }
        while self.blocks[i].len() < width {
            // Widths only differ between sides; grow in place.
            let v = mgr.new_var();
            self.blocks[i].push(v);
        }
        self.blocks[i][..width].to_vec()
    }
}

/// A 1-DQBF `∀x̄ ∃y(z̄). φ′` given by its negated matrix.
#[derive(Debug, Clone)]
pub struct OneDqbf<'a> {
    pub neg_matrix: Bdd,
    /// Diagram variables of z̄, ascending.
    pub deps: &'a [u32],
    pub existential: u32,
    /// Every other variable `neg_matrix` may mention.
    pub others: &'a [u32],
}

/// The number of Skolem functions that differ on the cells `s`
/// (a diagram over `deps`) is `2^{|S| − |forced ∩ S|}`, where forced cells
/// are those on which `¬φ′` is satisfiable.
pub fn count_1dqbf_restricted(
    mgr: &mut Manager,
    u: &OneDqbf,
    s: Bdd,
) -> Result<BigCount, CountError> {
    let others = mgr.var_cube(u.others);
    let projected = mgr.exists(u.neg_matrix, others);
    let when_false = mgr.cofactor(projected, u.existential, false);
    let when_true = mgr.cofactor(projected, u.existential, true);
    let both = mgr.and_all([when_false, when_true, s]);
    if mgr.is_sat(both) {
        return Err(CountError::InternalInconsistency(
            "restricted 1-DQBF has a cell with no admissible value".into(),
        ));
    }
    let forced = mgr.or(when_false, when_true);
    let forced_in_s = mgr.and(forced, s);
    let total = mgr.count_models(s, u.deps)?;
    let fixed = mgr.count_models(forced_in_s, u.deps)?;
    Ok(BigCount::from_pow2(total - fixed))
}

struct Run<'a> {
    mgr: &'a mut Manager,
    imp: &'a Implication,
    side: usize,
    /// Closure restricted to the component.
    tr: Bdd,
    /// `tr` with both indices fixed to the enumerated side and padding
    /// removed; only cell and sign variables remain.
    tr_side: Bdd,
    cells: Bdd,
    other: usize,
    cells_inst: Bdd,
    other_inst: Bdd,
    others: Vec<u32>,
}

impl Run<'_> {
    fn sp(&self) -> &crate::reachability::LitSpace {
        &self.imp.space
    }

    fn lit(&mut self, cell: u64, sign: bool) -> Bdd {
        let sp = &self.imp.space;
        sp.lit(self.mgr, Slot::Cur, LitCode::new(self.side, cell, sign))
    }

    /// Closed forced set generated by `lits`.
    fn propagate(&mut self, lits: Bdd) -> Bdd {
        let img = self.imp.image(self.mgr, self.tr, lits);
        self.mgr.or(lits, img)
    }

    fn consistent(&mut self, p: Bdd) -> bool {
        let np = self.imp.space.negate_set(self.mgr, p, Slot::Cur);
        let clash = self.mgr.and(p, np);
        !self.mgr.is_sat(clash)
    }

    /// Cells of the enumerated side whose literal of the given sign is in `p`.
    fn cells_with(&mut self, p: Bdd, sign: bool) -> Bdd {
        let sp = &self.imp.space;
        let mut fixed = vec![(sp.idx_var(Slot::Cur), self.side == 1), (sp.sign_var(Slot::Cur), sign)];
        for v in &sp.cell_vars(Slot::Cur)[sp.dep_width(self.side)..] {
            fixed.push((*v, false));
        }
        self.mgr.restrict(p, &fixed)
    }

    /// Indices `i ≤ j` whose closed forced sets clash.
    fn conflicting_pair(&mut self, forced: &[Bdd]) -> (usize, usize) {
        let sp = self.imp.space.clone();
        let neg: Vec<Bdd> = forced
            .iter()
            .map(|p| sp.negate_set(self.mgr, *p, Slot::Cur))
            .collect();
        for j in 0..forced.len() {
            for i in 0..=j {
                let clash = self.mgr.and(forced[i], neg[j]);
                if self.mgr.is_sat(clash) {
                    return (i, j);
                }
            }
        }
        unreachable!("an inconsistent union has a clashing pair")
    }

    fn value_at(&mut self, f: Bdd, cell: u64) -> bool {
        let c = self.imp.space.cell(self.mgr, Slot::Cur, self.side, cell);
        let hit = self.mgr.and(c, f);
        self.mgr.is_sat(hit)
    }

    /// Completes a consistent closed forced set into a full assignment of
    /// the side's cells and returns the cells assigned ⊤.
    fn valid_candidate(&mut self, mut p: Bdd) -> Result<Bdd, CountError> {
        let sp = self.imp.space.clone();
        let side = self.side;
        loop {
            let t = self.cells_with(p, true);
            let f = self.cells_with(p, false);
            let assigned = self.mgr.or(t, f);
            let open = self.mgr.diff(self.cells, assigned);
            let Some(cube) = self.mgr.pick_cube(open) else {
                return Ok(self.mgr.and(t, self.cells));
            };
            // Open cells whose ⊥ literal implies the ⊤ literal of some open cell.
            let open_next = sp.rename(self.mgr, open, &[(Slot::Cur, Slot::Next)]);
            let pos_next = self.mgr.cube(&[
                (sp.idx_var(Slot::Next), side == 1),
                (sp.sign_var(Slot::Next), true),
            ]);
            let target = self.mgr.and(open_next, pos_next);
            let next = sp.slot_cube(self.mgr, Slot::Next);
            let reaches = self.mgr.and_exists(self.tr, target, next);
            let bad = self.cells_with(reaches, false);
            let good = self.mgr.diff(open, bad);
            let add = if self.mgr.is_sat(good) {
                let neg = self.mgr.zero();
                sp.lits_with_sign(self.mgr, good, neg, Slot::Cur, side)
            } else {
                let cell = sp.decode_cell(Slot::Cur, &cube);
                let lo = self.lit(cell, false);
                let hi_next = sp.lit(self.mgr, Slot::Next, LitCode::new(side, cell, true));
                let both = self.mgr.and(lo, hi_next);
                let self_forcing = self.mgr.and(both, self.tr);
                if self.mgr.is_sat(self_forcing) {
                    self.lit(cell, true)
                } else {
                    lo
                }
            };
            let closed = self.propagate(add);
            p = self.mgr.or(p, closed);
        }
    }

    fn completions(&mut self, f: Bdd) -> Result<BigCount, CountError> {
        let sp = self.imp.space.clone();
        let f_inst = sp.cells_to_instance(self.mgr, f, self.side);
        let y = self.mgr.var(sp.y(self.side));
        let agree = self.mgr.iff(y, f_inst);
        let restricted = self.mgr.and_all([self.imp.neg_matrix, agree, self.cells_inst]);
        let neg = self.mgr.exists_vars(restricted, &[sp.y(self.side)]);
        let u = OneDqbf {
            neg_matrix: neg,
            deps: sp.z(self.other),
            existential: sp.y(self.other),
            others: &self.others,
        };
        count_1dqbf_restricted(self.mgr, &u, self.other_inst)
    }

    /// `tr(X^{¬f_i(v̄_i)}_{v̄_i}, X^{f_j(v̄_j)}_{v̄_j})` over the two vectors.
    fn conflict(&mut self, vi: &[u32], fi: Bdd, vj: &[u32], fj: Bdd) -> Bdd {
        let sp = self.imp.space.clone();
        let mut subst = Vec::new();
        for (b, v) in vi.iter().enumerate() {
            let x = self.mgr.var(*v);
            subst.push((sp.side_cells(Slot::Cur, self.side)[b], x));
        }
        for (b, v) in vj.iter().enumerate() {
            let x = self.mgr.var(*v);
            subst.push((sp.side_cells(Slot::Next, self.side)[b], x));
        }
        let nfi = self.mgr.not(fi);
        subst.push((sp.sign_var(Slot::Cur), nfi));
        subst.push((sp.sign_var(Slot::Next), fj));
        self.mgr.compose(self.tr_side, &subst)
    }

    fn on_vector(&mut self, f: Bdd, v: &[u32]) -> Bdd {
        let pairs: Vec<(u32, u32)> = self
            .sp()
            .side_cells(Slot::Cur, self.side)
            .iter()
            .copied()
            .zip(v.iter().copied())
            .collect();
        self.mgr.rename(f, &pairs).expect("fresh vectors are distinct")
    }
}

/// Counts the models of a component's clauses by candidate enumeration.
pub fn count_component(
    mgr: &mut Manager,
    imp: &Implication,
    tr: Bdd,
    comp: &Component,
    pool: &mut VarPool,
    cfg: &EnumerateConfig,
) -> Result<EnumOutcome, CountError> {
    let sp = imp.space.clone();
    let side = if cfg.smaller_side && comp.sizes[1] < comp.sizes[0] { 1 } else { 0 };
    let other = 1 - side;
    let width = sp.dep_width(side);

    let tr_c = mgr.and(tr, comp.lits);
    let mut fixed = vec![(sp.idx_var(Slot::Cur), side == 1), (sp.idx_var(Slot::Next), side == 1)];
    for s in [Slot::Cur, Slot::Next] {
        for v in &sp.cell_vars(s)[width..] {
            fixed.push((*v, false));
        }
    }
    let tr_side = mgr.restrict(tr_c, &fixed);
    let cells_inst = sp.cells_to_instance(mgr, comp.cells[side], side);
    let other_inst = sp.cells_to_instance(mgr, comp.cells[other], other);
    let z_other = sp.z(other).to_vec();
    let mut others: Vec<u32> = sp
        .universal_vars()
        .iter()
        .copied()
        .filter(|v| !z_other.contains(v))
        .collect();
    others.sort_unstable();

    let mut run = Run {
        mgr,
        imp,
        side,
        tr: tr_c,
        tr_side,
        cells: comp.cells[side],
        other,
        cells_inst,
        other_inst,
        others,
    };

    let mut a = run.mgr.one();
    let mut found: Vec<Bdd> = Vec::new();
    let mut on_vec: Vec<Bdd> = Vec::new();
    let mut blocks: Vec<Vec<u32>> = Vec::new();
    let mut n_c = BigCount::zero();
    let mut blocked = 0u64;
    let mut iterations = 0u64;
    let mut slices = Vec::new();

    while let Some(cube) = run.mgr.pick_cube(a) {
        iterations += 1;
        if cfg.max_iterations.is_some_and(|m| iterations > m)
            || cfg.max_candidates.is_some_and(|m| found.len() as u64 >= m)
        {
            return Ok(EnumOutcome::OverBudget {
                candidates: found.len() as u64,
                iterations,
            });
        }
        let bit = |v: u32| cube.iter().any(|(w, b)| *w == v && *b);
        // ForceAssignment: differ from f_i at the cell M(v̄_i).
        let mut forced = Vec::with_capacity(blocks.len());
        for (i, blk) in blocks.iter().enumerate() {
            let cell = blk
                .iter()
                .enumerate()
                .fold(0u64, |acc, (j, v)| acc | (bit(*v) as u64) << j);
            let val = run.value_at(found[i], cell);
            let l = run.lit(cell, !val);
            forced.push(run.propagate(l));
        }
        let p = run.mgr.or_all(forced.iter().copied());
        if !run.consistent(p) {
            // Inconsistency in a 2-CNF is witnessed by two forced literals;
            // block every M that repeats their cells.
            let (i, j) = run.conflicting_pair(&forced);
            let mut lits = Vec::new();
            for k in [i, j] {
                lits.extend(blocks[k].iter().map(|v| (*v, bit(*v))));
            }
            let m = run.mgr.cube(&lits);
            a = run.mgr.diff(a, m);
            blocked += 1;
            continue;
        }
        let f = run.valid_candidate(p)?;
        if found.contains(&f) {
            return Err(CountError::InternalInconsistency(
                "candidate extraction repeated an earlier candidate".into(),
            ));
        }
        let c = run.completions(f)?;
        if cfg.record_slices {
            let sc = sp.side_cells(Slot::Cur, side).to_vec();
            let oc = sp.side_cells(Slot::Cur, other).to_vec();
            let all = run.mgr.minterms(comp.cells[side], &sc, 1 << 16).unwrap_or_default();
            let candidate = all.iter().map(|&cell| (cell, run.value_at(f, cell))).collect();
            let other_cells = run.mgr.minterms(comp.cells[other], &oc, 1 << 16).unwrap_or_default();
            slices.push(Slice {
                side,
                candidate,
                other_cells,
                completions: c.clone(),
            });
        }
        n_c = n_c.add(&c);
        found.push(f);

        // Update(A): the next candidate must differ from f somewhere in C_s.
        let t = blocks.len();
        let v = pool.block(run.mgr, t, width);
        let fv = run.on_vector(f, &v);
        let cv = run.on_vector(comp.cells[side], &v);
        a = run.mgr.and(a, cv);
        blocks.push(v.clone());
        on_vec.push(fv);
        if cfg.pruning {
            for i in 0..=t {
                let vi = blocks[i].clone();
                let clash = run.conflict(&vi, on_vec[i], &v, fv);
                a = run.mgr.diff(a, clash);
                if i != t {
                    let same = equal_vectors(run.mgr, &vi, &v);
                    let agree = run.mgr.iff(on_vec[i], fv);
                    let rule = run.mgr.implies(same, agree);
                    a = run.mgr.and(a, rule);
                }
            }
        }
    }
    let candidates = found.len() as u64;
    Ok(EnumOutcome::Counted(Enumeration {
        n_c,
        side,
        candidates,
        blocked,
        slices,
    }))
}

fn equal_vectors(mgr: &mut Manager, a: &[u32], b: &[u32]) -> Bdd {
    let mut acc = mgr.one();
    for (x, y) in a.iter().zip(b) {
        let (vx, vy) = (mgr.var(*x), mgr.var(*y));
        let e = mgr.iff(vx, vy);
        acc = mgr.and(acc, e);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counter::component::decompose;
    use crate::counter::support::support_sets;
    use crate::formula::parse_circuit;

    fn n_cs(text: &str, cfg: &EnumerateConfig) -> Vec<BigCount> {
        let d = parse_circuit(text).unwrap();
        let mut m = Manager::new();
        let mut imp = Implication::build(&mut m, &d).unwrap();
        let tr = imp.closure(&mut m);
        let s = support_sets(&mut m, &imp).unwrap();
        let comps = decompose(&mut m, &imp, s.literals).unwrap();
        let mut pool = VarPool::default();
        comps
            .iter()
            .map(|c| match count_component(&mut m, &imp, tr, c, &mut pool, cfg).unwrap() {
                EnumOutcome::Counted(e) => e.n_c,
                EnumOutcome::OverBudget { .. } => panic!("no budget set"),
            })
            .collect()
    }

    #[test]
    fn phi0_components() {
        let t = "#dqcir\nforall(x)\nexists(y1; x)\nexists(y2; x)\ng = or(y1, y2)\noutput(g)\n";
        for pruning in [true, false] {
            let cfg = EnumerateConfig {
                pruning,
                ..EnumerateConfig::default()
            };
            assert_eq!(n_cs(t, &cfg), vec![BigCount::from_u64(3); 2]);
        }
    }

    #[test]
    fn equality_components() {
        let t = "#dqcir\nforall(x, xp)\nexists(y1; x)\nexists(y2; xp)\ng1 = iff(x, xp)\ng2 = iff(y1, y2)\ng = implies(g1, g2)\noutput(g)\n";
        let got = n_cs(t, &EnumerateConfig::default());
        assert_eq!(got, vec![BigCount::from_u64(2), BigCount::from_u64(2)]);
    }

    #[test]
    fn one_dqbf_examples() {
        // ∀u ∃y(u). u → y: the cell u = ⊤ is forced, u = ⊥ is free.
        let mut m = Manager::with_vars(2);
        let (u, y) = (m.var(0), m.var(1));
        let ny = m.not(y);
        let neg = m.and(u, ny);
        let one = OneDqbf {
            neg_matrix: neg,
            deps: &[0],
            existential: 1,
            others: &[],
        };
        let all = m.one();
        assert_eq!(count_1dqbf_restricted(&mut m, &one, all).unwrap(), BigCount::from_u64(2));
        let none = m.zero();
        assert_eq!(count_1dqbf_restricted(&mut m, &one, none).unwrap(), BigCount::one());
        let free = OneDqbf {
            neg_matrix: m.zero(),
            ..one
        };
        assert_eq!(count_1dqbf_restricted(&mut m, &free, all).unwrap(), BigCount::from_u64(4));
    }
}
