//! The matrix of a 2-DQBF read as a succinct implication graph.
//!
//! Every clause `(ℓ1 ∨ ℓ2)` of the expansion contributes the edges
//! `¬ℓ1 → ℓ2` and `¬ℓ2 → ℓ1`. Literals are encoded as bit vectors
//! ([`LitCode`]) and the edge relation is a diagram over two copies of the
//! encoding, so the graph is never materialized.

mod system;

pub use system::TransitionSystem;

use serde::Serialize;

use crate::bdd::{Bdd, Manager};
use crate::counter::CountError;
use crate::formula::{Dqbf, VarId};

/// Widest dependency set a literal code can address.
pub const MAX_CELL_WIDTH: usize = 63;

/// One copy of the literal encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Cur = 0,
    Mid = 1,
    Next = 2,
    Start = 3,
    StartNext = 4,
}

const SLOTS: [Slot; 5] = [Slot::Cur, Slot::Mid, Slot::Next, Slot::Start, Slot::StartNext];

/// The expansion literal `X^sign_{existential, cell}`. Bit `j` of `cell` is
/// the value of the `j`-th dependency of the existential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct LitCode {
    pub existential: usize,
    pub cell: u64,
    pub sign: bool,
}

impl LitCode {
    pub fn new(existential: usize, cell: u64, sign: bool) -> Self {
        LitCode {
            existential,
            cell,
            sign,
        }
    }

    pub fn negate(self) -> Self {
        LitCode {
            sign: !self.sign,
            ..self
        }
    }
}

/// Placement of the literal copies, the flags and the instance variables in
/// the diagram order.
#[derive(Debug, Clone)]
pub struct LitSpace {
    width: usize,
    dep_widths: [usize; 2],
    idx: [u32; 5],
    cells: [Vec<u32>; 5],
    sign: [u32; 5],
    flag: u32,
    flag_next: u32,
    inst: Vec<Option<u32>>,
    z: [Vec<u32>; 2],
    y: [u32; 2],
    universals: Vec<u32>,
}

impl LitSpace {
    pub fn new(mgr: &mut Manager, d: &Dqbf) -> Result<Self, CountError> {
        d.require_k(2)?;
        let dep_widths = [d.existential(0).deps.len(), d.existential(1).deps.len()];
        let width = dep_widths[0].max(dep_widths[1]);
        if width > MAX_CELL_WIDTH {
            return Err(CountError::Budget {
                what: "dependency set width".into(),
                needed: width.to_string(),
                limit: MAX_CELL_WIDTH.to_string(),
            });
        }
        let idx = [0; 5].map(|_| mgr.new_var());
        let mut cells: [Vec<u32>; 5] = Default::default();
        for _ in 0..width {
            for s in SLOTS {
                cells[s as usize].push(mgr.new_var());
            }
        }
        let sign = [0; 5].map(|_| mgr.new_var());
        let flag = mgr.new_var();
        let flag_next = mgr.new_var();

        // Instance order: the dependency vectors interleaved bit by bit,
        // then the remaining universals, then the two existentials.
        let mut inst = vec![None; d.num_vars()];
        let z_ids = [&d.existential(0).deps, &d.existential(1).deps];
        for j in 0..width {
            for z in z_ids {
                if let Some(v) = z.get(j) {
                    if inst[v.index()].is_none() {
                        inst[v.index()] = Some(mgr.new_var());
                    }
                }
            }
        }
        for v in d.universals() {
            if inst[v.index()].is_none() {
                inst[v.index()] = Some(mgr.new_var());
            }
        }
        let y = [0, 1].map(|i| {
            let dv = mgr.new_var();
            inst[d.existential(i).var.index()] = Some(dv);
            dv
        });
        let z = [0, 1].map(|i| z_ids[i].iter().map(|v| inst[v.index()].unwrap()).collect());
        let universals = d.universals().iter().map(|v| inst[v.index()].unwrap()).collect();
        Ok(LitSpace {
            width,
            dep_widths,
            idx,
            cells,
            sign,
            flag,
            flag_next,
            inst,
            z,
            y,
            universals,
        })
    }

    /// Number of cell bits `D`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dep_width(&self, side: usize) -> usize {
        self.dep_widths[side]
    }

    pub fn idx_var(&self, s: Slot) -> u32 {
        self.idx[s as usize]
    }

    pub fn sign_var(&self, s: Slot) -> u32 {
        self.sign[s as usize]
    }

    pub fn cell_vars(&self, s: Slot) -> &[u32] {
        &self.cells[s as usize]
    }

    pub fn flag_vars(&self) -> (u32, u32) {
        (self.flag, self.flag_next)
    }

    /// Diagram variable of an instance variable.
    pub fn inst(&self, v: VarId) -> Option<u32> {
        self.inst.get(v.index()).copied().flatten()
    }

    /// Diagram variables of z̄_side, in x̄ order.
    pub fn z(&self, side: usize) -> &[u32] {
        &self.z[side]
    }

    pub fn y(&self, side: usize) -> u32 {
        self.y[side]
    }

    pub fn universal_vars(&self) -> &[u32] {
        &self.universals
    }

    /// Index, cell and sign variables of a slot.
    pub fn slot_vars(&self, s: Slot) -> Vec<u32> {
        let mut v = vec![self.idx_var(s)];
        v.extend_from_slice(self.cell_vars(s));
        v.push(self.sign_var(s));
        v
    }

    pub fn slot_cube(&self, mgr: &mut Manager, s: Slot) -> Bdd {
        let vars = self.slot_vars(s);
        mgr.var_cube(&vars)
    }

    /// Cell variables of `side` in slot `s` (no padding bits).
    pub fn side_cells(&self, s: Slot, side: usize) -> &[u32] {
        &self.cells[s as usize][..self.dep_widths[side]]
    }

    pub fn lit(&self, mgr: &mut Manager, s: Slot, l: LitCode) -> Bdd {
        let mut lits = vec![(self.idx_var(s), l.existential == 1), (self.sign_var(s), l.sign)];
        for (j, v) in self.cell_vars(s).iter().enumerate() {
            lits.push((*v, l.cell >> j & 1 == 1));
        }
        mgr.cube(&lits)
    }

    /// Single cell of `side` as a diagram over the slot's cell variables.
    pub fn cell(&self, mgr: &mut Manager, s: Slot, side: usize, cell: u64) -> Bdd {
        let lits: Vec<(u32, bool)> = self
            .side_cells(s, side)
            .iter()
            .enumerate()
            .map(|(j, v)| (*v, cell >> j & 1 == 1))
            .collect();
        mgr.cube(&lits)
    }

    /// Reads a literal of slot `s` from a partial assignment; unset bits
    /// count as ⊥.
    pub fn decode(&self, s: Slot, cube: &[(u32, bool)]) -> LitCode {
        let get = |v: u32| cube.iter().any(|(w, b)| *w == v && *b);
        let mut cell = 0u64;
        for (j, v) in self.cell_vars(s).iter().enumerate() {
            if get(*v) {
                cell |= 1 << j;
            }
        }
        LitCode {
            existential: get(self.idx_var(s)) as usize,
            cell,
            sign: get(self.sign_var(s)),
        }
    }

    /// Reads a cell of slot `s` from a partial assignment.
    pub fn decode_cell(&self, s: Slot, cube: &[(u32, bool)]) -> u64 {
        self.decode(s, cube).cell
    }

    fn padding(&self, s: Slot, side: usize) -> Vec<(u32, bool)> {
        self.cells[s as usize][self.dep_widths[side]..]
            .iter()
            .map(|v| (*v, false))
            .collect()
    }

    /// Padding bits beyond the existential's dependency width are ⊥.
    pub fn valid(&self, mgr: &mut Manager, s: Slot) -> Bdd {
        let mut per_side = [mgr.one(), mgr.one()];
        for (side, acc) in per_side.iter_mut().enumerate() {
            *acc = mgr.cube(&self.padding(s, side));
        }
        let i = mgr.var(self.idx_var(s));
        mgr.ite(i, per_side[1], per_side[0])
    }

    fn bits_equal(mgr: &mut Manager, pairs: &[(u32, u32)]) -> Bdd {
        let mut acc = mgr.one();
        for &(a, b) in pairs.iter().rev() {
            let (va, vb) = (mgr.var(a), mgr.var(b));
            let e = mgr.iff(va, vb);
            acc = mgr.and(acc, e);
        }
        acc
    }

    fn slot_pairs(&self, a: Slot, b: Slot) -> Vec<(u32, u32)> {
        self.slot_vars(a).into_iter().zip(self.slot_vars(b)).collect()
    }

    /// `L_a = L_b`
    pub fn equal(&self, mgr: &mut Manager, a: Slot, b: Slot) -> Bdd {
        Self::bits_equal(mgr, &self.slot_pairs(a, b))
    }

    /// `L_b = ¬L_a`
    pub fn negated(&self, mgr: &mut Manager, a: Slot, b: Slot) -> Bdd {
        let mut pairs = self.slot_pairs(a, b);
        pairs.pop();
        let same = Self::bits_equal(mgr, &pairs);
        let (sa, sb) = (mgr.var(self.sign_var(a)), mgr.var(self.sign_var(b)));
        let differ = mgr.xor(sa, sb);
        mgr.and(same, differ)
    }

    /// Moves the support of `f` between slots (all moves applied at once).
    pub fn rename(&self, mgr: &mut Manager, f: Bdd, moves: &[(Slot, Slot)]) -> Bdd {
        let mut pairs = Vec::new();
        for &(from, to) in moves {
            pairs.extend(self.slot_pairs(from, to));
        }
        mgr.rename(f, &pairs).expect("slot renaming is injective")
    }

    /// Exchanges two slots.
    pub fn swap(&self, mgr: &mut Manager, f: Bdd, a: Slot, b: Slot) -> Bdd {
        self.rename(mgr, f, &[(a, b), (b, a)])
    }

    /// Flips the sign bit of every literal in a set over slot `s`.
    pub fn negate_set(&self, mgr: &mut Manager, f: Bdd, s: Slot) -> Bdd {
        let ns = mgr.nvar(self.sign_var(s));
        mgr.compose(f, &[(self.sign_var(s), ns)])
    }

    /// Cells of `side` touched by a literal set over slot `s`, as a diagram
    /// over that slot's cell variables.
    pub fn cells_of(&self, mgr: &mut Manager, lits: Bdd, s: Slot, side: usize) -> Bdd {
        let mut fixed = self.padding(s, side);
        fixed.push((self.idx_var(s), side == 1));
        let restricted = mgr.restrict(lits, &fixed);
        let sv = mgr.var_cube(&[self.sign_var(s)]);
        mgr.exists(restricted, sv)
    }

    /// Literals of `side` at the cells of `cells` with sign given by `sign`
    /// (both over slot `s` cell variables).
    pub fn lits_with_sign(&self, mgr: &mut Manager, cells: Bdd, sign: Bdd, s: Slot, side: usize) -> Bdd {
        let sv = mgr.var(self.sign_var(s));
        let eq = mgr.iff(sv, sign);
        let c = mgr.and(cells, eq);
        self.lits_of_cells(mgr, c, s, side)
    }

    /// Both literals of every cell in `cells`.
    pub fn lits_of_cells(&self, mgr: &mut Manager, cells: Bdd, s: Slot, side: usize) -> Bdd {
        let mut fixed = self.padding(s, side);
        fixed.push((self.idx_var(s), side == 1));
        let at = mgr.cube(&fixed);
        mgr.and(cells, at)
    }

    /// Transfers a diagram over the `Cur` cells of `side` onto z̄_side.
    pub fn cells_to_instance(&self, mgr: &mut Manager, f: Bdd, side: usize) -> Bdd {
        let pairs: Vec<(u32, u32)> = self
            .side_cells(Slot::Cur, side)
            .iter()
            .copied()
            .zip(self.z[side].iter().copied())
            .collect();
        mgr.rename(f, &pairs).expect("cell variables map injectively")
    }

    /// Transfers a diagram over z̄_side onto the `Cur` cells of `side`.
    pub fn instance_to_cells(&self, mgr: &mut Manager, f: Bdd, side: usize) -> Bdd {
        let pairs: Vec<(u32, u32)> = self.z[side]
            .iter()
            .copied()
            .zip(self.side_cells(Slot::Cur, side).iter().copied())
            .collect();
        mgr.rename(f, &pairs).expect("cell variables map injectively")
    }
}

/// The edge relation and its transitive closure.
#[derive(Debug, Clone)]
pub struct Implication {
    pub space: LitSpace,
    /// `¬φ` over the instance variables.
    pub neg_matrix: Bdd,
    /// `E(Cur, Next)`
    pub edges: Bdd,
    closure: Option<Bdd>,
    closure_iterations: usize,
}

impl Implication {
    pub fn build(mgr: &mut Manager, d: &Dqbf) -> Result<Self, CountError> {
        let space = LitSpace::new(mgr, d)?;
        let matrix = mgr.build(d.matrix(), &|v| space.inst(v))?;
        let neg_matrix = mgr.not(matrix);
        let edges = edge_relation(mgr, &space, neg_matrix);
        Ok(Implication {
            space,
            neg_matrix,
            edges,
            closure: None,
            closure_iterations: 0,
        })
    }

    /// φ_tr(Cur, Next), computed on first use by iterated squaring.
    pub fn closure(&mut self, mgr: &mut Manager) -> Bdd {
        if let Some(c) = self.closure {
            return c;
        }
        let (c, iters) = transitive_closure(mgr, &self.space, self.edges);
        self.closure = Some(c);
        self.closure_iterations = iters;
        c
    }

    /// Squaring rounds used by [`closure`](Self::closure), including the
    /// final round that detects the fixpoint.
    pub fn closure_iterations(&self) -> usize {
        self.closure_iterations
    }

    /// Unsatisfiable iff some literal reaches its negation and back.
    pub fn is_satisfiable(&mut self, mgr: &mut Manager) -> bool {
        let tr = self.closure(mgr);
        let bad = self.contradicting(mgr, tr);
        !mgr.is_sat(bad)
    }

    /// Literals `L` with `tr(L, ¬L)` and `tr(¬L, L)`, over `Cur`.
    pub fn contradicting(&self, mgr: &mut Manager, tr: Bdd) -> Bdd {
        let sp = &self.space;
        let neg = sp.negated(mgr, Slot::Cur, Slot::Next);
        let next = sp.slot_cube(mgr, Slot::Next);
        let to_neg = mgr.and_exists(tr, neg, next);
        let from_neg = sp.negate_set(mgr, to_neg, Slot::Cur);
        mgr.and(to_neg, from_neg)
    }

    /// Successors of a literal set over `Cur` under `rel(Cur, Next)`,
    /// returned over `Cur`.
    pub fn image(&self, mgr: &mut Manager, rel: Bdd, set: Bdd) -> Bdd {
        let cur = self.space.slot_cube(mgr, Slot::Cur);
        let img = mgr.and_exists(set, rel, cur);
        self.space.rename(mgr, img, &[(Slot::Next, Slot::Cur)])
    }

    /// G̃: edges in both directions plus the negation link of each
    /// support literal.
    pub fn weak_adjacency(&self, mgr: &mut Manager, support: Bdd) -> Bdd {
        let sp = &self.space;
        let back = sp.swap(mgr, self.edges, Slot::Cur, Slot::Next);
        let both = mgr.or(self.edges, back);
        let neg = sp.negated(mgr, Slot::Cur, Slot::Next);
        let link = mgr.and(neg, support);
        mgr.or(both, link)
    }

    /// Least set containing `seed` closed under `adj`.
    pub fn close_under(&self, mgr: &mut Manager, adj: Bdd, seed: Bdd) -> Bdd {
        let mut reached = seed;
        let mut frontier = seed;
        while mgr.is_sat(frontier) {
            let img = self.image(mgr, adj, frontier);
            frontier = mgr.diff(img, reached);
            reached = mgr.or(reached, frontier);
        }
        reached
    }
}

/// `E(Cur, Next)` from `¬φ` over the instance variables.
pub fn edge_relation(mgr: &mut Manager, sp: &LitSpace, neg_matrix: Bdd) -> Bdd {
    let mut keep: Vec<u32> = sp.z(0).to_vec();
    keep.extend_from_slice(sp.z(1));
    let drop: Vec<u32> = sp
        .universal_vars()
        .iter()
        .copied()
        .filter(|v| !keep.contains(v))
        .collect();
    let projected = mgr.exists_vars(neg_matrix, &drop);
    let one_way = |mgr: &mut Manager, from: usize| -> Bdd {
        let to = 1 - from;
        let mut subst = Vec::new();
        let mut shared = mgr.one();
        for (j, v) in sp.z(from).iter().enumerate() {
            let t = mgr.var(sp.cell_vars(Slot::Cur)[j]);
            subst.push((*v, t));
        }
        for (j, v) in sp.z(to).iter().enumerate() {
            let nb = mgr.var(sp.cell_vars(Slot::Next)[j]);
            match sp.z(from).iter().position(|w| w == v) {
                Some(p) => {
                    let cb = mgr.var(sp.cell_vars(Slot::Cur)[p]);
                    let eq = mgr.iff(cb, nb);
                    shared = mgr.and(shared, eq);
                }
                None => subst.push((*v, nb)),
            }
        }
        let ys = mgr.var(sp.sign_var(Slot::Cur));
        subst.push((sp.y(from), ys));
        let yn = mgr.nvar(sp.sign_var(Slot::Next));
        subst.push((sp.y(to), yn));
        let body = mgr.compose(projected, &subst);
        let idx = mgr.cube(&[
            (sp.idx_var(Slot::Cur), from == 1),
            (sp.idx_var(Slot::Next), to == 1),
        ]);
        let guarded = mgr.and(shared, idx);
        mgr.and(body, guarded)
    };
    let e12 = one_way(mgr, 0);
    let e21 = one_way(mgr, 1);
    let e = mgr.or(e12, e21);
    let vc = sp.valid(mgr, Slot::Cur);
    let vn = sp.valid(mgr, Slot::Next);
    let v = mgr.and(vc, vn);
    mgr.and(e, v)
}

/// Iterated squaring to a fixpoint. Returns the closure and the number of
/// squaring rounds.
pub fn transitive_closure(mgr: &mut Manager, sp: &LitSpace, edges: Bdd) -> (Bdd, usize) {
    let mid = sp.slot_cube(mgr, Slot::Mid);
    let mut r = edges;
    let mut rounds = 0;
    loop {
        rounds += 1;
        let left = sp.rename(mgr, r, &[(Slot::Next, Slot::Mid)]);
        let right = sp.rename(mgr, r, &[(Slot::Cur, Slot::Mid)]);
        let step = mgr.and_exists(left, right, mid);
        let next = mgr.or(r, step);
        if next == r {
            return (r, rounds);
        }
        r = next;
    }
}
