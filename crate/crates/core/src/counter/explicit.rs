//! Counting a small component on an explicit clause list.
//!
//! When a component has few enough strongly connected components, the
//! closure between their representatives is listed once and the count runs as a plain #2-SAT search: unit
//! propagation, splitting into connected parts, and a cache keyed by the
//! set of open cells. Each step then costs a few vector operations instead
//! of diagram images.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rustc_hash::FxHashMap;

use crate::bdd::{Bdd, Manager};
use crate::reachability::{Implication, LitCode, Slot};

/// Most literals a component may have for the explicit search.
pub const MAX_LITERALS: usize = 1 << 16;
/// Most implication edges listed for the explicit search.
pub const MAX_EDGES: usize = 1 << 21;

/// A literal is `2 * cell + sign`.
type Lit = u32;

/// Cells and implication edges of a component, listed out.
struct Clauses {
    /// Successors of each literal.
    succ: Vec<Vec<Lit>>,
    /// Literals the closure forces true.
    units: Vec<Lit>,
    cells: usize,
}

/// Counts the models of a component's clauses, or `None` when the
/// component is too large to list.
///
/// `reps` holds one literal per strongly connected component (closed
/// under negation), `tr` the closure, and `forced` the literals over
/// `Next` that their own negation reaches.
pub(crate) fn count(mgr: &mut Manager, imp: &Implication, tr: Bdd, reps: Bdd, forced: Bdd) -> Option<BigUint> {
    let clauses = list(mgr, imp, tr, reps, forced)?;
    let mut s = Search::new(&clauses);
    for &u in &clauses.units {
        if !s.assign(u) {
            return Some(BigUint::zero());
        }
    }
    let open: Vec<u32> = (0..clauses.cells as u32).filter(|&v| s.value[v as usize].is_none()).collect();
    Some(s.count_open(&open))
}

fn list(mgr: &mut Manager, imp: &Implication, tr: Bdd, reps: Bdd, forced: Bdd) -> Option<Clauses> {
    let sp = &imp.space;
    let cur = sp.slot_vars(Slot::Cur);
    let next = sp.slot_vars(Slot::Next);
    if cur.len() + next.len() > 64 {
        return None;
    }
    let mut cur_sorted = cur.clone();
    cur_sorted.sort_unstable();
    let codes = mgr.minterms(reps, &cur_sorted, MAX_LITERALS)?;

    // Literal codes are decoded through the position of each slot
    // variable in the sorted list.
    let decode = |m: u64, sorted: &[u32], slot: &[u32]| -> LitCode {
        let bit = |v: u32| {
            let at = sorted.binary_search(&v).expect("slot variable listed");
            m >> at & 1 == 1
        };
        let mut cell = 0u64;
        for (j, v) in slot[1..slot.len() - 1].iter().enumerate() {
            if bit(*v) {
                cell |= 1 << j;
            }
        }
        LitCode::new(bit(slot[0]) as usize, cell, bit(slot[slot.len() - 1]))
    };
    let mut index: FxHashMap<(usize, u64), u32> = FxHashMap::default();
    for &m in &codes {
        let l = decode(m, &cur_sorted, &cur);
        let n = index.len() as u32;
        index.entry((l.existential, l.cell)).or_insert(n);
    }
    let lit_of = |l: LitCode| -> Option<Lit> {
        index.get(&(l.existential, l.cell)).map(|v| 2 * v + l.sign as u32)
    };

    let mut both = cur.clone();
    both.extend_from_slice(&next);
    both.sort_unstable();
    let reps_next = sp.rename(mgr, reps, &[(Slot::Cur, Slot::Next)]);
    let inside = mgr.and(reps, reps_next);
    let edges = mgr.and(tr, inside);
    let listed = mgr.minterms(edges, &both, MAX_EDGES)?;
    let mut succ = vec![Vec::new(); 2 * index.len()];
    for m in listed {
        let a = lit_of(decode(m, &both, &cur))?;
        let b = lit_of(decode(m, &both, &next))?;
        if a != b {
            succ[a as usize].push(b);
        }
    }
    let succ = transitive_reduction(succ);

    let forced = mgr.and(forced, reps_next);
    let forced = sp.rename(mgr, forced, &[(Slot::Next, Slot::Cur)]);
    let units = mgr
        .minterms(forced, &cur_sorted, MAX_LITERALS)?
        .into_iter()
        .map(|m| lit_of(decode(m, &cur_sorted, &cur)))
        .collect::<Option<Vec<_>>>()?;
    Some(Clauses {
        succ,
        units,
        cells: index.len(),
    })
}

/// Drops every edge `a → c` with a path `a → b → c`. The input is a
/// transitively closed relation between SCC representatives without
/// self-loops, hence acyclic, and the result has the same closure and so the same models.
fn transitive_reduction(succ: Vec<Vec<Lit>>) -> Vec<Vec<Lit>> {
    let mut implied = vec![false; succ.len()];
    let mut out = Vec::with_capacity(succ.len());
    for next in &succ {
        for &b in next {
            for &c in &succ[b as usize] {
                implied[c as usize] = true;
            }
        }
        out.push(next.iter().copied().filter(|&c| !implied[c as usize]).collect());
        for &b in next {
            for &c in &succ[b as usize] {
                implied[c as usize] = false;
            }
        }
    }
    out
}

struct Search<'a> {
    succ: &'a [Vec<Lit>],
    value: Vec<Option<bool>>,
    trail: Vec<u32>,
    cache: FxHashMap<Vec<u32>, BigUint>,
    mark: Vec<u32>,
    epoch: u32,
}

impl<'a> Search<'a> {
    fn new(c: &'a Clauses) -> Self {
        Search {
            succ: &c.succ,
            value: vec![None; c.cells],
            trail: Vec::new(),
            cache: FxHashMap::default(),
            mark: vec![0; c.cells],
            epoch: 0,
        }
    }

    fn is_true(&self, l: Lit) -> Option<bool> {
        self.value[(l >> 1) as usize].map(|v| v == (l & 1 == 1))
    }

    /// Sets `l` and everything it implies; false on a conflict. Partial
    /// work stays on the trail for the caller to undo.
    fn assign(&mut self, l: Lit) -> bool {
        match self.is_true(l) {
            Some(v) => return v,
            None => self.set(l),
        }
        let mut stack = vec![l];
        while let Some(a) = stack.pop() {
            for &b in &self.succ[a as usize] {
                match self.is_true(b) {
                    Some(true) => {}
                    Some(false) => return false,
                    None => {
                        self.set(b);
                        stack.push(b);
                    }
                }
            }
        }
        true
    }

    fn set(&mut self, l: Lit) {
        self.value[(l >> 1) as usize] = Some(l & 1 == 1);
        self.trail.push(l >> 1);
    }

    fn undo(&mut self, to: usize) {
        for v in self.trail.drain(to..) {
            self.value[v as usize] = None;
        }
    }

    /// Open cells joined to `v` by a clause whose cells are both open.
    fn neighbors(&self, v: u32, out: &mut Vec<u32>) {
        for l in [2 * v, 2 * v + 1] {
            for &b in &self.succ[l as usize] {
                let w = b >> 1;
                if w != v && self.value[w as usize].is_none() {
                    out.push(w);
                }
            }
        }
    }

    /// Counts assignments of the open cells in `open`, which must be a
    /// union of connected parts.
    fn count_open(&mut self, open: &[u32]) -> BigUint {
        self.epoch += 1;
        let epoch = self.epoch;
        let mut parts: Vec<Vec<u32>> = Vec::new();
        let mut buf = Vec::new();
        for &s in open {
            if self.mark[s as usize] == epoch || self.value[s as usize].is_some() {
                continue;
            }
            self.mark[s as usize] = epoch;
            let mut part = vec![s];
            let mut i = 0;
            while i < part.len() {
                buf.clear();
                self.neighbors(part[i], &mut buf);
                for &w in &buf {
                    if self.mark[w as usize] != epoch {
                        self.mark[w as usize] = epoch;
                        part.push(w);
                    }
                }
                i += 1;
            }
            parts.push(part);
        }
        let mut total = BigUint::one();
        let mut free = 0u64;
        for mut part in parts {
            if part.len() == 1 {
                free += 1;
                continue;
            }
            part.sort_unstable();
            let n = self.count_part(part);
            if n.is_zero() {
                return n;
            }
            total *= n;
        }
        total << free
    }

    fn count_part(&mut self, part: Vec<u32>) -> BigUint {
        if let Some(n) = self.cache.get(&part) {
            return n.clone();
        }
        let mut buf = Vec::new();
        let mut best = (0, part[0]);
        for &v in &part {
            buf.clear();
            self.neighbors(v, &mut buf);
            if buf.len() > best.0 {
                best = (buf.len(), v);
            }
        }
        let v = best.1;
        let mut n = BigUint::zero();
        for l in [2 * v, 2 * v + 1] {
            let mark = self.trail.len();
            if self.assign(l) {
                n += self.count_open(&part);
            }
            self.undo(mark);
        }
        self.cache.insert(part, n.clone());
        n
    }
}
