//! Per-component counting by symbolic case splitting.
//!
//! A literal set `U` closed under negation stands for the unassigned cells.
//! Weak components of the residual graph whose edges all stay inside
//! strongly connected components contribute one free choice per pair of
//! SCCs `{S, ¬S}`; the others are split on a literal, with results cached
//! per literal set. Components small enough to list are handed to the
//! explicit search instead. Recursion depth grows with the number of cells, so
//! callers should run this on a thread with a large stack.

use rustc_hash::FxHashMap;

use super::component::Component;
use super::explicit;
use super::CountError;
use crate::bdd::{Bdd, Manager};
use crate::bigcount::BigCount;
use crate::reachability::{Implication, Slot};

#[derive(Debug, Clone, Default)]
pub struct BranchStats {
    pub branches: u64,
    pub cache_hits: u64,
    /// Counted by the explicit search rather than by splitting.
    pub explicit: bool,
}

#[derive(Debug, Clone)]
pub struct Branched {
    pub n_c: BigCount,
    pub stats: BranchStats,
}

struct Brancher<'a> {
    mgr: &'a mut Manager,
    imp: &'a Implication,
    tr: Bdd,
    /// Edges whose target does not reach back to the source.
    one_way: Bdd,
    /// Literals with a smaller member in their SCC.
    has_smaller: Bdd,
    /// Residual adjacency before restriction to `U`.
    adj: Bdd,
    /// Literals `ℓ` (in `Next`) with a path `¬ℓ → ℓ`.
    self_forced: Bdd,
    cache: FxHashMap<Bdd, BigCount>,
    stats: BranchStats,
}

impl Brancher<'_> {
    fn at_next(&mut self, u: Bdd) -> Bdd {
        self.imp.space.rename(self.mgr, u, &[(Slot::Cur, Slot::Next)])
    }

    fn close(&mut self, u: Bdd, seed: Bdd) -> Bdd {
        let un = self.at_next(u);
        let adj = self.mgr.and(self.adj, un);
        self.imp.close_under(self.mgr, adj, seed)
    }

    fn count_set(&mut self, u: Bdd) -> Result<BigCount, CountError> {
        if self.mgr.is_false(u) {
            return Ok(BigCount::one());
        }
        if let Some(c) = self.cache.get(&u) {
            self.stats.cache_hits += 1;
            return Ok(c.clone());
        }
        let sp = self.imp.space.clone();
        let un = self.at_next(u);
        let forced = self.mgr.and(self.self_forced, un);
        if self.mgr.is_sat(forced) {
            // Unit propagation: forced cells have a single value.
            let forced = sp.rename(self.mgr, forced, &[(Slot::Next, Slot::Cur)]);
            let neg = sp.negate_set(self.mgr, forced, Slot::Cur);
            let clash = self.mgr.and(forced, neg);
            let total = if self.mgr.is_sat(clash) {
                BigCount::zero()
            } else {
                let fixed = self.mgr.or(forced, neg);
                let rest = self.mgr.diff(u, fixed);
                self.count_set(rest)?
            };
            self.cache.insert(u, total.clone());
            return Ok(total);
        }
        let next = sp.slot_cube(self.mgr, Slot::Next);
        let out = self.mgr.and_exists(self.one_way, un, next);
        let asym = self.mgr.and(out, u);

        // One closure per impure component; what is never reached is pure.
        let mut total = BigCount::one();
        let mut impure = self.mgr.zero();
        let mut seeds = asym;
        while let Some(cube) = self.mgr.pick_cube(seeds) {
            let l = sp.decode(Slot::Cur, &cube);
            let a = sp.lit(self.mgr, Slot::Cur, l);
            let b = sp.lit(self.mgr, Slot::Cur, l.negate());
            let pair = self.mgr.or(a, b);
            let comp = self.close(u, pair);
            seeds = self.mgr.diff(seeds, comp);
            impure = self.mgr.or(impure, comp);
            let asym_here = self.mgr.and(asym, comp);
            let n = self.count_comp(comp, asym_here)?;
            if n.is_zero() {
                self.cache.insert(u, BigCount::zero());
                return Ok(BigCount::zero());
            }
            total = total.mul(&n);
        }
        let pure = self.mgr.diff(u, impure);
        let reps = self.mgr.diff(pure, self.has_smaller);
        let sccs = self.mgr.count_models(reps, &sp.slot_vars(Slot::Cur))?;
        total = total.mul(&BigCount::from_pow2(sccs >> 1u32));
        self.cache.insert(u, total.clone());
        Ok(total)
    }

    fn count_comp(&mut self, c: Bdd, asym: Bdd) -> Result<BigCount, CountError> {
        if let Some(n) = self.cache.get(&c) {
            self.stats.cache_hits += 1;
            return Ok(n.clone());
        }
        let sp = self.imp.space.clone();
        let pick = if self.mgr.is_sat(asym) { asym } else { c };
        let cube = self.mgr.pick_cube(pick).expect("component is nonempty");
        let l = sp.decode(Slot::Cur, &cube);
        let mut n = BigCount::zero();
        for branch in [l, l.negate()] {
            self.stats.branches += 1;
            let lit = sp.lit(self.mgr, Slot::Cur, branch);
            let img = self.imp.image(self.mgr, self.tr, lit);
            let p = self.mgr.or(lit, img);
            let np = sp.negate_set(self.mgr, p, Slot::Cur);
            let clash = self.mgr.and(p, np);
            if self.mgr.is_sat(clash) {
                continue;
            }
            let assigned = self.mgr.or(p, np);
            let rest = self.mgr.diff(c, assigned);
            let r = self.count_set(rest)?;
            n = n.add(&r);
        }
        self.cache.insert(c, n.clone());
        Ok(n)
    }
}

/// `a < b` on the literal encodings of two slots, most significant
/// variable first.
fn less_than(mgr: &mut Manager, imp: &Implication, a: Slot, b: Slot) -> Bdd {
    let av = imp.space.slot_vars(a);
    let bv = imp.space.slot_vars(b);
    let mut lt = mgr.zero();
    for (x, y) in av.iter().zip(&bv).rev() {
        let (vx, vy) = (mgr.var(*x), mgr.var(*y));
        let nx = mgr.not(vx);
        let strict = mgr.and(nx, vy);
        let eq = mgr.iff(vx, vy);
        let tail = mgr.and(eq, lt);
        lt = mgr.or(strict, tail);
    }
    lt
}

/// Counts the models of a component's clauses, listing them explicitly
/// when they are few and splitting symbolically otherwise.
pub fn count_component(
    mgr: &mut Manager,
    imp: &Implication,
    tr: Bdd,
    comp: &Component,
) -> Result<Branched, CountError> {
    count_with(mgr, imp, tr, comp, true)
}

/// Counts by symbolic splitting only.
pub fn count_symbolic(
    mgr: &mut Manager,
    imp: &Implication,
    tr: Bdd,
    comp: &Component,
) -> Result<Branched, CountError> {
    count_with(mgr, imp, tr, comp, false)
}

fn count_with(
    mgr: &mut Manager,
    imp: &Implication,
    tr: Bdd,
    comp: &Component,
    explicit_allowed: bool,
) -> Result<Branched, CountError> {
    let sp = &imp.space;
    let lits = comp.lits;
    let lits_next = sp.rename(mgr, lits, &[(Slot::Cur, Slot::Next)]);
    let inside = mgr.and(lits, lits_next);
    let edges = mgr.and(imp.edges, inside);
    let tr = mgr.and(tr, inside);
    let back = sp.swap(mgr, tr, Slot::Cur, Slot::Next);
    let one_way = mgr.diff(edges, back);
    let scc = mgr.and(tr, back);
    let lt = less_than(mgr, imp, Slot::Next, Slot::Cur);
    let smaller = mgr.and(scc, lt);
    let next = sp.slot_cube(mgr, Slot::Next);
    let has_smaller = mgr.exists(smaller, next);
    let neg = sp.negated(mgr, Slot::Cur, Slot::Next);
    let adj = mgr.or_all([tr, back, neg]);
    let from_neg = mgr.and(tr, neg);
    let cur = sp.slot_cube(mgr, Slot::Cur);
    let self_forced = mgr.exists(from_neg, cur);
    if explicit_allowed {
        // Every literal equals the representative of its SCC.
        let reps = mgr.diff(lits, has_smaller);
        if let Some(n) = explicit::count(mgr, imp, tr, reps, self_forced) {
            return Ok(Branched {
                n_c: BigCount::from_biguint(&n),
                stats: BranchStats {
                    explicit: true,
                    ..BranchStats::default()
                },
            });
        }
    }

    let mut b = Brancher {
        mgr,
        imp,
        tr,
        one_way,
        has_smaller,
        adj,
        self_forced,
        cache: FxHashMap::default(),
        stats: BranchStats::default(),
    };
    let n_c = b.count_set(lits)?;
    Ok(Branched {
        n_c,
        stats: b.stats,
    })
}
