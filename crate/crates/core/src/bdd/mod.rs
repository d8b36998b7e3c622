//! Reduced ordered binary decision diagrams over a static variable order.
//!
//! Variables are identified by their level; `new_var` appends a fresh level
//! below all existing ones. Handles ([`Bdd`]) are tagged with the manager
//! that created them and using a handle with a different manager panics.
//!
//! Long operations can be cut short by [`Limits`]: once a deadline passes,
//! the node budget is exhausted or an interrupt flag is raised, the current
//! operation unwinds and [`catch_abort`] turns the unwind into a [`BddAbort`].

mod dot;

use std::panic::{self, AssertUnwindSafe};
use std::sync::atomic::{AtomicBool, AtomicU32, Ordering};
use std::sync::Arc;
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::{BoolExpr, Gate, VarId};

const FALSE: u32 = 0;
const TRUE: u32 = 1;
const TERMINAL: u32 = u32::MAX;

static NEXT_TAG: AtomicU32 = AtomicU32::new(1);

/// Handle to a diagram owned by a [`Manager`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bdd {
    id: u32,
    mgr: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum BddAbort {
    #[error("time limit reached")]
    Timeout,
    #[error("node budget of {0} exhausted")]
    NodeLimit(usize),
    #[error("interrupted")]
    Interrupted,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BddError {
    #[error("variable {0} lies outside the counting universe")]
    OutsideUniverse(u32),
    #[error("expression variable {0:?} has no diagram variable")]
    Unmapped(VarId),
    #[error("rename maps two variables onto {0}")]
    RenameCollision(u32),
}

/// Resource limits checked while new nodes are created.
#[derive(Debug, Clone, Default)]
pub struct Limits {
    pub deadline: Option<Instant>,
    pub max_nodes: Option<usize>,
    pub interrupt: Option<Arc<AtomicBool>>,
}

/// Runs `f`, converting a manager abort into an error. Other panics propagate.
pub fn catch_abort<T>(f: impl FnOnce() -> T) -> Result<T, BddAbort> {
    match panic::catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => Ok(v),
        Err(payload) => match payload.downcast::<BddAbort>() {
            Ok(a) => Err(*a),
            Err(other) => panic::resume_unwind(other),
        },
    }
}

#[derive(Debug, Clone, Copy)]
struct Node {
    var: u32,
    lo: u32,
    hi: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
enum Op {
    And = 1,
    Or,
    Xor,
    Not,
    Ite,
    Exists,
    AndExists,
}

#[derive(Debug, Clone, Copy, Default)]
struct Entry {
    op: u32,
    a: u32,
    b: u32,
    c: u32,
    res: u32,
}

const MIN_CACHE: usize = 1 << 16;
const MAX_CACHE: usize = 1 << 23;

/// Node list independent of any manager, used to move diagrams between
/// threads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Portable {
    pub num_vars: u32,
    /// `(var, lo, hi)`; indices 0 and 1 are the terminals.
    pub nodes: Vec<(u32, u32, u32)>,
    pub roots: Vec<u32>,
}

pub struct Manager {
    tag: u32,
    nodes: Vec<Node>,
    unique: FxHashMap<(u32, u32, u32), u32>,
    cache: Vec<Entry>,
    num_vars: u32,
    limits: Limits,
    created: u64,
}

impl Default for Manager {
    fn default() -> Self {
        Self::new()
    }
}

impl std::fmt::Debug for Manager {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Manager")
            .field("nodes", &self.nodes.len())
            .field("vars", &self.num_vars)
            .finish()
    }
}

fn mix(op: u32, a: u32, b: u32, c: u32) -> u64 {
    let mut h = (op as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    h ^= (a as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    h = h.rotate_left(23) ^ (b as u64).wrapping_mul(0x1656_67B1_9E37_79F9);
    h = h.rotate_left(19) ^ (c as u64).wrapping_mul(0x85EB_CA77_C2B2_AE63);
    h ^ (h >> 29)
}

impl Manager {
    pub fn new() -> Self {
        Manager {
            tag: NEXT_TAG.fetch_add(1, Ordering::Relaxed),
            nodes: vec![
                Node {
                    var: TERMINAL,
                    lo: FALSE,
                    hi: FALSE,
                },
                Node {
                    var: TERMINAL,
                    lo: TRUE,
                    hi: TRUE,
                },
            ],
            unique: FxHashMap::default(),
            cache: vec![Entry::default(); MIN_CACHE],
            num_vars: 0,
            limits: Limits::default(),
            created: 0,
        }
    }

    pub fn with_vars(n: u32) -> Self {
        let mut m = Self::new();
        m.num_vars = n;
        m
    }

    pub fn set_limits(&mut self, limits: Limits) {
        self.limits = limits;
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    /// Total nodes allocated, including terminals.
    pub fn total_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn new_var(&mut self) -> u32 {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn new_vars(&mut self, n: u32) -> Vec<u32> {
        (0..n).map(|_| self.new_var()).collect()
    }

    fn wrap(&self, id: u32) -> Bdd {
        Bdd { id, mgr: self.tag }
    }

    fn raw(&self, b: Bdd) -> u32 {
        assert_eq!(b.mgr, self.tag, "BDD handle used with a foreign manager");
        b.id
    }

    pub fn constant(&self, v: bool) -> Bdd {
        self.wrap(if v { TRUE } else { FALSE })
    }

    pub fn zero(&self) -> Bdd {
        self.constant(false)
    }

    pub fn one(&self) -> Bdd {
        self.constant(true)
    }

    pub fn is_false(&self, f: Bdd) -> bool {
        self.raw(f) == FALSE
    }

    pub fn is_true(&self, f: Bdd) -> bool {
        self.raw(f) == TRUE
    }

    pub fn is_sat(&self, f: Bdd) -> bool {
        !self.is_false(f)
    }

    pub fn var(&mut self, v: u32) -> Bdd {
        assert!(v < self.num_vars, "variable {v} not allocated");
        let id = self.mk(v, FALSE, TRUE);
        self.wrap(id)
    }

    pub fn nvar(&mut self, v: u32) -> Bdd {
        assert!(v < self.num_vars, "variable {v} not allocated");
        let id = self.mk(v, TRUE, FALSE);
        self.wrap(id)
    }

    pub fn lit(&mut self, v: u32, positive: bool) -> Bdd {
        if positive {
            self.var(v)
        } else {
            self.nvar(v)
        }
    }

    /// Top variable, or `None` for a terminal.
    pub fn top_var(&self, f: Bdd) -> Option<u32> {
        let n = self.nodes[self.raw(f) as usize];
        (n.var != TERMINAL).then_some(n.var)
    }

    /// Low and high children of a non-terminal.
    pub fn children(&self, f: Bdd) -> Option<(Bdd, Bdd)> {
        let n = self.nodes[self.raw(f) as usize];
        (n.var != TERMINAL).then(|| (self.wrap(n.lo), self.wrap(n.hi)))
    }

    fn check_limits(&mut self) {
        if let Some(max) = self.limits.max_nodes {
            if self.nodes.len() >= max {
                panic::resume_unwind(Box::new(BddAbort::NodeLimit(max)));
            }
        }
        if let Some(d) = self.limits.deadline {
            if Instant::now() >= d {
                panic::resume_unwind(Box::new(BddAbort::Timeout));
            }
        }
        if let Some(flag) = &self.limits.interrupt {
            if flag.load(Ordering::Relaxed) {
                panic::resume_unwind(Box::new(BddAbort::Interrupted));
            }
        }
    }

    fn mk(&mut self, var: u32, lo: u32, hi: u32) -> u32 {
        if lo == hi {
            return lo;
        }
        if let Some(&id) = self.unique.get(&(var, lo, hi)) {
            return id;
        }
        self.created += 1;
        if self.created & 1023 == 0 {
            self.check_limits();
        }
        let id = self.nodes.len() as u32;
        self.nodes.push(Node { var, lo, hi });
        self.unique.insert((var, lo, hi), id);
        if self.nodes.len() > self.cache.len() * 2 && self.cache.len() < MAX_CACHE {
            let n = (self.cache.len() * 2).min(MAX_CACHE);
            self.cache = vec![Entry::default(); n];
        }
        id
    }

    #[inline]
    fn level(&self, f: u32) -> u32 {
        self.nodes[f as usize].var
    }

    #[inline]
    fn cofactors(&self, f: u32, v: u32) -> (u32, u32) {
        let n = self.nodes[f as usize];
        if n.var == v {
            (n.lo, n.hi)
        } else {
            (f, f)
        }
    }

    #[inline]
    fn cache_get(&self, op: Op, a: u32, b: u32, c: u32) -> Option<u32> {
        let i = (mix(op as u32, a, b, c) as usize) & (self.cache.len() - 1);
        let e = self.cache[i];
        (e.op == op as u32 && e.a == a && e.b == b && e.c == c).then_some(e.res)
    }

    #[inline]
    fn cache_put(&mut self, op: Op, a: u32, b: u32, c: u32, res: u32) {
        let i = (mix(op as u32, a, b, c) as usize) & (self.cache.len() - 1);
        self.cache[i] = Entry {
            op: op as u32,
            a,
            b,
            c,
            res,
        };
    }

    fn not_rec(&mut self, f: u32) -> u32 {
        match f {
            FALSE => return TRUE,
            TRUE => return FALSE,
            _ => {}
        }
        if let Some(r) = self.cache_get(Op::Not, f, 0, 0) {
            return r;
        }
        let n = self.nodes[f as usize];
        let lo = self.not_rec(n.lo);
        let hi = self.not_rec(n.hi);
        let r = self.mk(n.var, lo, hi);
        self.cache_put(Op::Not, f, 0, 0, r);
        r
    }

    fn and_rec(&mut self, a: u32, b: u32) -> u32 {
        if a == FALSE || b == FALSE {
            return FALSE;
        }
        if a == TRUE || a == b {
            return b;
        }
        if b == TRUE {
            return a;
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        if let Some(r) = self.cache_get(Op::And, a, b, 0) {
            return r;
        }
        let v = self.level(a).min(self.level(b));
        let (a0, a1) = self.cofactors(a, v);
        let (b0, b1) = self.cofactors(b, v);
        let lo = self.and_rec(a0, b0);
        let hi = self.and_rec(a1, b1);
        let r = self.mk(v, lo, hi);
        self.cache_put(Op::And, a, b, 0, r);
        r
    }

    fn or_rec(&mut self, a: u32, b: u32) -> u32 {
        if a == TRUE || b == TRUE {
            return TRUE;
        }
        if a == FALSE || a == b {
            return b;
        }
        if b == FALSE {
            return a;
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        if let Some(r) = self.cache_get(Op::Or, a, b, 0) {
            return r;
        }
        let v = self.level(a).min(self.level(b));
        let (a0, a1) = self.cofactors(a, v);
        let (b0, b1) = self.cofactors(b, v);
        let lo = self.or_rec(a0, b0);
        let hi = self.or_rec(a1, b1);
        let r = self.mk(v, lo, hi);
        self.cache_put(Op::Or, a, b, 0, r);
        r
    }

    fn xor_rec(&mut self, a: u32, b: u32) -> u32 {
        if a == b {
            return FALSE;
        }
        if a == FALSE {
            return b;
        }
        if b == FALSE {
            return a;
        }
        if a == TRUE {
            return self.not_rec(b);
        }
        if b == TRUE {
            return self.not_rec(a);
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        if let Some(r) = self.cache_get(Op::Xor, a, b, 0) {
            return r;
        }
        let v = self.level(a).min(self.level(b));
        let (a0, a1) = self.cofactors(a, v);
        let (b0, b1) = self.cofactors(b, v);
        let lo = self.xor_rec(a0, b0);
        let hi = self.xor_rec(a1, b1);
        let r = self.mk(v, lo, hi);
        self.cache_put(Op::Xor, a, b, 0, r);
        r
    }

    fn ite_rec(&mut self, f: u32, g: u32, h: u32) -> u32 {
        match (f, g, h) {
            (TRUE, _, _) => return g,
            (FALSE, _, _) => return h,
            _ if g == h => return g,
            (_, TRUE, FALSE) => return f,
            (_, FALSE, TRUE) => return self.not_rec(f),
            (_, TRUE, _) => return self.or_rec(f, h),
            (_, _, FALSE) => return self.and_rec(f, g),
            _ => {}
        }
        if let Some(r) = self.cache_get(Op::Ite, f, g, h) {
            return r;
        }
        let v = self.level(f).min(self.level(g)).min(self.level(h));
        let (f0, f1) = self.cofactors(f, v);
        let (g0, g1) = self.cofactors(g, v);
        let (h0, h1) = self.cofactors(h, v);
        let lo = self.ite_rec(f0, g0, h0);
        let hi = self.ite_rec(f1, g1, h1);
        let r = self.mk(v, lo, hi);
        self.cache_put(Op::Ite, f, g, h, r);
        r
    }

    fn exists_rec(&mut self, f: u32, mut cube: u32) -> u32 {
        if f <= TRUE {
            return f;
        }
        let v = self.level(f);
        while cube != TRUE && self.level(cube) < v {
            cube = self.nodes[cube as usize].hi;
        }
        if cube == TRUE {
            return f;
        }
        if let Some(r) = self.cache_get(Op::Exists, f, cube, 0) {
            return r;
        }
        let n = self.nodes[f as usize];
        let r = if self.level(cube) == v {
            let rest = self.nodes[cube as usize].hi;
            let lo = self.exists_rec(n.lo, rest);
            if lo == TRUE {
                TRUE
            } else {
                let hi = self.exists_rec(n.hi, rest);
                self.or_rec(lo, hi)
            }
        } else {
            let lo = self.exists_rec(n.lo, cube);
            let hi = self.exists_rec(n.hi, cube);
            self.mk(v, lo, hi)
        };
        self.cache_put(Op::Exists, f, cube, 0, r);
        r
    }

    fn and_exists_rec(&mut self, a: u32, b: u32, mut cube: u32) -> u32 {
        if a == FALSE || b == FALSE {
            return FALSE;
        }
        if a == TRUE && b == TRUE {
            return TRUE;
        }
        if a == TRUE || a == b {
            return self.exists_rec(b, cube);
        }
        if b == TRUE {
            return self.exists_rec(a, cube);
        }
        let (a, b) = if a < b { (a, b) } else { (b, a) };
        let v = self.level(a).min(self.level(b));
        while cube != TRUE && self.level(cube) < v {
            cube = self.nodes[cube as usize].hi;
        }
        if cube == TRUE {
            return self.and_rec(a, b);
        }
        if let Some(r) = self.cache_get(Op::AndExists, a, b, cube) {
            return r;
        }
        let (a0, a1) = self.cofactors(a, v);
        let (b0, b1) = self.cofactors(b, v);
        let r = if self.level(cube) == v {
            let rest = self.nodes[cube as usize].hi;
            let lo = self.and_exists_rec(a0, b0, rest);
            if lo == TRUE {
                TRUE
            } else {
                let hi = self.and_exists_rec(a1, b1, rest);
                self.or_rec(lo, hi)
            }
        } else {
            let lo = self.and_exists_rec(a0, b0, cube);
            let hi = self.and_exists_rec(a1, b1, cube);
            self.mk(v, lo, hi)
        };
        self.cache_put(Op::AndExists, a, b, cube, r);
        r
    }

    pub fn not(&mut self, f: Bdd) -> Bdd {
        let f = self.raw(f);
        let r = self.not_rec(f);
        self.wrap(r)
    }

    pub fn and(&mut self, a: Bdd, b: Bdd) -> Bdd {
        let (a, b) = (self.raw(a), self.raw(b));
        let r = self.and_rec(a, b);
        self.wrap(r)
    }

    pub fn or(&mut self, a: Bdd, b: Bdd) -> Bdd {
        let (a, b) = (self.raw(a), self.raw(b));
        let r = self.or_rec(a, b);
        self.wrap(r)
    }

    pub fn xor(&mut self, a: Bdd, b: Bdd) -> Bdd {
        let (a, b) = (self.raw(a), self.raw(b));
        let r = self.xor_rec(a, b);
        self.wrap(r)
    }

    pub fn iff(&mut self, a: Bdd, b: Bdd) -> Bdd {
        let x = self.xor(a, b);
        self.not(x)
    }

    pub fn implies(&mut self, a: Bdd, b: Bdd) -> Bdd {
        let na = self.not(a);
        self.or(na, b)
    }

    /// `a ∧ ¬b`
    pub fn diff(&mut self, a: Bdd, b: Bdd) -> Bdd {
        let nb = self.not(b);
        self.and(a, nb)
    }

    pub fn ite(&mut self, f: Bdd, g: Bdd, h: Bdd) -> Bdd {
        let (f, g, h) = (self.raw(f), self.raw(g), self.raw(h));
        let r = self.ite_rec(f, g, h);
        self.wrap(r)
    }

    pub fn and_all(&mut self, fs: impl IntoIterator<Item = Bdd>) -> Bdd {
        let mut acc = self.one();
        for f in fs {
            acc = self.and(acc, f);
            if self.is_false(acc) {
                break;
            }
        }
        acc
    }

    pub fn or_all(&mut self, fs: impl IntoIterator<Item = Bdd>) -> Bdd {
        let mut acc = self.zero();
        for f in fs {
            acc = self.or(acc, f);
            if self.is_true(acc) {
                break;
            }
        }
        acc
    }

    /// Conjunction of literals.
    pub fn cube(&mut self, lits: &[(u32, bool)]) -> Bdd {
        let mut lits = lits.to_vec();
        lits.sort_unstable();
        lits.dedup();
        let mut acc = TRUE;
        for w in lits.windows(2) {
            if w[0].0 == w[1].0 {
                return self.zero();
            }
        }
        for &(v, pos) in lits.iter().rev() {
            assert!(v < self.num_vars, "variable {v} not allocated");
            acc = if pos {
                self.mk(v, FALSE, acc)
            } else {
                self.mk(v, acc, FALSE)
            };
        }
        self.wrap(acc)
    }

    /// Positive cube over `vars`, the form expected by the quantifiers.
    pub fn var_cube(&mut self, vars: &[u32]) -> Bdd {
        let lits: Vec<(u32, bool)> = vars.iter().map(|v| (*v, true)).collect();
        self.cube(&lits)
    }

    /// `∃cube. f`
    pub fn exists(&mut self, f: Bdd, cube: Bdd) -> Bdd {
        let (f, c) = (self.raw(f), self.raw(cube));
        let r = self.exists_rec(f, c);
        self.wrap(r)
    }

    pub fn exists_vars(&mut self, f: Bdd, vars: &[u32]) -> Bdd {
        let c = self.var_cube(vars);
        self.exists(f, c)
    }

    /// `∀cube. f`
    pub fn forall(&mut self, f: Bdd, cube: Bdd) -> Bdd {
        let nf = self.not(f);
        let e = self.exists(nf, cube);
        self.not(e)
    }

    /// `∃cube. a ∧ b` without building the conjunction.
    pub fn and_exists(&mut self, a: Bdd, b: Bdd, cube: Bdd) -> Bdd {
        let (a, b, c) = (self.raw(a), self.raw(b), self.raw(cube));
        let r = self.and_exists_rec(a, b, c);
        self.wrap(r)
    }

    /// Fixes `v` to `val`.
    pub fn cofactor(&mut self, f: Bdd, v: u32, val: bool) -> Bdd {
        self.restrict(f, &[(v, val)])
    }

    /// Fixes every variable of `lits`.
    pub fn restrict(&mut self, f: Bdd, lits: &[(u32, bool)]) -> Bdd {
        let map: FxHashMap<u32, bool> = lits.iter().copied().collect();
        let f = self.raw(f);
        let mut memo = FxHashMap::default();
        let r = self.restrict_rec(f, &map, &mut memo);
        self.wrap(r)
    }

    fn restrict_rec(
        &mut self,
        f: u32,
        map: &FxHashMap<u32, bool>,
        memo: &mut FxHashMap<u32, u32>,
    ) -> u32 {
        if f <= TRUE {
            return f;
        }
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let n = self.nodes[f as usize];
        let r = match map.get(&n.var) {
            Some(true) => self.restrict_rec(n.hi, map, memo),
            Some(false) => self.restrict_rec(n.lo, map, memo),
            None => {
                let lo = self.restrict_rec(n.lo, map, memo);
                let hi = self.restrict_rec(n.hi, map, memo);
                self.mk(n.var, lo, hi)
            }
        };
        memo.insert(f, r);
        r
    }

    /// Simultaneous substitution of diagrams for variables.
    pub fn compose(&mut self, f: Bdd, subst: &[(u32, Bdd)]) -> Bdd {
        let f = self.raw(f);
        let map: FxHashMap<u32, u32> = subst.iter().map(|(v, g)| (*v, self.raw(*g))).collect();
        let Some(&max) = map.keys().max() else {
            return self.wrap(f);
        };
        let mut memo = FxHashMap::default();
        let r = self.compose_rec(f, &map, max, &mut memo);
        self.wrap(r)
    }

    fn compose_rec(
        &mut self,
        f: u32,
        map: &FxHashMap<u32, u32>,
        max: u32,
        memo: &mut FxHashMap<u32, u32>,
    ) -> u32 {
        if f <= TRUE || self.level(f) > max {
            return f;
        }
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let n = self.nodes[f as usize];
        let lo = self.compose_rec(n.lo, map, max, memo);
        let hi = self.compose_rec(n.hi, map, max, memo);
        let g = match map.get(&n.var) {
            Some(&g) => g,
            None => self.mk(n.var, FALSE, TRUE),
        };
        let r = self.ite_rec(g, hi, lo);
        memo.insert(f, r);
        r
    }

    /// Renames variables. Uses a structural copy when the renaming keeps
    /// the relative order of the support, and composition otherwise.
    pub fn rename(&mut self, f: Bdd, pairs: &[(u32, u32)]) -> Result<Bdd, BddError> {
        let map: FxHashMap<u32, u32> = pairs.iter().copied().collect();
        let mut targets = FxHashSet::default();
        for t in map.values() {
            if !targets.insert(*t) {
                return Err(BddError::RenameCollision(*t));
            }
        }
        let support = self.support(f);
        let images: Vec<u32> = support
            .iter()
            .map(|v| map.get(v).copied().unwrap_or(*v))
            .collect();
        if images.windows(2).all(|w| w[0] < w[1]) {
            let f = self.raw(f);
            let mut memo = FxHashMap::default();
            let r = self.rename_rec(f, &map, &mut memo);
            return Ok(self.wrap(r));
        }
        let subst: Vec<(u32, Bdd)> = map
            .iter()
            .filter(|(a, b)| a != b)
            .map(|(&a, &b)| (a, self.var(b)))
            .collect();
        Ok(self.compose(f, &subst))
    }

    /// Diagram of `e`, with expression variables placed by `map`.
    pub fn build(
        &mut self,
        e: &BoolExpr,
        map: &dyn Fn(VarId) -> Option<u32>,
    ) -> Result<Bdd, BddError> {
        let mut vals: FxHashMap<u32, Bdd> = FxHashMap::default();
        for g in e.reachable() {
            let get = |x: &crate::formula::GateId| vals[&x.0];
            let r = match e.gate(g) {
                Gate::Const(b) => self.constant(*b),
                Gate::Var(v) => {
                    let dv = map(*v).ok_or(BddError::Unmapped(*v))?;
                    self.var(dv)
                }
                Gate::Not(a) => self.not(get(a)),
                Gate::And(xs) => {
                    let xs: Vec<Bdd> = xs.iter().map(get).collect();
                    self.and_all(xs)
                }
                Gate::Or(xs) => {
                    let xs: Vec<Bdd> = xs.iter().map(get).collect();
                    self.or_all(xs)
                }
                Gate::Xor(xs) => {
                    let xs: Vec<Bdd> = xs.iter().map(get).collect();
                    let mut acc = self.zero();
                    for x in xs {
                        acc = self.xor(acc, x);
                    }
                    acc
                }
                Gate::Iff(a, b) => self.iff(get(a), get(b)),
                Gate::Implies(a, b) => self.implies(get(a), get(b)),
                Gate::Ite(c, t, f) => self.ite(get(c), get(t), get(f)),
            };
            vals.insert(g.0, r);
        }
        Ok(vals[&e.root().0])
    }

    fn rename_rec(
        &mut self,
        f: u32,
        map: &FxHashMap<u32, u32>,
        memo: &mut FxHashMap<u32, u32>,
    ) -> u32 {
        if f <= TRUE {
            return f;
        }
        if let Some(&r) = memo.get(&f) {
            return r;
        }
        let n = self.nodes[f as usize];
        let lo = self.rename_rec(n.lo, map, memo);
        let hi = self.rename_rec(n.hi, map, memo);
        let v = map.get(&n.var).copied().unwrap_or(n.var);
        let r = self.mk(v, lo, hi);
        memo.insert(f, r);
        r
    }

    /// Sorted list of the variables `f` depends on.
    pub fn support(&self, f: Bdd) -> Vec<u32> {
        let f = self.raw(f);
        let mut seen = FxHashSet::default();
        let mut vars = FxHashSet::default();
        let mut stack = vec![f];
        while let Some(x) = stack.pop() {
            if x <= TRUE || !seen.insert(x) {
                continue;
            }
            let n = self.nodes[x as usize];
            vars.insert(n.var);
            stack.push(n.lo);
            stack.push(n.hi);
        }
        let mut v: Vec<u32> = vars.into_iter().collect();
        v.sort_unstable();
        v
    }

    /// Number of internal nodes reachable from `f`.
    pub fn node_count(&self, f: Bdd) -> usize {
        let f = self.raw(f);
        let mut seen = FxHashSet::default();
        let mut stack = vec![f];
        while let Some(x) = stack.pop() {
            if x <= TRUE || !seen.insert(x) {
                continue;
            }
            let n = self.nodes[x as usize];
            stack.push(n.lo);
            stack.push(n.hi);
        }
        seen.len()
    }

    pub fn eval(&self, f: Bdd, value: impl Fn(u32) -> bool) -> bool {
        let mut x = self.raw(f);
        while x > TRUE {
            let n = self.nodes[x as usize];
            x = if value(n.var) { n.hi } else { n.lo };
        }
        x == TRUE
    }

    /// Number of assignments to `universe` satisfying `f`. The support of
    /// `f` must be contained in `universe`.
    pub fn count_models(&self, f: Bdd, universe: &[u32]) -> Result<BigUint, BddError> {
        let mut sorted = universe.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        let pos: FxHashMap<u32, u32> = sorted
            .iter()
            .enumerate()
            .map(|(i, v)| (*v, i as u32))
            .collect();
        let len = sorted.len() as u32;
        let f = self.raw(f);
        let mut memo: FxHashMap<u32, BigUint> = FxHashMap::default();
        let level = |x: u32| -> Result<u32, BddError> {
            if x <= TRUE {
                Ok(len)
            } else {
                let v = self.nodes[x as usize].var;
                pos.get(&v).copied().ok_or(BddError::OutsideUniverse(v))
            }
        };
        // Iterative post-order to keep the stack shallow on deep diagrams.
        let mut stack = vec![(f, false)];
        while let Some((x, expanded)) = stack.pop() {
            if x <= TRUE || memo.contains_key(&x) {
                continue;
            }
            let n = self.nodes[x as usize];
            if !expanded {
                stack.push((x, true));
                stack.push((n.lo, false));
                stack.push((n.hi, false));
                continue;
            }
            let p = level(x)?;
            let part = |c: u32, memo: &FxHashMap<u32, BigUint>| -> Result<BigUint, BddError> {
                let base = match c {
                    FALSE => return Ok(BigUint::zero()),
                    TRUE => BigUint::one(),
                    _ => memo[&c].clone(),
                };
                Ok(base << (level(c)? - p - 1))
            };
            let total = part(n.lo, &memo)? + part(n.hi, &memo)?;
            memo.insert(x, total);
        }
        Ok(match f {
            FALSE => BigUint::zero(),
            TRUE => BigUint::one() << len,
            _ => memo[&f].clone() << level(f)?,
        })
    }

    /// A satisfying partial assignment along the lexicographically least
    /// path (low branches first). `None` when `f` is unsatisfiable.
    pub fn pick_cube(&self, f: Bdd) -> Option<Vec<(u32, bool)>> {
        let mut x = self.raw(f);
        if x == FALSE {
            return None;
        }
        let mut out = Vec::new();
        while x > TRUE {
            let n = self.nodes[x as usize];
            if n.lo != FALSE {
                out.push((n.var, false));
                x = n.lo;
            } else {
                out.push((n.var, true));
                x = n.hi;
            }
        }
        Some(out)
    }

    /// Like [`pick_cube`](Self::pick_cube) but assigns every variable of
    /// `vars`, using `false` for variables the path leaves open.
    pub fn pick_assignment(&self, f: Bdd, vars: &[u32]) -> Option<Vec<bool>> {
        let cube: FxHashMap<u32, bool> = self.pick_cube(f)?.into_iter().collect();
        Some(
            vars.iter()
                .map(|v| cube.get(v).copied().unwrap_or(false))
                .collect(),
        )
    }

    /// Satisfying assignments of `f` over `vars` (at most 64), as integers
    /// with bit `j` holding `vars[j]`. `None` when more than `limit` exist.
    /// `vars` must be in ascending order and contain the support of `f`.
    pub fn minterms(&self, f: Bdd, vars: &[u32], limit: usize) -> Option<Vec<u64>> {
        assert!(vars.len() <= 64);
        debug_assert!(vars.windows(2).all(|w| w[0] < w[1]));
        let mut out = Vec::new();
        let mut stack = vec![(self.raw(f), 0usize, 0u64)];
        while let Some((x, depth, acc)) = stack.pop() {
            if x == FALSE {
                continue;
            }
            if depth == vars.len() {
                debug_assert_eq!(x, TRUE, "support escapes the listed variables");
                out.push(acc);
                if out.len() > limit {
                    return None;
                }
                continue;
            }
            let v = vars[depth];
            let (lo, hi) = self.cofactors(x, v);
            stack.push((hi, depth + 1, acc | 1 << depth));
            stack.push((lo, depth + 1, acc));
        }
        out.sort_unstable();
        Some(out)
    }

    pub fn export(&self, roots: &[Bdd]) -> Portable {
        let mut index: FxHashMap<u32, u32> = FxHashMap::default();
        index.insert(FALSE, 0);
        index.insert(TRUE, 1);
        let mut nodes = Vec::new();
        let mut stack: Vec<(u32, bool)> = roots.iter().map(|r| (self.raw(*r), false)).collect();
        while let Some((x, expanded)) = stack.pop() {
            if index.contains_key(&x) {
                continue;
            }
            let n = self.nodes[x as usize];
            if !expanded {
                stack.push((x, true));
                stack.push((n.lo, false));
                stack.push((n.hi, false));
                continue;
            }
            index.insert(x, nodes.len() as u32 + 2);
            nodes.push((n.var, index[&n.lo], index[&n.hi]));
        }
        Portable {
            num_vars: self.num_vars,
            nodes,
            roots: roots.iter().map(|r| index[&self.raw(*r)]).collect(),
        }
    }

    pub fn import(&mut self, p: &Portable) -> Vec<Bdd> {
        self.num_vars = self.num_vars.max(p.num_vars);
        let mut local = vec![FALSE, TRUE];
        for &(v, lo, hi) in &p.nodes {
            let id = self.mk(v, local[lo as usize], local[hi as usize]);
            local.push(id);
        }
        p.roots.iter().map(|r| self.wrap(local[*r as usize])).collect()
    }

    /// Graphviz rendering; `name` labels variables.
    pub fn to_dot(&self, roots: &[(String, Bdd)], name: &dyn Fn(u32) -> String) -> String {
        let raw: Vec<(String, u32)> = roots.iter().map(|(l, r)| (l.clone(), self.raw(*r))).collect();
        dot::render(&self.nodes_view(), &raw, name)
    }

    fn nodes_view(&self) -> Vec<(u32, u32, u32)> {
        self.nodes.iter().map(|n| (n.var, n.lo, n.hi)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(m: &Manager, f: Bdd, n: u32) -> u64 {
        (0..1u64 << n)
            .filter(|a| m.eval(f, |v| a >> v & 1 == 1))
            .count() as u64
    }

    #[test]
    fn basic_algebra() {
        let mut m = Manager::with_vars(3);
        let (a, b, c) = (m.var(0), m.var(1), m.var(2));
        let ab = m.and(a, b);
        let ba = m.and(b, a);
        assert_eq!(ab, ba);
        let na = m.not(a);
        let t = m.or(a, na);
        assert!(m.is_true(t));
        let f = m.ite(a, b, c);
        assert_eq!(brute(&m, f, 3), 4);
        let x = m.xor(a, a);
        assert!(m.is_false(x));
        let i = m.iff(b, c);
        assert_eq!(brute(&m, i, 3), 4);
        assert_eq!(m.count_models(i, &[0, 1, 2]).unwrap(), BigUint::from(4u32));
        assert_eq!(m.count_models(i, &[1, 2, 7]).unwrap(), BigUint::from(4u32));
        assert!(m.count_models(f, &[1, 2]).is_err());
    }

    #[test]
    fn quantification_matches_definition() {
        let mut m = Manager::with_vars(4);
        let v: Vec<Bdd> = (0..4).map(|i| m.var(i)).collect();
        let f1 = m.and(v[0], v[1]);
        let f2 = m.xor(v[2], v[3]);
        let f3 = m.and(v[1], v[3]);
        let f12 = m.or(f1, f2);
        let f = m.or(f12, f3);
        let g = m.iff(v[1], v[2]);
        let cube = m.var_cube(&[1, 3]);
        let ex = m.exists(f, cube);
        let c0 = m.restrict(f, &[(1, false), (3, false)]);
        let c1 = m.restrict(f, &[(1, false), (3, true)]);
        let c2 = m.restrict(f, &[(1, true), (3, false)]);
        let c3 = m.restrict(f, &[(1, true), (3, true)]);
        let expect = m.or_all([c0, c1, c2, c3]);
        assert_eq!(ex, expect);
        let fg = m.and(f, g);
        let direct = m.exists(fg, cube);
        assert_eq!(m.and_exists(f, g, cube), direct);
        let fa = m.forall(f, cube);
        let expect = m.and_all([c0, c1, c2, c3]);
        assert_eq!(fa, expect);
    }

    #[test]
    fn rename_and_compose() {
        let mut m = Manager::with_vars(4);
        let (a, b) = (m.var(0), m.var(1));
        let f = m.implies(a, b);
        let up = m.rename(f, &[(0, 2), (1, 3)]).unwrap();
        let (c, d) = (m.var(2), m.var(3));
        assert_eq!(up, m.implies(c, d));
        let swapped = m.rename(f, &[(0, 1), (1, 0)]).unwrap();
        assert_eq!(m.rename(f, &[(0, 0), (1, 1)]).unwrap(), f);
        assert!(m.rename(f, &[(0, 2), (1, 2)]).is_err());
        assert_eq!(swapped, m.implies(b, a));
        let nb = m.not(b);
        let comp = m.compose(f, &[(0, nb)]);
        assert_eq!(comp, b);
    }

    #[test]
    fn cubes_and_export() {
        let mut m = Manager::with_vars(3);
        let f = m.cube(&[(2, true), (0, false)]);
        assert_eq!(m.pick_cube(f).unwrap(), vec![(0, false), (2, true)]);
        assert_eq!(m.pick_assignment(f, &[0, 1, 2]).unwrap(), vec![false, false, true]);
        let z = m.zero();
        assert!(m.pick_cube(z).is_none());
        let p = m.export(&[f]);
        let mut m2 = Manager::new();
        let g = m2.import(&p)[0];
        assert_eq!(m2.count_models(g, &[0, 1, 2]).unwrap(), BigUint::from(2u32));
        assert_eq!(m2.support(g), vec![0, 2]);
    }

    #[test]
    fn abort_on_node_budget() {
        let mut m = Manager::with_vars(64);
        m.set_limits(Limits {
            max_nodes: Some(2000),
            ..Limits::default()
        });
        let r = catch_abort(|| {
            let mut acc = m.zero();
            for i in 0..32 {
                let a = m.var(i);
                let b = m.var(63 - i);
                let t = m.and(a, b);
                acc = m.xor(acc, t);
            }
            acc
        });
        assert_eq!(r, Err(BddAbort::NodeLimit(2000)));
    }

    #[test]
    #[should_panic(expected = "foreign manager")]
    fn foreign_handles_panic() {
        let mut m1 = Manager::with_vars(1);
        let mut m2 = Manager::with_vars(1);
        let a = m1.var(0);
        m2.not(a);
    }
}
