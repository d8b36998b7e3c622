use rustc_hash::FxHashMap;

use super::VarId;

/// Index of a gate inside a [`BoolExpr`] arena.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GateId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Gate {
    Const(bool),
    Var(VarId),
    Not(GateId),
    And(Vec<GateId>),
    Or(Vec<GateId>),
    /// n-ary parity
    Xor(Vec<GateId>),
    Iff(GateId, GateId),
    Implies(GateId, GateId),
    Ite(GateId, GateId, GateId),
}

impl Gate {
    pub fn children(&self) -> Vec<GateId> {
        match self {
            Gate::Const(_) | Gate::Var(_) => Vec::new(),
            Gate::Not(a) => vec![*a],
            Gate::And(xs) | Gate::Or(xs) | Gate::Xor(xs) => xs.clone(),
            Gate::Iff(a, b) | Gate::Implies(a, b) => vec![*a, *b],
            Gate::Ite(c, t, e) => vec![*c, *t, *e],
        }
    }
}

/// A Boolean circuit: gates are stored children-first, so the arena is
/// acyclic by construction. Identical gates are shared.
#[derive(Debug, Clone)]
pub struct BoolExpr {
    gates: Vec<Gate>,
    root: GateId,
}

impl BoolExpr {
    pub fn root(&self) -> GateId {
        self.root
    }

    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id.0 as usize]
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn constant(v: bool) -> BoolExpr {
        let mut b = ExprBuilder::new();
        let r = b.constant(v);
        b.finish(r)
    }

    /// Gates reachable from the root, children before parents.
    pub fn reachable(&self) -> Vec<GateId> {
        let mut seen = vec![false; self.gates.len()];
        let mut order = Vec::new();
        let mut stack = vec![(self.root, false)];
        while let Some((g, expanded)) = stack.pop() {
            if expanded {
                order.push(g);
                continue;
            }
            if seen[g.0 as usize] {
                continue;
            }
            seen[g.0 as usize] = true;
            stack.push((g, true));
            for c in self.gate(g).children().into_iter().rev() {
                if !seen[c.0 as usize] {
                    stack.push((c, false));
                }
            }
        }
        order
    }

    /// Variables occurring under the root, sorted.
    pub fn variables(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self
            .reachable()
            .into_iter()
            .filter_map(|g| match self.gate(g) {
                Gate::Var(v) => Some(*v),
                _ => None,
            })
            .collect();
        vs.sort();
        vs.dedup();
        vs
    }

    /// Generic bottom-up evaluation over any Boolean-like domain.
    pub fn fold<T: Clone>(
        &self,
        mut leaf: impl FnMut(VarId) -> T,
        mut node: impl FnMut(&Gate, &[T]) -> T,
    ) -> T {
        let order = self.reachable();
        let mut vals: FxHashMap<GateId, T> = FxHashMap::default();
        for g in order {
            let gate = self.gate(g);
            let v = match gate {
                Gate::Var(x) => leaf(*x),
                _ => {
                    let args: Vec<T> = gate.children().iter().map(|c| vals[c].clone()).collect();
                    node(gate, &args)
                }
            };
            vals.insert(g, v);
        }
        vals.remove(&self.root).expect("root evaluated")
    }

    pub fn eval(&self, value: impl Fn(VarId) -> bool) -> bool {
        self.eval_words(|v| if value(v) { !0 } else { 0 }) & 1 == 1
    }

    /// Evaluates 64 assignments at once; `value(v)` gives the lane bits of `v`.
    pub fn eval_words(&self, value: impl Fn(VarId) -> u64) -> u64 {
        let order = self.reachable();
        let mut vals = vec![0u64; self.gates.len()];
        for g in order {
            let get = |x: &GateId| vals[x.0 as usize];
            let v = match self.gate(g) {
                Gate::Const(b) => {
                    if *b {
                        !0
                    } else {
                        0
                    }
                }
                Gate::Var(x) => value(*x),
                Gate::Not(a) => !get(a),
                Gate::And(xs) => xs.iter().fold(!0, |acc, x| acc & get(x)),
                Gate::Or(xs) => xs.iter().fold(0, |acc, x| acc | get(x)),
                Gate::Xor(xs) => xs.iter().fold(0, |acc, x| acc ^ get(x)),
                Gate::Iff(a, b) => !(get(a) ^ get(b)),
                Gate::Implies(a, b) => !get(a) | get(b),
                Gate::Ite(c, t, e) => (get(c) & get(t)) | (!get(c) & get(e)),
            };
            vals[g.0 as usize] = v;
        }
        vals[self.root.0 as usize]
    }

    /// Rebuilds the reachable part in depth-first post order with sharing.
    /// Two expressions are structurally equal iff their canonical forms are.
    pub fn canonical(&self) -> BoolExpr {
        let mut b = ExprBuilder::new();
        let root = b.import(self, self.root, &|v| v);
        b.finish(root)
    }

    /// Copy with every variable renamed through `map`.
    pub fn map_vars(&self, map: impl Fn(VarId) -> VarId) -> BoolExpr {
        let mut b = ExprBuilder::new();
        let root = b.import(self, self.root, &map);
        b.finish(root)
    }
}

impl PartialEq for BoolExpr {
    fn eq(&self, other: &Self) -> bool {
        let a = self.canonical();
        let b = other.canonical();
        a.gates == b.gates && a.root == b.root
    }
}

impl Eq for BoolExpr {}

/// Hash-consing builder for [`BoolExpr`].
#[derive(Debug, Default, Clone)]
pub struct ExprBuilder {
    gates: Vec<Gate>,
    table: FxHashMap<Gate, GateId>,
}

impl ExprBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, g: Gate) -> GateId {
        if let Some(id) = self.table.get(&g) {
            return *id;
        }
        let id = GateId(self.gates.len() as u32);
        self.gates.push(g.clone());
        self.table.insert(g, id);
        id
    }

    pub fn constant(&mut self, v: bool) -> GateId {
        self.push(Gate::Const(v))
    }

    pub fn var(&mut self, v: VarId) -> GateId {
        self.push(Gate::Var(v))
    }

    pub fn lit(&mut self, v: VarId, positive: bool) -> GateId {
        let x = self.var(v);
        if positive {
            x
        } else {
            self.not(x)
        }
    }

    pub fn not(&mut self, a: GateId) -> GateId {
        self.push(Gate::Not(a))
    }

    pub fn and(&mut self, xs: Vec<GateId>) -> GateId {
        match xs.len() {
            0 => self.constant(true),
            1 => xs[0],
            _ => self.push(Gate::And(xs)),
        }
    }

    pub fn or(&mut self, xs: Vec<GateId>) -> GateId {
        match xs.len() {
            0 => self.constant(false),
            1 => xs[0],
            _ => self.push(Gate::Or(xs)),
        }
    }

    pub fn xor(&mut self, xs: Vec<GateId>) -> GateId {
        match xs.len() {
            0 => self.constant(false),
            1 => xs[0],
            _ => self.push(Gate::Xor(xs)),
        }
    }

    pub fn and2(&mut self, a: GateId, b: GateId) -> GateId {
        self.and(vec![a, b])
    }

    pub fn or2(&mut self, a: GateId, b: GateId) -> GateId {
        self.or(vec![a, b])
    }

    pub fn xor2(&mut self, a: GateId, b: GateId) -> GateId {
        self.xor(vec![a, b])
    }

    pub fn iff(&mut self, a: GateId, b: GateId) -> GateId {
        self.push(Gate::Iff(a, b))
    }

    pub fn implies(&mut self, a: GateId, b: GateId) -> GateId {
        self.push(Gate::Implies(a, b))
    }

    pub fn ite(&mut self, c: GateId, t: GateId, e: GateId) -> GateId {
        self.push(Gate::Ite(c, t, e))
    }

    /// Bitwise equality of two equally long variable vectors.
    pub fn vars_equal(&mut self, xs: &[VarId], ys: &[VarId]) -> GateId {
        assert_eq!(xs.len(), ys.len(), "vectors of different width");
        let parts = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let a = self.var(*x);
                let b = self.var(*y);
                self.iff(a, b)
            })
            .collect();
        self.and(parts)
    }

    /// `xs` read as a little-endian unsigned number equals `value`.
    pub fn vars_equal_const(&mut self, xs: &[VarId], value: u64) -> GateId {
        let parts = xs
            .iter()
            .enumerate()
            .map(|(j, x)| self.lit(*x, (value >> j) & 1 == 1))
            .collect();
        self.and(parts)
    }

    /// Copies the sub-circuit of `src` rooted at `g` into this builder.
    pub fn import(&mut self, src: &BoolExpr, g: GateId, map: &dyn Fn(VarId) -> VarId) -> GateId {
        let mut memo: FxHashMap<GateId, GateId> = FxHashMap::default();
        let mut stack = vec![(g, false)];
        while let Some((cur, expanded)) = stack.pop() {
            if memo.contains_key(&cur) {
                continue;
            }
            let gate = src.gate(cur);
            if !expanded {
                stack.push((cur, true));
                for c in gate.children().into_iter().rev() {
                    if !memo.contains_key(&c) {
                        stack.push((c, false));
                    }
                }
                continue;
            }
            let m = |x: &GateId| memo[x];
            let new = match gate {
                Gate::Const(b) => self.constant(*b),
                Gate::Var(v) => self.var(map(*v)),
                Gate::Not(a) => {
                    let a = m(a);
                    self.not(a)
                }
                Gate::And(xs) => {
                    let xs = xs.iter().map(m).collect();
                    self.and(xs)
                }
                Gate::Or(xs) => {
                    let xs = xs.iter().map(m).collect();
                    self.or(xs)
                }
                Gate::Xor(xs) => {
                    let xs = xs.iter().map(m).collect();
                    self.xor(xs)
                }
                Gate::Iff(a, b) => {
                    let (a, b) = (m(a), m(b));
                    self.iff(a, b)
                }
                Gate::Implies(a, b) => {
                    let (a, b) = (m(a), m(b));
                    self.implies(a, b)
                }
                Gate::Ite(c, t, e) => {
                    let (c, t, e) = (m(c), m(t), m(e));
                    self.ite(c, t, e)
                }
            };
            memo.insert(cur, new);
        }
        memo[&g]
    }

    pub fn finish(self, root: GateId) -> BoolExpr {
        BoolExpr {
            gates: self.gates,
            root,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sharing_and_evaluation() {
        let mut b = ExprBuilder::new();
        let x = b.var(VarId(0));
        let y = b.var(VarId(1));
        let a1 = b.and2(x, y);
        let a2 = b.and2(x, y);
        assert_eq!(a1, a2);
        let nx = b.not(x);
        let r = b.or2(a1, nx);
        let e = b.finish(r);
        assert!(e.eval(|_| false));
        assert!(!e.eval(|v| v == VarId(0)));
        assert!(e.eval(|_| true));
        assert_eq!(e.variables(), vec![VarId(0), VarId(1)]);
    }

    #[test]
    fn word_evaluation_matches_scalar() {
        let mut b = ExprBuilder::new();
        let vs: Vec<GateId> = (0..3).map(|i| b.var(VarId(i))).collect();
        let x = b.xor(vs.clone());
        let i = b.ite(vs[0], vs[1], vs[2]);
        let r = b.iff(x, i);
        let e = b.finish(r);
        // lane j encodes assignment j over 3 variables
        let word = e.eval_words(|v| {
            (0..8u64).fold(0, |acc, j| acc | (((j >> v.0) & 1) << j))
        });
        for j in 0..8u64 {
            let scalar = e.eval(|v| (j >> v.0) & 1 == 1);
            assert_eq!((word >> j) & 1 == 1, scalar);
        }
    }

    #[test]
    fn canonical_equality_ignores_arena_layout() {
        let mut b1 = ExprBuilder::new();
        let _unused = b1.var(VarId(5));
        let x = b1.var(VarId(0));
        let y = b1.var(VarId(1));
        let r1 = b1.and2(x, y);
        let e1 = b1.finish(r1);
        let mut b2 = ExprBuilder::new();
        let x = b2.var(VarId(0));
        let y = b2.var(VarId(1));
        let r2 = b2.and2(x, y);
        assert_eq!(e1, b2.finish(r2));
    }
}
