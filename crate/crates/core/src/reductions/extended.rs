use std::time::Instant;

use rustc_hash::FxHashSet;
use serde::Serialize;

use super::{index_width, Names, ReductionError};
use crate::bigcount::BigCount;
use crate::counter::{self, CountOptions, CountReport, Method, Strategy};
use crate::formula::{Dqbf, DqbfBuilder, ExprBuilder, Gate, GateId, VarId};

/// A DQBF whose matrix is a conjunction of parts, each mentioning at most
/// two existential variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedTwoDqbf {
    dqbf: Dqbf,
    parts: Vec<GateId>,
}

impl ExtendedTwoDqbf {
    /// Splits the matrix at its top-level conjunctions and checks every
    /// part.
    pub fn new(dqbf: Dqbf) -> Result<Self, ReductionError> {
        let m = dqbf.matrix();
        let mut parts = Vec::new();
        let mut stack = vec![m.root()];
        while let Some(g) = stack.pop() {
            match m.gate(g) {
                Gate::And(xs) => stack.extend(xs.iter().rev()),
                Gate::Const(true) => {}
                _ => parts.push(g),
            }
        }
        let e = ExtendedTwoDqbf { dqbf, parts };
        for (i, p) in e.parts.iter().enumerate() {
            let count = e.part_existentials(*p).len();
            if count > 2 {
                return Err(ReductionError::NotExtended { part: i, count });
            }
        }
        Ok(e)
    }

    pub fn dqbf(&self) -> &Dqbf {
        &self.dqbf
    }

    pub fn parts(&self) -> &[GateId] {
        &self.parts
    }

    /// Indices of the existentials a part mentions, ascending.
    pub fn part_existentials(&self, part: GateId) -> Vec<usize> {
        let m = self.dqbf.matrix();
        let mut seen = FxHashSet::default();
        let mut found = Vec::new();
        let mut stack = vec![part];
        while let Some(g) = stack.pop() {
            if !seen.insert(g) {
                continue;
            }
            match m.gate(g) {
                Gate::Var(v) => {
                    if let Some(i) = self.dqbf.existential_index(*v) {
                        found.push(i);
                    }
                }
                other => stack.extend(other.children()),
            }
        }
        found.sort_unstable();
        found.dedup();
        found
    }
}

/// A number in `{−1} ∪ Λ`: `−1` when the tag is set, otherwise the
/// little-endian value of the bits.
struct Lambda {
    bits: Vec<VarId>,
    tag: VarId,
}

impl Lambda {
    fn all_vars(&self) -> Vec<VarId> {
        let mut v = self.bits.clone();
        v.push(self.tag);
        v
    }

    fn is_minus_one(&self, e: &mut ExprBuilder) -> GateId {
        e.var(self.tag)
    }

    fn in_range(&self, e: &mut ExprBuilder) -> GateId {
        e.lit(self.tag, false)
    }

    fn equals_vars(&self, e: &mut ExprBuilder, vs: &[VarId]) -> GateId {
        let r = self.in_range(e);
        let eq = e.vars_equal(&self.bits, vs);
        e.and2(r, eq)
    }

    fn equals(&self, e: &mut ExprBuilder, other: &Lambda) -> GateId {
        let a = self.in_range(e);
        let b = other.in_range(e);
        let eq = e.vars_equal(&self.bits, &other.bits);
        e.and(vec![a, b, eq])
    }

    fn is_max(&self, e: &mut ExprBuilder) -> GateId {
        let mut parts = vec![self.in_range(e)];
        parts.extend(self.bits.iter().map(|v| e.var(*v)));
        e.and(parts)
    }

    /// `self = other − 1`, where `other` is in range.
    fn is_predecessor_of(&self, e: &mut ExprBuilder, other: &Lambda) -> GateId {
        let zero = e.vars_equal_const(&other.bits, 0);
        let neg = self.is_minus_one(e);
        let wraps = e.and2(zero, neg);
        let mut carry = e.constant(true);
        let mut parts = vec![self.in_range(e)];
        for (a, t) in self.bits.iter().zip(&other.bits) {
            let ga = e.var(*a);
            let sum = e.xor2(ga, carry);
            let gt = e.var(*t);
            parts.push(e.iff(sum, gt));
            carry = e.and2(ga, carry);
        }
        parts.push(e.not(carry));
        let steps = e.and(parts);
        e.or2(wraps, steps)
    }
}

/// The two extended 2-DQBFs `Ψ1`, `Ψ2` with `#d = #Ψ1 − #Ψ2`.
///
/// Every clause of the expansion of `d` is indexed by a point
/// `(x̄, ȳ) ∈ Λ`; `c` marks clauses falsified by the `f_i`, and the
/// cells `p`, `o1`, `o2`, `e1`, `e2` track the parity of the marked
/// clauses along `Λ`. The two instances differ only in the parity pinned
/// after the last clause.
pub fn to_extended_pair(d: &Dqbf) -> Result<(ExtendedTwoDqbf, ExtendedTwoDqbf), ReductionError> {
    Ok((build_psi(d, false)?, build_psi(d, true)?))
}

fn build_psi(d: &Dqbf, final_parity: bool) -> Result<ExtendedTwoDqbf, ReductionError> {
    let mut names = Names::of(d);
    let mut b = DqbfBuilder::new();
    // Bit j of the point, of t̄ and of t̄′ are declared together so the
    // diagrams of the comparisons stay small.
    let labels: Vec<String> = d
        .universals()
        .iter()
        .map(|x| d.name(*x).to_string())
        .chain(
            d.existentials()
                .iter()
                .map(|ex| names.fresh(&format!("{}_val", d.name(ex.var)))),
        )
        .collect();
    let mut point = Vec::with_capacity(labels.len());
    let empty = || Lambda {
        bits: Vec::new(),
        tag: VarId(0),
    };
    let (mut t, mut tp) = (empty(), empty());
    for (j, label) in labels.iter().enumerate() {
        point.push(b.universal(label)?);
        t.bits.push(b.universal(&names.fresh(&format!("t{j}")))?);
        tp.bits.push(b.universal(&names.fresh(&format!("tp{j}")))?);
    }
    t.tag = b.universal(&names.fresh("t_neg"))?;
    tp.tag = b.universal(&names.fresh("tp_neg"))?;
    let ybits = point[d.n()..].to_vec();
    let pos = |v: VarId| d.universal_position(v).expect("universal");

    let fs = d
        .existentials()
        .iter()
        .map(|ex| {
            let deps: Vec<VarId> = ex.deps.iter().map(|z| point[pos(*z)]).collect();
            b.existential(d.name(ex.var), &deps)
        })
        .collect::<Result<Vec<_>, _>>()?;
    // Declaration order steers the symbolic counter's case splits: the
    // f_i first, then the parity chain, the clause markers last.
    let p = b.existential(&names.fresh("p"), &tp.all_vars())?;
    let tv = t.all_vars();
    let mut track = [VarId(0); 4];
    for (slot, base) in track.iter_mut().zip(["o1", "o2", "e1", "e2"]) {
        *slot = b.existential(&names.fresh(base), &tv)?;
    }
    let [o1, o2, e1, e2] = track;
    let c = b.existential(&names.fresh("c"), &point)?;

    let e = b.expr();
    let mut parts = Vec::new();
    let phi = e.import(d.matrix(), d.matrix().root(), &|v: VarId| match d.existential_index(v) {
        Some(i) => ybits[i],
        None => point[pos(v)],
    });
    let not_phi = e.not(phi);
    let gc = e.var(c);
    for (f, yb) in fs.iter().zip(&ybits) {
        for val in [true, false] {
            let y = e.lit(*yb, val);
            let pre = e.and(vec![not_phi, y, gc]);
            let f = e.lit(*f, val);
            parts.push(e.implies(pre, f));
        }
    }
    let nc = e.not(gc);
    parts.push(e.implies(phi, nc));

    let in_range = t.in_range(e);
    let prev = tp.is_predecessor_of(e, &t);
    let here = t.equals_vars(e, &point);
    let same = tp.equals(e, &t);
    let [prev, here, same] = [prev, here, same].map(|g| e.and2(in_range, g));
    // (variable, parity before, clause marked, parity after)
    for (v, before, marked, after) in [
        (o1, false, true, true),
        (o2, true, false, true),
        (e1, true, true, false),
        (e2, false, false, false),
    ] {
        let gv = e.var(v);
        for (pre, x, val) in [(prev, p, before), (here, c, marked), (same, p, after)] {
            let l = e.lit(x, val);
            let imp = e.implies(gv, l);
            parts.push(e.implies(pre, imp));
        }
    }
    let neg = tp.is_minus_one(e);
    let np = e.lit(p, false);
    parts.push(e.implies(neg, np));
    let t_neg = t.is_minus_one(e);
    for v in track {
        let nv = e.lit(v, false);
        parts.push(e.implies(t_neg, nv));
    }
    let last = tp.is_max(e);
    let fin = e.lit(p, final_parity);
    parts.push(e.implies(last, fin));

    let root = e.and(parts);
    ExtendedTwoDqbf::new(b.build(root)?)
}

/// Folds an extended 2-DQBF with `m` existentials into a 2-DQBF whose two
/// functions `y(x̄, ī)`, `y′(x̄′, ī′)` are copies of the combined function
/// `(x̄, i) ↦ y_i(x̄|z̄_i)`. Indices beyond `m` are pinned to ⊤.
pub fn extended_to_2dqbf(ext: &ExtendedTwoDqbf) -> Result<Dqbf, ReductionError> {
    let d = ext.dqbf();
    let m = d.k();
    let w = index_width(m);
    let mut names = Names::of(d);
    let mut b = DqbfBuilder::new();
    // Index bits first: the parts differ mostly by index.
    let is: Vec<VarId> = (0..w)
        .map(|j| b.universal(&names.fresh(&format!("i{j}"))))
        .collect::<Result<_, _>>()?;
    let xs = d
        .universals()
        .iter()
        .map(|x| b.universal(d.name(*x)))
        .collect::<Result<Vec<_>, _>>()?;
    let ips: Vec<VarId> = (0..w)
        .map(|j| b.universal(&names.fresh(&format!("i{j}'"))))
        .collect::<Result<_, _>>()?;
    let xps = d
        .universals()
        .iter()
        .map(|x| b.universal(&names.fresh(&format!("{}'", d.name(*x)))))
        .collect::<Result<Vec<_>, _>>()?;
    let dep = |a: &[VarId], b: &[VarId]| a.iter().chain(b).copied().collect::<Vec<_>>();
    let y = b.existential(&names.fresh("y"), &dep(&is, &xs))?;
    let yp = b.existential(&names.fresh("y'"), &dep(&ips, &xps))?;

    let pos = |v: VarId| d.universal_position(v).expect("universal");
    let e = b.expr();
    let mut parts = Vec::new();
    let (gy, gyp) = (e.var(y), e.var(yp));
    let y_eq = e.iff(gy, gyp);
    let sel = |e: &mut ExprBuilder, bits: &[VarId], k: usize| e.vars_equal_const(bits, k as u64);
    for (k, ex) in d.existentials().iter().enumerate() {
        let l: Vec<VarId> = ex.deps.iter().map(|z| xs[pos(*z)]).collect();
        let r: Vec<VarId> = ex.deps.iter().map(|z| xps[pos(*z)]).collect();
        let on_z = e.vars_equal(&l, &r);
        let a = sel(e, &is, k);
        let bb = sel(e, &ips, k);
        let pre = e.and(vec![a, bb, on_z]);
        parts.push(e.implies(pre, y_eq));
    }
    for j in m..1usize << w {
        for (bits, v) in [(&is, gy), (&ips, gyp)] {
            let s = sel(e, bits, j);
            parts.push(e.implies(s, v));
        }
    }
    let same_x = e.vars_equal(&xs, &xps);
    for &part in ext.parts() {
        let ex = ext.part_existentials(part);
        let lead = ex.first().copied();
        let map = |v: VarId| match d.existential_index(v) {
            Some(i) if Some(i) == lead => y,
            Some(_) => yp,
            None => xs[pos(v)],
        };
        let body = e.import(d.matrix(), part, &map);
        let g = match ex.as_slice() {
            [] => body,
            [k] => {
                let s = sel(e, &is, *k);
                e.implies(s, body)
            }
            [k, l] => {
                let a = sel(e, &is, *k);
                let bb = sel(e, &ips, *l);
                let pre = e.and(vec![a, bb, same_x]);
                e.implies(pre, body)
            }
            _ => unreachable!("checked by ExtendedTwoDqbf::new"),
        };
        parts.push(g);
    }
    let root = e.and(parts);
    Ok(b.build(root)?)
}

#[derive(Debug, Clone, Serialize)]
pub struct GeneralReport {
    pub count: BigCount,
    pub minuend: CountReport,
    pub subtrahend: CountReport,
    pub elapsed_ms: u64,
}

/// `#d` as `#Φ1 − #Φ2`, with `Φi` the 2-DQBF folding of `Ψi`.
pub fn count_general(d: &Dqbf, opts: &CountOptions) -> Result<GeneralReport, ReductionError> {
    let start = Instant::now();
    let (psi1, psi2) = to_extended_pair(d)?;
    let mut inner = opts.clone();
    if matches!(inner.method, Method::Reduction | Method::Auto) {
        inner.method = Method::Symbolic;
    }
    // The folded instances have astronomically many candidates, so
    // enumeration never pays off there.
    if inner.strategy == Strategy::Auto {
        inner.strategy = Strategy::Branch;
    }
    let minuend = counter::count(&extended_to_2dqbf(&psi1)?, &inner)?;
    let subtrahend = counter::count(&extended_to_2dqbf(&psi2)?, &inner)?;
    let count = minuend
        .count
        .sub(&subtrahend.count)
        .map_err(|_| ReductionError::Underflow {
            minuend: minuend.count.to_string(),
            subtrahend: subtrahend.count.to_string(),
        })?;
    Ok(GeneralReport {
        count,
        minuend,
        subtrahend,
        elapsed_ms: start.elapsed().as_millis() as u64,
    })
}
