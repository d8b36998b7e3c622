//! Reference counters that never touch the decision diagram code.
//!
//! [`brute_count`] enumerates every tuple of Skolem functions. It is only
//! usable when the total number of cells is tiny, but it is obviously
//! correct. [`exhaustive_count`] builds the expansion by evaluating the
//! matrix directly and counts the resulting CNF with a small DPLL counter,
//! which reaches somewhat larger instances.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use rustc_hash::FxHashMap;

use super::CountError;
use crate::bigcount::BigCount;
use crate::formula::{Dqbf, VarId};

/// Default limit on `Σ_i 2^{|z̄_i|}` for [`brute_count`].
pub const BRUTE_CELL_LIMIT: u32 = 24;
/// Limit on `n + k` for the direct evaluation of the matrix.
pub const EVAL_LIMIT: u32 = 26;
/// Limit on the number of expansion variables for [`exhaustive_count`].
pub const EXHAUSTIVE_CELL_LIMIT: u64 = 1 << 14;

/// For one assignment class of x̄: the global cell touched by each
/// existential and the set of falsifying value patterns (bit `p` set when
/// the pattern with `y_i = p >> i & 1` falsifies the matrix).
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Constraint {
    pub cells: Vec<u32>,
    pub forbidden: u64,
}

/// Cell offsets: existential `i` owns cells `offset[i] .. offset[i] + 2^{|z̄_i|}`.
pub(crate) fn cell_offsets(d: &Dqbf) -> Vec<u64> {
    let mut off = Vec::with_capacity(d.k() + 1);
    let mut acc = 0u64;
    for e in d.existentials() {
        off.push(acc);
        acc += 1u64 << e.deps.len();
    }
    off.push(acc);
    off
}

fn check_eval_size(d: &Dqbf) -> Result<(), CountError> {
    let size = (d.n() + d.k()) as u32;
    if size > EVAL_LIMIT || d.k() > 6 {
        return Err(CountError::Budget {
            what: "n + k for direct evaluation".into(),
            needed: size.to_string(),
            limit: EVAL_LIMIT.to_string(),
        });
    }
    Ok(())
}

/// All falsification constraints of the expansion, merged by cell tuple.
pub(crate) fn constraints(d: &Dqbf) -> Result<Vec<Constraint>, CountError> {
    check_eval_size(d)?;
    let n = d.n();
    let k = d.k();
    let off = cell_offsets(d);
    let dep_pos: Vec<Vec<usize>> = d
        .existentials()
        .iter()
        .map(|e| {
            e.deps
                .iter()
                .map(|v| d.universal_position(*v).expect("dependency is universal"))
                .collect()
        })
        .collect();
    let mut slot: FxHashMap<VarId, (bool, usize)> = FxHashMap::default();
    for (p, v) in d.universals().iter().enumerate() {
        slot.insert(*v, (true, p));
    }
    for (i, e) in d.existentials().iter().enumerate() {
        slot.insert(e.var, (false, i));
    }
    let total: u64 = 1 << (n + k);
    let mut merged: FxHashMap<Vec<u32>, u64> = FxHashMap::default();
    let mut order: Vec<Vec<u32>> = Vec::new();
    let mut base = 0u64;
    while base < total {
        let lanes = (total - base).min(64);
        let word = d.matrix().eval_words(|v| {
            let (is_x, p) = slot[&v];
            let mut w = 0u64;
            for l in 0..lanes {
                let j = base + l;
                let bit = if is_x { (j >> k) >> p } else { j >> p } & 1;
                w |= bit << l;
            }
            w
        });
        for l in 0..lanes {
            if word >> l & 1 == 1 {
                continue;
            }
            let j = base + l;
            let x = j >> k;
            let pattern = j & ((1 << k) - 1);
            let cells: Vec<u32> = (0..k)
                .map(|i| {
                    let c = dep_pos[i]
                        .iter()
                        .enumerate()
                        .fold(0u64, |acc, (b, p)| acc | ((x >> p) & 1) << b);
                    (off[i] + c) as u32
                })
                .collect();
            let entry = merged.entry(cells.clone()).or_insert_with(|| {
                order.push(cells);
                0
            });
            *entry |= 1 << pattern;
        }
        base += lanes;
    }
    Ok(order
        .into_iter()
        .map(|cells| {
            let forbidden = merged[&cells];
            Constraint { cells, forbidden }
        })
        .collect())
}

/// Counts Skolem function tuples by enumerating all of them.
pub fn brute_count(d: &Dqbf) -> Result<BigCount, CountError> {
    brute_count_with_limit(d, BRUTE_CELL_LIMIT)
}

pub fn brute_count_with_limit(d: &Dqbf, limit: u32) -> Result<BigCount, CountError> {
    let cells = d.total_cells();
    if cells > limit as u128 {
        return Err(CountError::Budget {
            what: "cells for brute-force enumeration".into(),
            needed: cells.to_string(),
            limit: limit.to_string(),
        });
    }
    let cells = cells as usize;
    let cons = constraints(d)?;
    // Constraints are checked as soon as their last cell is assigned.
    let mut at: Vec<Vec<&Constraint>> = vec![Vec::new(); cells];
    for c in &cons {
        let last = *c.cells.iter().max().expect("k >= 1 when constraints exist") as usize;
        at[last].push(c);
    }
    let mut last_constrained = 0;
    for (i, a) in at.iter().enumerate() {
        if !a.is_empty() {
            last_constrained = i + 1;
        }
    }
    if cons.iter().any(|c| c.cells.is_empty()) {
        return Ok(BigCount::zero());
    }
    fn go(
        depth: usize,
        mask: u64,
        cells: usize,
        stop: usize,
        at: &[Vec<&Constraint>],
    ) -> u64 {
        if depth == stop {
            return 1u64 << (cells - depth);
        }
        let mut total = 0;
        for bit in 0..2u64 {
            let m = mask | bit << depth;
            let ok = at[depth].iter().all(|c| {
                let p = c
                    .cells
                    .iter()
                    .enumerate()
                    .fold(0u64, |acc, (i, cell)| acc | ((m >> cell) & 1) << i);
                c.forbidden >> p & 1 == 0
            });
            if ok {
                total += go(depth + 1, m, cells, stop, at);
            }
        }
        total
    }
    // With no existentials the count is 1 or 0 depending on validity.
    if d.k() == 0 {
        return Ok(BigCount::one());
    }
    Ok(BigCount::from_u64(go(0, 0, cells, last_constrained, &at)))
}

/// Clauses of the expansion over 1-based cell variables.
pub(crate) fn expansion_clauses(d: &Dqbf) -> Result<Vec<Vec<i32>>, CountError> {
    let mut clauses = Vec::new();
    for c in constraints(d)? {
        for p in 0..64u32 {
            if c.forbidden >> p & 1 == 0 {
                continue;
            }
            let clause: Vec<i32> = c
                .cells
                .iter()
                .enumerate()
                .map(|(i, cell)| {
                    let v = *cell as i32 + 1;
                    if p >> i & 1 == 1 {
                        -v
                    } else {
                        v
                    }
                })
                .collect();
            clauses.push(clause);
        }
    }
    Ok(clauses)
}

/// Counts through an explicit expansion and a DPLL model counter.
pub fn exhaustive_count(d: &Dqbf) -> Result<BigCount, CountError> {
    let cells = d.total_cells();
    if cells > EXHAUSTIVE_CELL_LIMIT as u128 {
        return Err(CountError::Budget {
            what: "cells for exhaustive expansion".into(),
            needed: cells.to_string(),
            limit: EXHAUSTIVE_CELL_LIMIT.to_string(),
        });
    }
    let clauses = expansion_clauses(d)?;
    let vars: Vec<u32> = (1..=cells as u32).collect();
    Ok(BigCount::from_biguint(&count_cnf(clauses, &vars)))
}

/// Number of assignments to `vars` satisfying `clauses` (literals are
/// signed 1-based variable numbers drawn from `vars`).
pub fn count_cnf(clauses: Vec<Vec<i32>>, vars: &[u32]) -> BigUint {
    let mut clauses = clauses;
    for c in clauses.iter_mut() {
        c.sort_unstable();
        c.dedup();
    }
    // Tautologies never constrain anything.
    clauses.retain(|c| !has_complement(c));
    if clauses.iter().any(|c| c.is_empty()) {
        return BigUint::zero();
    }
    dpll(clauses, vars.to_vec())
}

fn has_complement(c: &[i32]) -> bool {
    c.iter().any(|l| c.contains(&-l))
}

fn assign(clauses: &[Vec<i32>], lit: i32) -> Option<Vec<Vec<i32>>> {
    let mut out = Vec::with_capacity(clauses.len());
    for c in clauses {
        if c.contains(&lit) {
            continue;
        }
        let reduced: Vec<i32> = c.iter().copied().filter(|l| *l != -lit).collect();
        if reduced.is_empty() {
            return None;
        }
        out.push(reduced);
    }
    Some(out)
}

fn dpll(mut clauses: Vec<Vec<i32>>, mut scope: Vec<u32>) -> BigUint {
    while let Some(unit) = clauses.iter().find(|c| c.len() == 1).map(|c| c[0]) {
        match assign(&clauses, unit) {
            Some(next) => clauses = next,
            None => return BigUint::zero(),
        }
        scope.retain(|v| *v != unit.unsigned_abs());
    }
    if clauses.is_empty() {
        return BigUint::one() << scope.len();
    }
    // Split into variable-disjoint components.
    let index: FxHashMap<u32, usize> = scope.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let mut parent: Vec<usize> = (0..scope.len()).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut used = vec![false; scope.len()];
    for c in &clauses {
        let first = index[&c[0].unsigned_abs()];
        for l in c {
            let i = index[&l.unsigned_abs()];
            used[i] = true;
            let (a, b) = (find(&mut parent, first), find(&mut parent, i));
            parent[a] = b;
        }
    }
    let free = used.iter().filter(|u| !**u).count();
    let mut groups: FxHashMap<usize, (Vec<Vec<i32>>, Vec<u32>)> = FxHashMap::default();
    for (i, v) in scope.iter().enumerate() {
        if used[i] {
            let r = find(&mut parent, i);
            groups.entry(r).or_default().1.push(*v);
        }
    }
    for c in clauses {
        let r = find(&mut parent, index[&c[0].unsigned_abs()]);
        groups.get_mut(&r).expect("component exists").0.push(c);
    }
    let mut result = BigUint::one() << free;
    for (_, (cls, vars)) in groups {
        let mut occ: FxHashMap<u32, usize> = FxHashMap::default();
        for c in &cls {
            for l in c {
                *occ.entry(l.unsigned_abs()).or_default() += 1;
            }
        }
        let branch = *vars
            .iter()
            .max_by_key(|v| (occ.get(v).copied().unwrap_or(0), std::cmp::Reverse(**v)))
            .expect("component has variables");
        let rest: Vec<u32> = vars.iter().copied().filter(|v| *v != branch).collect();
        let mut sub = BigUint::zero();
        for lit in [branch as i32, -(branch as i32)] {
            if let Some(next) = assign(&cls, lit) {
                sub += dpll(next, rest.clone());
            }
        }
        if sub.is_zero() {
            return sub;
        }
        result *= sub;
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_circuit;

    fn count(text: &str) -> (BigCount, BigCount) {
        let d = parse_circuit(text).unwrap();
        (brute_count(&d).unwrap(), exhaustive_count(&d).unwrap())
    }

    #[test]
    fn disjunction_of_two_copies() {
        // y1(x) ∨ y2(x): per x three of four value pairs work.
        let (a, b) = count("#dqcir\nforall(x)\nexists(y1; x)\nexists(y2; x)\ng = or(y1, y2)\noutput(g)\n");
        assert_eq!(a, BigCount::from_u64(9));
        assert_eq!(b, a);
    }

    #[test]
    fn equality_with_private_inputs() {
        // y1(x1) ↔ y2(x2) forces both to the same constant.
        let t = "#dqcir\nforall(x1, x2)\nexists(y1; x1)\nexists(y2; x2)\ng = iff(y1, y2)\noutput(g)\n";
        let (a, b) = count(t);
        assert_eq!(a, BigCount::from_u64(2));
        assert_eq!(b, a);
    }

    #[test]
    fn copy_of_input() {
        let t = "#dqcir\nforall(x1, x2)\nexists(y1; x1)\nexists(y2; x2)\ng = iff(y1, x1)\noutput(g)\n";
        let (a, b) = count(t);
        assert_eq!(a, BigCount::from_u64(4));
        assert_eq!(b, a);
        let t = "#dqcir\nforall(x1, x2)\nexists(y1; x1)\nexists(y2; x1)\ng = iff(y1, x2)\noutput(g)\n";
        let (a, b) = count(t);
        assert!(a.is_zero());
        assert!(b.is_zero());
    }

    #[test]
    fn cnf_counter() {
        assert_eq!(count_cnf(vec![vec![1, 2]], &[1, 2, 3]), BigUint::from(6u32));
        assert_eq!(count_cnf(vec![vec![1], vec![-1]], &[1]), BigUint::zero());
        assert_eq!(count_cnf(vec![vec![1, -1]], &[1, 2]), BigUint::from(4u32));
        assert_eq!(
            count_cnf(vec![vec![1, 2], vec![3, 4]], &[1, 2, 3, 4]),
            BigUint::from(9u32)
        );
    }
}
