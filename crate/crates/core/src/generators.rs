//! Benchmark families with known counts and a seeded random family.
//!
//! The graph families live on `2^n` vertices; `C_{n,k}(x̄, x̄′)` joins
//! vertices that agree on the first `k` bits and differ on bit `k+1`, so
//! `G_{n,k}` is `2^k` disjoint copies of `K_{m,m}` with `m = 2^{n−k−1}`.

use num_bigint::BigUint;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bigcount::BigCount;
use crate::formula::{Dqbf, DqbfBuilder, FormulaError, GateId, VarId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("graph families need 0 <= k < n, got n = {n}, k = {k}")]
    GraphParams { n: usize, k: usize },
    #[error("dependency width {width} exceeds n = {n}")]
    Width { n: usize, width: usize },
    #[error(transparent)]
    Formula(#[from] FormulaError),
}

/// Knobs of the random family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomSpec {
    pub seed: u64,
    pub n: usize,
    pub w1: usize,
    pub w2: usize,
    pub gates: usize,
    /// Conjoin `(z̄_1 = z̄_2) → (y_1 = y_2)` when the widths match.
    pub guard: bool,
}

impl Default for RandomSpec {
    fn default() -> Self {
        RandomSpec {
            seed: 0,
            n: 4,
            w1: 2,
            w2: 2,
            gates: 6,
            guard: false,
        }
    }
}

fn check_graph(n: usize, k: usize) -> Result<(), GenError> {
    if k >= n {
        Err(GenError::GraphParams { n, k })
    } else {
        Ok(())
    }
}

/// `∀x̄ ∀x̄′ ∃y(x̄) ∃y′(x̄′)` with the uniformity guard; returns the
/// builder, both vectors, the existentials and the guard gate.
fn graph_prefix(n: usize) -> Result<(DqbfBuilder, Vec<VarId>, Vec<VarId>, VarId, VarId, GateId), GenError> {
    let mut b = DqbfBuilder::new();
    let xs = (1..=n)
        .map(|i| b.universal(&format!("x{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let xps = (1..=n)
        .map(|i| b.universal(&format!("xp{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let y = b.existential("y", &xs)?;
    let yp = b.existential("yp", &xps)?;
    let e = b.expr();
    let same = e.vars_equal(&xs, &xps);
    let (gy, gyp) = (e.var(y), e.var(yp));
    let eq = e.iff(gy, gyp);
    let guard = e.implies(same, eq);
    Ok((b, xs, xps, y, yp, guard))
}

fn edge(b: &mut DqbfBuilder, xs: &[VarId], xps: &[VarId], k: usize) -> GateId {
    let e = b.expr();
    let mut parts = Vec::new();
    if k > 0 {
        parts.push(e.vars_equal(&xs[..k], &xps[..k]));
    }
    let (a, c) = (e.var(xs[k]), e.var(xps[k]));
    parts.push(e.xor2(a, c));
    e.and(parts)
}

/// TWO-COL_{n,k}: Skolem functions are the 2-colourings of `G_{n,k}`.
pub fn two_col(n: usize, k: usize) -> Result<Dqbf, GenError> {
    check_graph(n, k)?;
    let (mut b, xs, xps, y, yp, guard) = graph_prefix(n)?;
    let c = edge(&mut b, &xs, &xps, k);
    let e = b.expr();
    let (gy, gyp) = (e.var(y), e.var(yp));
    let differ = e.xor2(gy, gyp);
    let color = e.implies(c, differ);
    let root = e.and2(guard, color);
    Ok(b.build(root)?)
}

/// IND-SET_{n,k}: Skolem functions are the independent sets of `G_{n,k}`.
pub fn ind_set(n: usize, k: usize) -> Result<Dqbf, GenError> {
    check_graph(n, k)?;
    let (mut b, xs, xps, y, yp, guard) = graph_prefix(n)?;
    let c = edge(&mut b, &xs, &xps, k);
    let e = b.expr();
    let (ny, nyp) = (e.lit(y, false), e.lit(yp, false));
    let free = e.or2(ny, nyp);
    let indep = e.implies(c, free);
    let root = e.and2(guard, indep);
    Ok(b.build(root)?)
}

/// `2^{2^k}`: each of the `2^k` bipartite blocks has two colourings.
pub fn two_col_count(n: usize, k: usize) -> Result<BigCount, GenError> {
    check_graph(n, k)?;
    Ok(BigCount::from_pow2(BigUint::one() << k))
}

/// `(2·2^{2^{n−k−1}} − 1)^{2^k}`
pub fn ind_set_count(n: usize, k: usize) -> Result<BigCount, GenError> {
    check_graph(n, k)?;
    let m = BigUint::one() << (n - k - 1);
    let block = BigCount::from_pow2(m + 1u32)
        .sub(&BigCount::one())
        .expect("2^(m+1) >= 1");
    Ok(block.pow(1u64 << k))
}

/// A random 2-DQBF over `x1..xn`, deterministic in `spec`.
pub fn random(spec: &RandomSpec) -> Result<Dqbf, GenError> {
    for w in [spec.w1, spec.w2] {
        if w > spec.n {
            return Err(GenError::Width { n: spec.n, width: w });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut b = DqbfBuilder::new();
    let xs = (1..=spec.n)
        .map(|i| b.universal(&format!("x{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let deps = |w: usize, rng: &mut ChaCha8Rng| {
        let mut d: Vec<VarId> = xs.choose_multiple(rng, w).copied().collect();
        d.sort_unstable();
        d
    };
    let z1 = deps(spec.w1, &mut rng);
    let z2 = deps(spec.w2, &mut rng);
    let y1 = b.existential("y1", &z1)?;
    let y2 = b.existential("y2", &z2)?;

    let e = b.expr();
    let mut pool: Vec<GateId> = xs.iter().map(|x| e.var(*x)).collect();
    let (g1, g2) = (e.var(y1), e.var(y2));
    pool.extend([g1, g2]);
    let mut last = None;
    for _ in 0..spec.gates {
        let arity = rng.gen_range(2..=3);
        let args: Vec<GateId> = (0..arity)
            .map(|_| {
                let g = pool[rng.gen_range(0..pool.len())];
                if rng.gen_bool(0.5) {
                    e.not(g)
                } else {
                    g
                }
            })
            .collect();
        let g = match rng.gen_range(0..3) {
            0 => e.and(args),
            1 => e.or(args),
            _ => e.xor(args),
        };
        pool.push(g);
        last = Some(g);
    }
    let l1 = e.lit(y1, rng.gen_bool(0.5));
    let l2 = e.lit(y2, rng.gen_bool(0.5));
    let mut bridge = vec![l1, l2];
    if !xs.is_empty() {
        let x = xs[rng.gen_range(0..xs.len())];
        bridge.push(e.lit(x, rng.gen_bool(0.5)));
    }
    let bridge = e.or(bridge);
    // Either a conjunct or a disjunct, so matrices are not all over-constrained.
    let body = match last {
        Some(g) if rng.gen_bool(0.5) => e.and2(bridge, g),
        Some(g) => e.or2(bridge, g),
        None => bridge,
    };
    let mut parts = vec![body];
    if spec.guard && z1.len() == z2.len() {
        let same = e.vars_equal(&z1, &z2);
        let eq = e.iff(g1, g2);
        parts.push(e.implies(same, eq));
    }
    let root = e.and(parts);
    Ok(b.build(root)?)
}

/// Knobs of the random k-DQBF family.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomGeneralSpec {
    pub seed: u64,
    pub n: usize,
    /// One dependency width per existential.
    pub widths: Vec<usize>,
    pub gates: usize,
}

/// A random k-DQBF over `x1..xn` with `k = widths.len()`.
pub fn random_general(spec: &RandomGeneralSpec) -> Result<Dqbf, GenError> {
    if let Some(&w) = spec.widths.iter().find(|w| **w > spec.n) {
        return Err(GenError::Width { n: spec.n, width: w });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut b = DqbfBuilder::new();
    let xs = (1..=spec.n)
        .map(|i| b.universal(&format!("x{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut ys = Vec::with_capacity(spec.widths.len());
    for (i, w) in spec.widths.iter().enumerate() {
        let mut z: Vec<VarId> = xs.choose_multiple(&mut rng, *w).copied().collect();
        z.sort_unstable();
        ys.push(b.existential(&format!("y{}", i + 1), &z)?);
    }
    let e = b.expr();
    let mut pool: Vec<GateId> = xs.iter().chain(&ys).map(|v| e.var(*v)).collect();
    let mut last = None;
    for _ in 0..spec.gates {
        let args: Vec<GateId> = (0..rng.gen_range(2..=3))
            .map(|_| {
                let g = pool[rng.gen_range(0..pool.len())];
                if rng.gen_bool(0.5) {
                    e.not(g)
                } else {
                    g
                }
            })
            .collect();
        let g = match rng.gen_range(0..3) {
            0 => e.and(args),
            1 => e.or(args),
            _ => e.xor(args),
        };
        pool.push(g);
        last = Some(g);
    }
    let mut bridge: Vec<GateId> = ys.iter().map(|y| e.lit(*y, rng.gen_bool(0.5))).collect();
    if !xs.is_empty() {
        let x = xs[rng.gen_range(0..xs.len())];
        bridge.push(e.lit(x, rng.gen_bool(0.5)));
    }
    let bridge = e.or(bridge);
    let root = match last {
        Some(g) if rng.gen_bool(0.5) => e.and2(bridge, g),
        Some(g) => e.or2(bridge, g),
        None => bridge,
    };
    Ok(b.build(root)?)
}
