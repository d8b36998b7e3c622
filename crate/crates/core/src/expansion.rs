//! The expansion `exp(Φ)`: one CNF variable `X_{i,c̄}` per existential and
//! dependency cell, one clause per projected falsifier of the matrix.

use std::fmt::Write as _;

use num_bigint::BigUint;
use rustc_hash::{FxHashMap, FxHashSet};
use serde::Serialize;

use crate::bdd::{Bdd, Limits, Manager};
use crate::bigcount::BigCount;
use crate::counter::CountError;
use crate::formula::{Dqbf, VarId};

pub const DEFAULT_MAX_CELLS: u128 = 1 << 22;
pub const DEFAULT_MAX_CLAUSES: u64 = 1 << 20;
pub const DEFAULT_MAX_VARS: u64 = 1 << 20;
/// Most existentials for a reduced expansion, which visits every subset.
pub const MAX_REDUCE_EXISTENTIALS: usize = 12;

#[derive(Debug, Clone)]
pub struct ExpansionConfig {
    /// Bound on Σ_i 2^{|z̄_i|}.
    pub max_cells: u128,
    pub max_clauses: u64,
    /// Bound on the variables handed to the internal counter.
    pub max_vars: u64,
    /// Emit each clause over only the existentials its falsifier pins.
    /// The CNF stays equivalent but no longer lists one clause per
    /// universal assignment.
    pub reduce: bool,
    pub limits: Limits,
}

impl Default for ExpansionConfig {
    fn default() -> Self {
        ExpansionConfig {
            max_cells: DEFAULT_MAX_CELLS,
            max_clauses: DEFAULT_MAX_CLAUSES,
            max_vars: DEFAULT_MAX_VARS,
            reduce: false,
            limits: Limits::default(),
        }
    }
}

/// Dense CNF variables (1-based) for the cells that occur in some clause,
/// ordered by existential then cell.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExpansionVarTable {
    cells: Vec<(usize, u64)>,
    index: FxHashMap<(usize, u64), u32>,
}

impl ExpansionVarTable {
    fn from_cells(mut cells: Vec<(usize, u64)>) -> Self {
        cells.sort_unstable();
        cells.dedup();
        let index = cells
            .iter()
            .enumerate()
            .map(|(i, c)| (*c, i as u32 + 1))
            .collect();
        ExpansionVarTable { cells, index }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// CNF variable of existential `i` (zero based) at `cell`.
    pub fn var(&self, i: usize, cell: u64) -> Option<u32> {
        self.index.get(&(i, cell)).copied()
    }

    /// `(existential, cell)` of a CNF variable.
    pub fn cell(&self, var: u32) -> (usize, u64) {
        self.cells[var as usize - 1]
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, usize, u64)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .map(|(i, (e, c))| (i as u32 + 1, *e, *c))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CnfFormula {
    pub num_vars: u32,
    pub clauses: Vec<Vec<i32>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionCount {
    pub count: BigCount,
    pub support_cells: u64,
    pub clauses: u64,
    pub nonsupport_cells: String,
}

/// `¬φ` over the instance variables; diagram variable `v` is `VarId(v)`.
pub fn falsifying_bdd(d: &Dqbf, mgr: &mut Manager) -> Result<Bdd, CountError> {
    while (mgr.num_vars() as usize) < d.num_vars() {
        mgr.new_var();
    }
    let m = mgr.build(d.matrix(), &|v: VarId| Some(v.0))?;
    Ok(mgr.not(m))
}

fn projection_vars(d: &Dqbf) -> Vec<u32> {
    let mut keep: FxHashSet<u32> = FxHashSet::default();
    for e in d.existentials() {
        keep.insert(e.var.0);
        keep.extend(e.deps.iter().map(|v| v.0));
    }
    let mut v: Vec<u32> = keep.into_iter().collect();
    v.sort_unstable();
    v
}

fn check_cells(d: &Dqbf, cfg: &ExpansionConfig) -> Result<(), CountError> {
    let cells = d.total_cells();
    if cells > cfg.max_cells {
        return Err(CountError::Budget {
            what: "expansion cells".into(),
            needed: cells.to_string(),
            limit: cfg.max_cells.to_string(),
        });
    }
    Ok(())
}

/// Builds `exp(d)` by enumerating cubes of `¬φ` projected onto the
/// dependency sets and existentials, blocking each cube once emitted.
pub fn expand(d: &Dqbf, cfg: &ExpansionConfig) -> Result<(CnfFormula, ExpansionVarTable), CountError> {
    check_cells(d, cfg)?;
    let mut mgr = Manager::new();
    mgr.set_limits(cfg.limits.clone());
    crate::bdd::catch_abort(|| expand_in(d, cfg, &mut mgr))?
}

fn expand_in(
    d: &Dqbf,
    cfg: &ExpansionConfig,
    mgr: &mut Manager,
) -> Result<(CnfFormula, ExpansionVarTable), CountError> {
    let neg = falsifying_bdd(d, mgr)?;
    let keep = projection_vars(d);
    let drop: Vec<u32> = (0..d.num_vars() as u32)
        .filter(|v| keep.binary_search(v).is_err())
        .collect();
    let rest = mgr.exists_vars(neg, &drop);
    let k = d.k();
    let full = (1usize << k) - 1;
    let masks: Vec<usize> = if cfg.reduce {
        if k > MAX_REDUCE_EXISTENTIALS {
            return Err(CountError::Budget {
                what: "existentials for reduced expansion".into(),
                needed: k.to_string(),
                limit: MAX_REDUCE_EXISTENTIALS.to_string(),
            });
        }
        let mut m: Vec<usize> = (0..=full).collect();
        m.sort_by_key(|m| m.count_ones());
        m
    } else {
        vec![full]
    };

    // For a set S of existentials, a falsifier over S is a universal
    // assignment under which every choice for the others fails. Shorter
    // falsifiers subsume longer ones, so each S keeps only the falsifiers
    // not already covered by a proper subset.
    let vars_of = |mask: usize| -> Vec<u32> {
        let mut v: Vec<u32> = Vec::new();
        for (i, e) in d.existentials().iter().enumerate() {
            if mask >> i & 1 == 1 {
                v.push(e.var.0);
                v.extend(e.deps.iter().map(|z| z.0));
            }
        }
        v.sort_unstable();
        v.dedup();
        v
    };
    let mut found: Vec<Option<Bdd>> = vec![None; full + 1];
    let mut todo = Vec::new();
    let mut needed = BigUint::default();
    for &mask in &masks {
        let vars = vars_of(mask);
        let r = if mask == full {
            rest
        } else {
            let others: Vec<u32> = d
                .existentials()
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 0)
                .map(|(_, e)| e.var.0)
                .collect();
            let cube = mgr.cube(&others.iter().map(|v| (*v, true)).collect::<Vec<_>>());
            let all = mgr.forall(rest, cube);
            let hidden: Vec<u32> = keep.iter().copied().filter(|v| vars.binary_search(v).is_err()).collect();
            mgr.exists_vars(all, &hidden)
        };
        found[mask] = Some(r);
        let mut own = r;
        for (sub, c) in found.iter().enumerate().take(mask) {
            if let (true, Some(c)) = (sub & mask == sub, c) {
                own = mgr.diff(own, *c);
            }
        }
        needed += mgr.count_models(own, &vars)?;
        todo.push((mask, own, vars));
    }
    if needed > BigUint::from(cfg.max_clauses) {
        return Err(CountError::Budget {
            what: "expansion clauses".into(),
            needed: needed.to_string(),
            limit: cfg.max_clauses.to_string(),
        });
    }

    // (existential, cell, sign of y in the falsifier)
    let mut raw: Vec<Vec<(usize, u64, bool)>> = Vec::new();
    for (mask, own, vars) in todo {
        list_falsifiers(d, mgr, own, &vars, mask, &mut raw);
    }

    let table = ExpansionVarTable::from_cells(raw.iter().flatten().map(|(i, c, _)| (*i, *c)).collect());
    let mut seen = FxHashSet::default();
    let mut clauses = Vec::new();
    for c in raw {
        let mut lits: Vec<i32> = c
            .iter()
            .map(|(i, cell, b)| {
                let v = table.var(*i, *cell).expect("cell was tabled") as i32;
                if *b {
                    -v
                } else {
                    v
                }
            })
            .collect();
        lits.sort_unstable_by_key(|l| (l.unsigned_abs(), *l));
        if seen.insert(lits.clone()) {
            clauses.push(lits);
        }
    }
    clauses.sort_unstable_by(|a, b| {
        let key = |c: &Vec<i32>| c.iter().map(|l| (l.unsigned_abs(), *l)).collect::<Vec<_>>();
        key(a).cmp(&key(b))
    });
    Ok((
        CnfFormula {
            num_vars: table.len() as u32,
            clauses,
        },
        table,
    ))
}

/// Appends one clause per assignment of `vars` in `f`, over the
/// existentials in `mask`.
fn list_falsifiers(
    d: &Dqbf,
    mgr: &mut Manager,
    mut f: Bdd,
    vars: &[u32],
    mask: usize,
    raw: &mut Vec<Vec<(usize, u64, bool)>>,
) {
    let pos: FxHashMap<u32, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    while let Some(cube) = mgr.pick_cube(f) {
        let mut fixed = vec![None; vars.len()];
        for (v, b) in &cube {
            fixed[pos[v]] = Some(*b);
        }
        let open: Vec<usize> = (0..vars.len()).filter(|i| fixed[*i].is_none()).collect();
        for bits in 0u64..1 << open.len() {
            let mut val: Vec<bool> = fixed.iter().map(|b| b.unwrap_or(false)).collect();
            for (j, i) in open.iter().enumerate() {
                val[*i] = bits >> j & 1 == 1;
            }
            let at = |v: VarId| val[pos[&v.0]];
            let clause = d
                .existentials()
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(i, e)| {
                    let cell = e
                        .deps
                        .iter()
                        .enumerate()
                        .fold(0u64, |acc, (j, z)| acc | (at(*z) as u64) << j);
                    (i, cell, at(e.var))
                })
                .collect();
            raw.push(clause);
        }
        let block = mgr.cube(&cube);
        f = mgr.diff(f, block);
    }
}

/// Cell `c` of existential `i` as a little-endian bit string over z̄_i,
/// `-` for the single cell of an empty dependency set.
pub fn cell_bits(d: &Dqbf, i: usize, cell: u64) -> String {
    let w = d.existential(i).deps.len();
    if w == 0 {
        return "-".into();
    }
    (0..w).map(|j| if cell >> j & 1 == 1 { '1' } else { '0' }).collect()
}

/// DIMACS CNF with `c map <i> <cellbits> <var>` lines (1-based `i`).
pub fn to_dimacs(d: &Dqbf, cnf: &CnfFormula, table: &ExpansionVarTable) -> String {
    let mut s = String::new();
    for (v, i, cell) in table.iter() {
        let _ = writeln!(s, "c map {} {} {}", i + 1, cell_bits(d, i, cell), v);
    }
    let _ = writeln!(s, "p cnf {} {}", cnf.num_vars, cnf.clauses.len());
    for c in &cnf.clauses {
        for l in c {
            let _ = write!(s, "{l} ");
        }
        s.push_str("0\n");
    }
    s
}

/// Splits clauses into variable-disjoint groups.
fn clause_groups(cnf: &CnfFormula) -> Vec<Vec<usize>> {
    let n = cnf.num_vars as usize + 1;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for c in &cnf.clauses {
        let a = find(&mut parent, c[0].unsigned_abs() as usize);
        for l in &c[1..] {
            let b = find(&mut parent, l.unsigned_abs() as usize);
            parent[b] = a;
        }
    }
    let mut groups: FxHashMap<usize, Vec<usize>> = FxHashMap::default();
    for (i, c) in cnf.clauses.iter().enumerate() {
        let r = find(&mut parent, c[0].unsigned_abs() as usize);
        groups.entry(r).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = groups.into_values().collect();
    out.sort_unstable();
    out
}

/// `#exp(d) · 2^{#non-support cells}`, with the clause conjunction built as
/// a diagram per variable-disjoint clause group.
pub fn count_via_expansion(d: &Dqbf, cfg: &ExpansionConfig) -> Result<ExpansionCount, CountError> {
    let (cnf, table) = expand(d, cfg)?;
    if cnf.clauses.iter().any(|c| c.is_empty()) {
        // k = 0 with a falsifiable matrix.
        return Ok(ExpansionCount {
            count: BigCount::zero(),
            support_cells: 0,
            clauses: cnf.clauses.len() as u64,
            nonsupport_cells: "0".into(),
        });
    }
    if u64::from(cnf.num_vars) > cfg.max_vars {
        return Err(CountError::Budget {
            what: "expansion variables".into(),
            needed: cnf.num_vars.to_string(),
            limit: cfg.max_vars.to_string(),
        });
    }
    let mut mgr = Manager::with_vars(cnf.num_vars);
    mgr.set_limits(cfg.limits.clone());
    let models = crate::bdd::catch_abort(|| -> Result<BigCount, CountError> {
        let mut total = BigCount::one();
        for group in clause_groups(&cnf) {
            let mut f = mgr.one();
            let mut vars = FxHashSet::default();
            for &ci in &group {
                let lits: Vec<Bdd> = cnf.clauses[ci]
                    .iter()
                    .map(|l| {
                        vars.insert(l.unsigned_abs() - 1);
                        mgr.lit(l.unsigned_abs() - 1, *l > 0)
                    })
                    .collect();
                let c = mgr.or_all(lits);
                f = mgr.and(f, c);
            }
            let vars: Vec<u32> = vars.into_iter().collect();
            let n = mgr.count_models(f, &vars)?;
            if n == BigUint::default() {
                return Ok(BigCount::zero());
            }
            total = total.mul(&BigCount::from_biguint(&n));
        }
        Ok(total)
    })??;
    let nonsupport = BigUint::from(d.total_cells()) - BigUint::from(table.len());
    Ok(ExpansionCount {
        count: models.shl(&nonsupport),
        support_cells: table.len() as u64,
        clauses: cnf.clauses.len() as u64,
        nonsupport_cells: nonsupport.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::parse_circuit;

    const PHI0: &str = "#dqcir\nforall(x)\nexists(y1; x)\nexists(y2; x)\ng = or(y1, y2)\noutput(g)\n";
    const FREE: &str = "#dqcir\nforall(x)\nexists(y1; x)\nexists(y2; x)\ng = and()\noutput(g)\n";
    const EQ: &str = "#dqcir\nforall(x, xp)\nexists(y1; x)\nexists(y2; xp)\ng1 = iff(x, xp)\ng2 = iff(y1, y2)\ng = implies(g1, g2)\noutput(g)\n";

    fn exp(t: &str) -> (CnfFormula, ExpansionVarTable) {
        expand(&parse_circuit(t).unwrap(), &ExpansionConfig::default()).unwrap()
    }

    fn count(t: &str) -> BigCount {
        count_via_expansion(&parse_circuit(t).unwrap(), &ExpansionConfig::default())
            .unwrap()
            .count
    }

    #[test]
    fn phi0_expansion() {
        let (cnf, table) = exp(PHI0);
        assert_eq!(cnf.num_vars, 4);
        // Variables: X_{1,0}=1, X_{1,1}=2, X_{2,0}=3, X_{2,1}=4.
        assert_eq!(table.cell(3), (1, 0));
        assert_eq!(cnf.clauses, vec![vec![1, 3], vec![2, 4]]);
        assert_eq!(count(PHI0), BigCount::from_u64(9));
    }

    #[test]
    fn tautology_is_empty() {
        let (cnf, table) = exp(FREE);
        assert!(cnf.clauses.is_empty() && table.is_empty());
        assert_eq!(count(FREE), BigCount::from_u64(16));
    }

    #[test]
    fn equality_expansion() {
        let (cnf, _) = exp(EQ);
        assert_eq!(cnf.clauses.len(), 4);
        assert_eq!(count(EQ), BigCount::from_u64(4));
    }

    #[test]
    fn contradiction_counts_zero() {
        let t = "#dqcir\nforall(x)\nexists(y1; x)\nexists(y2)\ng = and(y1, -y1)\noutput(g)\n";
        assert_eq!(count(t), BigCount::zero());
    }

    #[test]
    fn dimacs_map_lines() {
        let d = parse_circuit(PHI0).unwrap();
        let (cnf, table) = expand(&d, &ExpansionConfig::default()).unwrap();
        let text = to_dimacs(&d, &cnf, &table);
        assert!(text.starts_with("c map 1 0 1\nc map 1 1 2\nc map 2 0 3\nc map 2 1 4\np cnf 4 2\n"));
        assert!(text.ends_with("1 3 0\n2 4 0\n"));
    }

    #[test]
    fn cell_budget() {
        let d = parse_circuit(PHI0).unwrap();
        let cfg = ExpansionConfig {
            max_cells: 3,
            ..ExpansionConfig::default()
        };
        assert!(matches!(expand(&d, &cfg), Err(CountError::Budget { .. })));
    }

    fn reduced(t: &str) -> (CnfFormula, BigCount) {
        let d = parse_circuit(t).unwrap();
        let cfg = ExpansionConfig {
            reduce: true,
            ..ExpansionConfig::default()
        };
        (expand(&d, &cfg).unwrap().0, count_via_expansion(&d, &cfg).unwrap().count)
    }

    #[test]
    fn reduced_drops_unpinned_existentials() {
        // y1 must be true everywhere whatever y2 does.
        let t = "#dqcir\nforall(x)\nexists(y1; x)\nexists(y2; x)\nh = or(y2, -y2)\ng = and(y1, h)\noutput(g)\n";
        let (cnf, n) = reduced(t);
        assert_eq!(cnf.clauses, vec![vec![1], vec![2]]);
        assert_eq!(n, count(t));
        assert_eq!(n, BigCount::from_u64(4));
    }

    #[test]
    fn reduced_matches_full() {
        for t in [PHI0, FREE, EQ] {
            let (cnf, n) = reduced(t);
            assert_eq!(cnf, exp(t).0);
            assert_eq!(n, count(t));
        }
        let t = "#dqcir\nforall(x)\nexists(y1; x)\nexists(y2)\ng = and(y1, -y1)\noutput(g)\n";
        let (cnf, n) = reduced(t);
        assert_eq!(cnf.clauses, vec![Vec::<i32>::new()]);
        assert!(n.is_zero());
    }
}
