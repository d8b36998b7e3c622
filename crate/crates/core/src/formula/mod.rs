//! Prenex DQBF instances: variables, dependency sets, the matrix circuit,
//! and the two text formats they are exchanged in.

mod expr;
mod parse;

pub use expr::{BoolExpr, ExprBuilder, Gate, GateId};
pub use parse::{parse, parse_circuit, parse_dqdimacs, serialize_circuit, InputFormat};

use std::fmt;

use rustc_hash::FxHashMap;
use thiserror::Error;

/// Dense variable id, assigned in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FormulaError {
    #[error("{line}:{col}: syntax error: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{line}:{col}: {msg}")]
    Semantic { line: usize, col: usize, msg: String },
    #[error("undeclared variable `{0}`")]
    Undeclared(String),
    #[error("duplicate declaration of `{0}`")]
    Duplicate(String),
    #[error("dependency `{dep}` of `{existential}` is not a universal variable")]
    DependencyNotUniversal { existential: String, dep: String },
    #[error("duplicate dependency `{dep}` of `{existential}`")]
    DuplicateDependency { existential: String, dep: String },
    #[error("variable {0:?} is not in the assignment's domain")]
    NotInDomain(VarId),
    #[error("expected a {expected}-DQBF, found {found} existential variables")]
    WrongArity { expected: usize, found: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarKind {
    Universal(usize),
    Existential(usize),
}

/// An existential variable and its dependency set (in universal order).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Existential {
    pub var: VarId,
    pub deps: Vec<VarId>,
}

/// `∀x̄ ∃y_1(z̄_1) … ∃y_k(z̄_k). matrix`
#[derive(Debug, Clone)]
pub struct Dqbf {
    names: Vec<String>,
    kinds: Vec<VarKind>,
    universals: Vec<VarId>,
    existentials: Vec<Existential>,
    matrix: BoolExpr,
}

impl PartialEq for Dqbf {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
            && self.universals == other.universals
            && self.existentials == other.existentials
            && self.matrix == other.matrix
    }
}

impl Eq for Dqbf {}

impl Dqbf {
    pub fn universals(&self) -> &[VarId] {
        &self.universals
    }

    pub fn existentials(&self) -> &[Existential] {
        &self.existentials
    }

    pub fn existential(&self, i: usize) -> &Existential {
        &self.existentials[i]
    }

    pub fn matrix(&self) -> &BoolExpr {
        &self.matrix
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    /// Number of universals, `n`.
    pub fn n(&self) -> usize {
        self.universals.len()
    }

    /// Number of existentials, `k`.
    pub fn k(&self) -> usize {
        self.existentials.len()
    }

    pub fn is_2dqbf(&self) -> bool {
        self.k() == 2
    }

    pub fn require_k(&self, k: usize) -> Result<(), FormulaError> {
        if self.k() == k {
            Ok(())
        } else {
            Err(FormulaError::WrongArity {
                expected: k,
                found: self.k(),
            })
        }
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.names[v.index()]
    }

    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.names.iter().position(|n| n == name).map(|i| VarId(i as u32))
    }

    pub fn is_universal(&self, v: VarId) -> bool {
        matches!(self.kinds[v.index()], VarKind::Universal(_))
    }

    /// Position of a universal in x̄.
    pub fn universal_position(&self, v: VarId) -> Option<usize> {
        match self.kinds[v.index()] {
            VarKind::Universal(p) => Some(p),
            VarKind::Existential(_) => None,
        }
    }

    /// Index of an existential among y_1..y_k (zero based).
    pub fn existential_index(&self, v: VarId) -> Option<usize> {
        match self.kinds[v.index()] {
            VarKind::Existential(i) => Some(i),
            VarKind::Universal(_) => None,
        }
    }

    /// Σ_i 2^{|z̄_i|}, saturating.
    pub fn total_cells(&self) -> u128 {
        self.existentials
            .iter()
            .map(|e| 1u128.checked_shl(e.deps.len() as u32).unwrap_or(u128::MAX))
            .fold(0u128, |a, b| a.saturating_add(b))
    }

    /// Same prefix, different matrix.
    pub fn with_matrix(&self, matrix: BoolExpr) -> Result<Dqbf, FormulaError> {
        let d = Dqbf {
            matrix,
            ..self.clone()
        };
        d.validate()?;
        Ok(d)
    }

    fn validate(&self) -> Result<(), FormulaError> {
        for v in self.matrix.variables() {
            if v.index() >= self.names.len() {
                return Err(FormulaError::Undeclared(format!("#{}", v.0)));
            }
        }
        Ok(())
    }

    /// Projection of an assignment to x̄ onto the dependency set `z`.
    pub fn project(&self, a: &Assignment, z: &[VarId]) -> Result<Vec<bool>, FormulaError> {
        z.iter().map(|v| a.get(*v)).collect()
    }

    pub fn eval_matrix(&self, a: &Assignment) -> Result<bool, FormulaError> {
        for v in self.matrix.variables() {
            a.get(v)?;
        }
        Ok(self.matrix.eval(|v| a.get(v).expect("checked above")))
    }
}

/// Subsequence of `a` (an assignment to `xs`, in order) at the variables of `z`.
pub fn project(xs: &[VarId], a: &[bool], z: &[VarId]) -> Vec<bool> {
    let mut out = Vec::with_capacity(z.len());
    let mut zi = 0;
    for (x, val) in xs.iter().zip(a) {
        if zi < z.len() && z[zi] == *x {
            out.push(*val);
            zi += 1;
        }
    }
    assert_eq!(zi, z.len(), "projection target is not an ordered sublist");
    out
}

/// Total map from a declared variable list to truth values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Assignment {
    vars: Vec<VarId>,
    values: Vec<bool>,
    index: FxHashMap<VarId, usize>,
}

impl Assignment {
    pub fn new(vars: Vec<VarId>, values: Vec<bool>) -> Self {
        assert_eq!(vars.len(), values.len());
        let index = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
        Assignment { vars, values, index }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, bool)>) -> Self {
        let (vars, values) = pairs.into_iter().unzip();
        Self::new(vars, values)
    }

    pub fn get(&self, v: VarId) -> Result<bool, FormulaError> {
        self.index
            .get(&v)
            .map(|i| self.values[*i])
            .ok_or(FormulaError::NotInDomain(v))
    }

    pub fn vars(&self) -> &[VarId] {
        &self.vars
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }
}

/// Incremental construction of a [`Dqbf`].
#[derive(Debug, Default)]
pub struct DqbfBuilder {
    names: Vec<String>,
    kinds: Vec<VarKind>,
    by_name: FxHashMap<String, VarId>,
    universals: Vec<VarId>,
    existentials: Vec<Existential>,
    expr: ExprBuilder,
}

impl DqbfBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn declare(&mut self, name: &str, kind: VarKind) -> Result<VarId, FormulaError> {
        if self.by_name.contains_key(name) {
            return Err(FormulaError::Duplicate(name.to_string()));
        }
        let id = VarId(self.names.len() as u32);
        self.names.push(name.to_string());
        self.kinds.push(kind);
        self.by_name.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn universal(&mut self, name: &str) -> Result<VarId, FormulaError> {
        let id = self.declare(name, VarKind::Universal(self.universals.len()))?;
        self.universals.push(id);
        Ok(id)
    }

    pub fn universals(&mut self, names: &[String]) -> Result<Vec<VarId>, FormulaError> {
        names.iter().map(|n| self.universal(n)).collect()
    }

    /// Declares `∃name(deps)`; the dependency list is reordered to x̄ order.
    pub fn existential(&mut self, name: &str, deps: &[VarId]) -> Result<VarId, FormulaError> {
        let mut positioned = Vec::with_capacity(deps.len());
        for d in deps {
            match self.kinds.get(d.index()) {
                Some(VarKind::Universal(p)) => positioned.push((*p, *d)),
                _ => {
                    return Err(FormulaError::DependencyNotUniversal {
                        existential: name.to_string(),
                        dep: self
                            .names
                            .get(d.index())
                            .cloned()
                            .unwrap_or_else(|| format!("#{}", d.0)),
                    })
                }
            }
        }
        positioned.sort();
        for w in positioned.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(FormulaError::DuplicateDependency {
                    existential: name.to_string(),
                    dep: self.names[w[0].1.index()].clone(),
                });
            }
        }
        let id = self.declare(name, VarKind::Existential(self.existentials.len()))?;
        self.existentials.push(Existential {
            var: id,
            deps: positioned.into_iter().map(|(_, d)| d).collect(),
        });
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<VarId> {
        self.by_name.get(name).copied()
    }

    pub fn is_declared(&self, name: &str) -> bool {
        self.by_name.contains_key(name)
    }

    pub fn expr(&mut self) -> &mut ExprBuilder {
        &mut self.expr
    }

    pub fn build(self, root: GateId) -> Result<Dqbf, FormulaError> {
        let d = Dqbf {
            names: self.names,
            kinds: self.kinds,
            universals: self.universals,
            existentials: self.existentials,
            matrix: self.expr.finish(root).canonical(),
        };
        d.validate()?;
        Ok(d)
    }
}

impl fmt::Display for Dqbf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_circuit(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi0() -> Dqbf {
        let mut b = DqbfBuilder::new();
        let x = b.universal("x").unwrap();
        let y1 = b.existential("y1", &[x]).unwrap();
        let y2 = b.existential("y2", &[x]).unwrap();
        let e = b.expr();
        let a = e.var(y1);
        let c = e.var(y2);
        let r = e.or2(a, c);
        b.build(r).unwrap()
    }

    #[test]
    fn projection_example() {
        let xs: Vec<VarId> = (0..5).map(VarId).collect();
        let a = [false, false, true, false, true];
        let z = [VarId(0), VarId(1), VarId(4)];
        assert_eq!(project(&xs, &a, &z), vec![false, false, true]);
        assert_eq!(project(&xs, &a, &xs), a.to_vec());
        assert!(project(&xs, &a, &[]).is_empty());
    }

    #[test]
    fn evaluation_of_disjunction() {
        let d = phi0();
        let [x, y1, y2] = [0, 1, 2].map(VarId);
        let a = Assignment::from_pairs([(x, false), (y1, false), (y2, true)]);
        assert!(d.eval_matrix(&a).unwrap());
        let a = Assignment::from_pairs([(x, true), (y1, false), (y2, false)]);
        assert!(!d.eval_matrix(&a).unwrap());
        let partial = Assignment::from_pairs([(x, true)]);
        assert_eq!(d.eval_matrix(&partial), Err(FormulaError::NotInDomain(y1)));
    }

    #[test]
    fn dependency_order_follows_prefix() {
        let mut b = DqbfBuilder::new();
        let x1 = b.universal("x1").unwrap();
        let x2 = b.universal("x2").unwrap();
        let y = b.existential("y", &[x2, x1]).unwrap();
        assert!(b.existential("z", &[y]).is_err());
        assert!(b.existential("w", &[x1, x1]).is_err());
        assert!(b.universal("x1").is_err());
        let t = b.expr().constant(true);
        let d = b.build(t).unwrap();
        assert_eq!(d.existential(0).deps, vec![x1, x2]);
    }
}
