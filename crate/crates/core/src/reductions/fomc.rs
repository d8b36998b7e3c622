//! Universal first-order sentences, their DQBF encoding over a domain of
//! size `2^n`, and a structure-enumeration oracle.
//!
//! Input format, one item per line (`#` starts a comment):
//!
//! ```text
//! predicate smoke/1
//! predicate friend/2
//! forall u v;
//! friend(u, v) & smoke(u) -> smoke(v)
//! ```
//!
//! Body operators, loosest first: `<->`, `->` (right associative), `|`,
//! `^`, `&`, `!`. Atoms are `P(u, …)`, `u = v`, `u != v`, `true`, `false`.

use std::fmt;

use rustc_hash::FxHashMap;
use thiserror::Error;

use super::{Names, ReductionError};
use crate::bigcount::BigCount;
use crate::formula::{Dqbf, DqbfBuilder, ExprBuilder, GateId, VarId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FoError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("outside the universal relational fragment: {0}")]
    Fragment(String),
    #[error("undeclared {kind} `{name}`")]
    Undeclared { kind: &'static str, name: String },
    #[error("`{name}` has arity {expected}, used with {found} arguments")]
    Arity { name: String, expected: usize, found: usize },
    #[error("duplicate declaration of `{0}`")]
    Duplicate(String),
    #[error("structure enumeration needs {0} ground instances, over the limit")]
    TooLarge(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Predicate {
    pub name: String,
    pub arity: usize,
}

/// Quantifier-free body; variables and predicates are indices into the
/// owning [`FoSentence`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FoExpr {
    Const(bool),
    Atom { pred: usize, args: Vec<usize> },
    Eq(usize, usize),
    Not(Box<FoExpr>),
    And(Vec<FoExpr>),
    Or(Vec<FoExpr>),
    Xor(Box<FoExpr>, Box<FoExpr>),
    Implies(Box<FoExpr>, Box<FoExpr>),
    Iff(Box<FoExpr>, Box<FoExpr>),
}

impl FoExpr {
    fn atoms<'a>(&'a self, out: &mut Vec<(usize, &'a [usize])>) {
        match self {
            FoExpr::Atom { pred, args } => out.push((*pred, args)),
            FoExpr::Const(_) | FoExpr::Eq(..) => {}
            FoExpr::Not(a) => a.atoms(out),
            FoExpr::And(xs) | FoExpr::Or(xs) => xs.iter().for_each(|x| x.atoms(out)),
            FoExpr::Xor(a, b) | FoExpr::Implies(a, b) | FoExpr::Iff(a, b) => {
                a.atoms(out);
                b.atoms(out);
            }
        }
    }

    /// Truth value given the atoms (predicate, argument variables) and a
    /// domain element per variable.
    pub fn eval(&self, atom: &mut impl FnMut(usize, &[usize]) -> bool, var: &impl Fn(usize) -> u64) -> bool {
        match self {
            FoExpr::Const(b) => *b,
            FoExpr::Atom { pred, args } => atom(*pred, args),
            FoExpr::Eq(a, b) => var(*a) == var(*b),
            FoExpr::Not(a) => !a.eval(atom, var),
            FoExpr::And(xs) => xs.iter().all(|x| x.eval(atom, var)),
            FoExpr::Or(xs) => xs.iter().any(|x| x.eval(atom, var)),
            FoExpr::Xor(a, b) => a.eval(atom, var) != b.eval(atom, var),
            FoExpr::Implies(a, b) => !a.eval(atom, var) || b.eval(atom, var),
            FoExpr::Iff(a, b) => a.eval(atom, var) == b.eval(atom, var),
        }
    }
}

/// `∀v̄. body` over a relational vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoSentence {
    pub predicates: Vec<Predicate>,
    pub vars: Vec<String>,
    pub body: FoExpr,
}

impl fmt::Display for FoSentence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.predicates {
            writeln!(f, "predicate {}/{}", p.name, p.arity)?;
        }
        write!(f, "forall")?;
        for v in &self.vars {
            write!(f, " {v}")?;
        }
        writeln!(f, ";")?;
        self.write_expr(f, &self.body)?;
        writeln!(f)
    }
}

impl FoSentence {
    fn write_expr(&self, f: &mut fmt::Formatter<'_>, e: &FoExpr) -> fmt::Result {
        let bin = |f: &mut fmt::Formatter<'_>, op: &str, a: &FoExpr, b: &FoExpr| -> fmt::Result {
            write!(f, "(")?;
            self.write_expr(f, a)?;
            write!(f, " {op} ")?;
            self.write_expr(f, b)?;
            write!(f, ")")
        };
        match e {
            FoExpr::Const(b) => write!(f, "{b}"),
            FoExpr::Atom { pred, args } => {
                write!(f, "{}", self.predicates[*pred].name)?;
                if !args.is_empty() {
                    let names: Vec<&str> = args.iter().map(|a| self.vars[*a].as_str()).collect();
                    write!(f, "({})", names.join(", "))?;
                }
                Ok(())
            }
            FoExpr::Eq(a, b) => write!(f, "{} = {}", self.vars[*a], self.vars[*b]),
            FoExpr::Not(a) => {
                write!(f, "!")?;
                self.write_expr(f, a)
            }
            FoExpr::And(xs) | FoExpr::Or(xs) => {
                let op = if matches!(e, FoExpr::And(_)) { " & " } else { " | " };
                write!(f, "(")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{op}")?;
                    }
                    self.write_expr(f, x)?;
                }
                write!(f, ")")
            }
            FoExpr::Xor(a, b) => bin(f, "^", a, b),
            FoExpr::Implies(a, b) => bin(f, "->", a, b),
            FoExpr::Iff(a, b) => bin(f, "<->", a, b),
        }
    }

    /// Distinct atoms of the body in order of first occurrence.
    pub fn atoms(&self) -> Vec<(usize, Vec<usize>)> {
        let mut all = Vec::new();
        self.body.atoms(&mut all);
        let mut out: Vec<(usize, Vec<usize>)> = Vec::new();
        for (p, args) in all {
            if !out.iter().any(|(q, a)| *q == p && a.as_slice() == args) {
                out.push((p, args.to_vec()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Not,
    And,
    Or,
    Xor,
    Implies,
    Iff,
    Eq,
    Neq,
}

fn lex(text: &str, line: usize, col0: usize) -> Result<Vec<(Tok, usize, usize)>, FoError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |c: usize, msg: String| FoError::Syntax { line, col: col0 + c + 1, msg };
    while i < chars.len() {
        let c = chars[i];
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let (tok, len) = if c.is_whitespace() {
            i += 1;
            continue;
        } else if rest.starts_with("<->") {
            (Tok::Iff, 3)
        } else if rest.starts_with("->") {
            (Tok::Implies, 2)
        } else if rest.starts_with("!=") {
            (Tok::Neq, 2)
        } else {
            match c {
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                ',' => (Tok::Comma, 1),
                '!' | '~' => (Tok::Not, 1),
                '&' => (Tok::And, 1),
                '|' => (Tok::Or, 1),
                '^' => (Tok::Xor, 1),
                '=' => (Tok::Eq, 1),
                _ if c.is_alphanumeric() || c == '_' => {
                    let start = i;
                    while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                        i += 1;
                    }
                    let word: String = chars[start..i].iter().collect();
                    out.push((Tok::Ident(word), line, col0 + start + 1));
                    continue;
                }
                _ => return Err(err(i, format!("unexpected character `{c}`"))),
            }
        };
        out.push((tok, line, col0 + i + 1));
        i += len;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    preds: &'a [Predicate],
    vars: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn err(&self, msg: impl Into<String>) -> FoError {
        let (line, col) = match self.toks.get(self.pos).or(self.toks.last()) {
            Some((_, l, c)) => (*l, *c),
            None => (0, 0),
        };
        FoError::Syntax { line, col, msg: msg.into() }
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn iff(&mut self) -> Result<FoExpr, FoError> {
        let mut a = self.implies()?;
        while self.eat(&Tok::Iff) {
            let b = self.implies()?;
            a = FoExpr::Iff(Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn implies(&mut self) -> Result<FoExpr, FoError> {
        let a = self.or()?;
        if self.eat(&Tok::Implies) {
            let b = self.implies()?;
            return Ok(FoExpr::Implies(Box::new(a), Box::new(b)));
        }
        Ok(a)
    }

    fn or(&mut self) -> Result<FoExpr, FoError> {
        let mut xs = vec![self.xor()?];
        while self.eat(&Tok::Or) {
            xs.push(self.xor()?);
        }
        Ok(if xs.len() == 1 { xs.pop().unwrap() } else { FoExpr::Or(xs) })
    }

    fn xor(&mut self) -> Result<FoExpr, FoError> {
        let mut a = self.and()?;
        while self.eat(&Tok::Xor) {
            let b = self.and()?;
            a = FoExpr::Xor(Box::new(a), Box::new(b));
        }
        Ok(a)
    }

    fn and(&mut self) -> Result<FoExpr, FoError> {
        let mut xs = vec![self.unary()?];
        while self.eat(&Tok::And) {
            xs.push(self.unary()?);
        }
        Ok(if xs.len() == 1 { xs.pop().unwrap() } else { FoExpr::And(xs) })
    }

    fn unary(&mut self) -> Result<FoExpr, FoError> {
        if self.eat(&Tok::Not) {
            return Ok(FoExpr::Not(Box::new(self.unary()?)));
        }
        if self.eat(&Tok::LParen) {
            let e = self.iff()?;
            if !self.eat(&Tok::RParen) {
                return Err(self.err("expected `)`"));
            }
            return Ok(e);
        }
        let word = match self.peek() {
            Some(Tok::Ident(w)) => w.clone(),
            _ => return Err(self.err("expected a formula")),
        };
        self.pos += 1;
        match word.as_str() {
            "true" => return Ok(FoExpr::Const(true)),
            "false" => return Ok(FoExpr::Const(false)),
            "exists" => return Err(FoError::Fragment("existential quantifier".into())),
            "forall" => return Err(FoError::Fragment("nested quantifier".into())),
            _ => {}
        }
        if let Some(v) = self.vars.iter().position(|x| *x == word) {
            let negated = if self.eat(&Tok::Eq) {
                false
            } else if self.eat(&Tok::Neq) {
                true
            } else {
                return Err(self.err(format!("variable `{word}` used as a formula")));
            };
            let w = self.variable()?;
            let eq = FoExpr::Eq(v, w);
            return Ok(if negated { FoExpr::Not(Box::new(eq)) } else { eq });
        }
        let pred = self.preds.iter().position(|p| p.name == word).ok_or(FoError::Undeclared {
            kind: "predicate",
            name: word.clone(),
        })?;
        let mut args = Vec::new();
        if self.eat(&Tok::LParen) {
            loop {
                args.push(self.variable()?);
                if self.eat(&Tok::Comma) {
                    continue;
                }
                if self.eat(&Tok::RParen) {
                    break;
                }
                return Err(self.err("expected `,` or `)`"));
            }
        }
        let expected = self.preds[pred].arity;
        if args.len() != expected {
            return Err(FoError::Arity {
                name: word,
                expected,
                found: args.len(),
            });
        }
        Ok(FoExpr::Atom { pred, args })
    }

    fn variable(&mut self) -> Result<usize, FoError> {
        let word = match self.peek() {
            Some(Tok::Ident(w)) => w.clone(),
            _ => return Err(self.err("expected a variable")),
        };
        self.pos += 1;
        if self.peek() == Some(&Tok::LParen) {
            return Err(FoError::Fragment(format!("function symbol `{word}`")));
        }
        self.vars.iter().position(|x| *x == word).ok_or(FoError::Undeclared {
            kind: "variable",
            name: word,
        })
    }
}

/// Parses a sentence in the line-oriented format described above.
pub fn parse_fo(text: &str) -> Result<FoSentence, FoError> {
    let mut predicates: Vec<Predicate> = Vec::new();
    let mut vars: Option<Vec<String>> = None;
    let mut body = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("");
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let syntax = |msg: String| FoError::Syntax { line: line_no, col: 1, msg };
        if let Some(rest) = trimmed.strip_prefix("predicate ") {
            let (name, arity) = rest
                .trim()
                .split_once('/')
                .ok_or_else(|| syntax("expected `predicate NAME/ARITY`".into()))?;
            let name = name.trim().to_string();
            let arity: usize = arity
                .trim()
                .parse()
                .map_err(|_| syntax(format!("bad arity `{}`", arity.trim())))?;
            if predicates.iter().any(|p| p.name == name) {
                return Err(FoError::Duplicate(name));
            }
            predicates.push(Predicate { name, arity });
        } else if trimmed.starts_with("exists") {
            return Err(FoError::Fragment("existential quantifier".into()));
        } else if let Some(rest) = trimmed.strip_prefix("forall") {
            if vars.is_some() {
                return Err(FoError::Fragment("more than one quantifier block".into()));
            }
            let rest = rest
                .trim()
                .strip_suffix(';')
                .ok_or_else(|| syntax("expected `;` after the variables".into()))?;
            let mut vs: Vec<String> = Vec::new();
            for v in rest.split_whitespace() {
                if vs.iter().any(|x| x == v) || predicates.iter().any(|p| p.name == v) {
                    return Err(FoError::Duplicate(v.to_string()));
                }
                vs.push(v.to_string());
            }
            vars = Some(vs);
        } else {
            let col0 = line.len() - line.trim_start().len();
            body.extend(lex(trimmed, line_no, col0)?);
        }
    }
    let vars = vars.unwrap_or_default();
    if body.is_empty() {
        return Ok(FoSentence {
            predicates,
            vars,
            body: FoExpr::Const(true),
        });
    }
    let mut p = Parser {
        toks: body,
        pos: 0,
        preds: &predicates,
        vars: &vars,
    };
    let e = p.iff()?;
    if p.pos != p.toks.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(FoSentence {
        predicates,
        vars,
        body: e,
    })
}

/// Whether every tuple of `pred` is read by each of its atoms, and any two
/// atoms can be made to read the same tuple at one universal point.
fn aligned(atoms: &[&Vec<usize>]) -> bool {
    let distinct = atoms.iter().all(|a| {
        let mut s = a.to_vec();
        s.sort_unstable();
        s.dedup();
        s.len() == a.len()
    });
    distinct
        && atoms.iter().enumerate().all(|(i, a)| {
            atoms[i + 1..].iter().all(|b| {
                a.iter()
                    .enumerate()
                    .all(|(j, x)| b.iter().enumerate().all(|(l, y)| x != y || j == l))
            })
        })
}

/// The DQBF whose Skolem functions are the models of `s` over the domain
/// `{0,1}^n`.
///
/// Each distinct atom becomes an existential over the blocks of its
/// arguments. Atoms of one predicate are tied pairwise when their
/// argument patterns are compatible; otherwise they are all tied to one
/// extra existential over fresh blocks, which also stands for predicates
/// the body never mentions.
pub fn fomc_encode(s: &FoSentence, n: usize) -> Result<Dqbf, ReductionError> {
    let mut names = Names::new();
    let mut b = DqbfBuilder::new();
    let mut blocks: Vec<Vec<VarId>> = Vec::new();
    for v in &s.vars {
        let block = (0..n)
            .map(|j| b.universal(&names.fresh(&format!("{v}_{j}"))))
            .collect::<Result<Vec<_>, _>>()?;
        blocks.push(block);
    }
    let atoms = s.atoms();
    let mut atom_vars = Vec::with_capacity(atoms.len());
    for (p, args) in &atoms {
        let pred = &s.predicates[*p];
        let mut label = pred.name.clone();
        for a in args {
            label.push('_');
            label.push_str(&s.vars[*a]);
        }
        let mut deps: Vec<VarId> = Vec::new();
        for a in args {
            for v in &blocks[*a] {
                if !deps.contains(v) {
                    deps.push(*v);
                }
            }
        }
        atom_vars.push(b.existential(&names.fresh(&label), &deps)?);
    }
    let mut canonical: FxHashMap<usize, (VarId, Vec<Vec<VarId>>)> = FxHashMap::default();
    for (p, pred) in s.predicates.iter().enumerate() {
        let mine: Vec<&Vec<usize>> = atoms.iter().filter(|(q, _)| *q == p).map(|(_, a)| a).collect();
        if !mine.is_empty() && aligned(&mine) {
            continue;
        }
        let mut ws = Vec::with_capacity(pred.arity);
        for j in 0..pred.arity {
            let w = (0..n)
                .map(|bit| b.universal(&names.fresh(&format!("{}_arg{j}_{bit}", pred.name))))
                .collect::<Result<Vec<_>, _>>()?;
            ws.push(w);
        }
        let deps: Vec<VarId> = ws.iter().flatten().copied().collect();
        let y = b.existential(&names.fresh(&pred.name), &deps)?;
        canonical.insert(p, (y, ws));
    }

    let e = b.expr();
    let mut parts = vec![encode_body(e, &s.body, &atoms, &atom_vars, &blocks)];
    for (i, (p, args)) in atoms.iter().enumerate() {
        if let Some((y, ws)) = canonical.get(p) {
            let eqs: Vec<GateId> = args.iter().zip(ws).map(|(a, w)| e.vars_equal(&blocks[*a], w)).collect();
            let pre = e.and(eqs);
            let (ga, gy) = (e.var(atom_vars[i]), e.var(*y));
            let same = e.iff(ga, gy);
            parts.push(e.implies(pre, same));
            continue;
        }
        for (j, (q, other)) in atoms.iter().enumerate().skip(i + 1) {
            if q != p {
                continue;
            }
            let eqs: Vec<GateId> = args
                .iter()
                .zip(other)
                .map(|(a, c)| e.vars_equal(&blocks[*a], &blocks[*c]))
                .collect();
            let pre = e.and(eqs);
            let (ga, gb) = (e.var(atom_vars[i]), e.var(atom_vars[j]));
            let same = e.iff(ga, gb);
            parts.push(e.implies(pre, same));
        }
    }
    let root = e.and(parts);
    Ok(b.build(root)?)
}

fn encode_body(
    e: &mut ExprBuilder,
    x: &FoExpr,
    atoms: &[(usize, Vec<usize>)],
    atom_vars: &[VarId],
    blocks: &[Vec<VarId>],
) -> GateId {
    let rec = |e: &mut ExprBuilder, y: &FoExpr| encode_body(e, y, atoms, atom_vars, blocks);
    match x {
        FoExpr::Const(b) => e.constant(*b),
        FoExpr::Atom { pred, args } => {
            let i = atoms
                .iter()
                .position(|(p, a)| p == pred && a == args)
                .expect("atom was collected");
            e.var(atom_vars[i])
        }
        FoExpr::Eq(a, b) => e.vars_equal(&blocks[*a], &blocks[*b]),
        FoExpr::Not(a) => {
            let g = rec(e, a);
            e.not(g)
        }
        FoExpr::And(xs) | FoExpr::Or(xs) => {
            let gs = xs.iter().map(|y| rec(e, y)).collect();
            if matches!(x, FoExpr::And(_)) {
                e.and(gs)
            } else {
                e.or(gs)
            }
        }
        FoExpr::Xor(a, b) | FoExpr::Implies(a, b) | FoExpr::Iff(a, b) => {
            let (ga, gb) = (rec(e, a), rec(e, b));
            match x {
                FoExpr::Xor(..) => e.xor2(ga, gb),
                FoExpr::Implies(..) => e.implies(ga, gb),
                _ => e.iff(ga, gb),
            }
        }
    }
}

/// Ground instances the oracle is willing to build.
pub const MAX_GROUNDINGS: u64 = 1 << 20;

/// Number of models of `s` over `{0,1}^n`, by depth-first search over the
/// tuple bits. Each ground instance of the body is checked as soon as its
/// last bit is set; bits read by no instance are counted in closed form.
pub fn structure_count(s: &FoSentence, n: usize) -> Result<BigCount, FoError> {
    let size = 1u64
        .checked_shl(n as u32)
        .filter(|_| n < 32)
        .ok_or_else(|| FoError::TooLarge(format!("2^(2^{n})")))?;
    let groundings = (0..s.vars.len()).try_fold(1u64, |acc, _| acc.checked_mul(size));
    let groundings = match groundings {
        Some(g) if g <= MAX_GROUNDINGS => g,
        _ => return Err(FoError::TooLarge(format!("{size}^{}", s.vars.len()))),
    };
    let mut offsets = Vec::with_capacity(s.predicates.len());
    let mut total_bits = 0u64;
    for p in &s.predicates {
        offsets.push(total_bits);
        let tuples = (0..p.arity)
            .try_fold(1u64, |acc, _| acc.checked_mul(size))
            .filter(|t| *t <= MAX_GROUNDINGS)
            .ok_or_else(|| FoError::TooLarge(format!("{size}^{}", p.arity)))?;
        total_bits += tuples;
    }
    let bit_of = |pred: usize, args: &[usize], sigma: &[u64]| {
        let idx = args.iter().rev().fold(0u64, |acc, a| acc * size + sigma[*a]);
        (offsets[pred] + idx) as usize
    };

    // Ground instances bucketed by their largest bit.
    let mut buckets: Vec<Vec<Vec<u64>>> = vec![Vec::new(); total_bits as usize];
    let atoms = s.atoms();
    let mut sigma = vec![0u64; s.vars.len()];
    for g in 0..groundings {
        let mut rest = g;
        for v in sigma.iter_mut() {
            *v = rest % size;
            rest /= size;
        }
        let top = atoms.iter().map(|(p, args)| bit_of(*p, args, &sigma)).max();
        let Some(top) = top else {
            if !s.body.eval(&mut |_, _| false, &|v| sigma[v]) {
                return Ok(BigCount::zero());
            }
            continue;
        };
        buckets[top].push(sigma.clone());
    }
    let depth = buckets.iter().rposition(|b| !b.is_empty()).map_or(0, |t| t + 1);
    let mut bits = vec![false; depth];
    let mut models = 0u64;
    search(s, &buckets, &bit_of, &mut bits, 0, &mut models);
    let free = total_bits - depth as u64;
    Ok(BigCount::from_u64(models).mul(&BigCount::from_pow2(num_bigint::BigUint::from(free))))
}

fn search(
    s: &FoSentence,
    buckets: &[Vec<Vec<u64>>],
    bit_of: &impl Fn(usize, &[usize], &[u64]) -> usize,
    bits: &mut Vec<bool>,
    i: usize,
    models: &mut u64,
) {
    if i == bits.len() {
        *models += 1;
        return;
    }
    for v in [false, true] {
        bits[i] = v;
        let ok = buckets[i].iter().all(|sigma| {
            s.body
                .eval(&mut |p, args| bits[bit_of(p, args, sigma)], &|x| sigma[x])
        });
        if ok {
            search(s, buckets, bit_of, bits, i + 1, models);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counter::oracle::brute_count;

    pub(crate) const SMOKERS: &str = "predicate stress/1\npredicate smoke/1\npredicate friend/2\nforall u v;\n(stress(u) -> smoke(u)) & (friend(u, v) & smoke(u) -> smoke(v))\n";

    #[test]
    fn parses_and_prints() {
        let s = parse_fo(SMOKERS).unwrap();
        assert_eq!(s.vars, vec!["u", "v"]);
        assert_eq!(s.atoms().len(), 4);
        assert_eq!(parse_fo(&s.to_string()).unwrap(), s);
    }

    #[test]
    fn fragment_errors() {
        let e = parse_fo("predicate P/1\nexists u;\nP(u)\n").unwrap_err();
        assert!(matches!(e, FoError::Fragment(_)));
        let e = parse_fo("predicate P/1\nforall u;\nP(f(u))\n").unwrap_err();
        assert!(matches!(e, FoError::Fragment(_)));
        let e = parse_fo("predicate P/1\nforall u;\nP(u, u)\n").unwrap_err();
        assert!(matches!(e, FoError::Arity { .. }));
        let e = parse_fo("forall u;\nQ(u)\n").unwrap_err();
        assert!(matches!(e, FoError::Undeclared { .. }));
        let e = parse_fo("predicate P/1\nforall u;\nP(u) &\n").unwrap_err();
        assert!(matches!(e, FoError::Syntax { line: 3, .. }));
    }

    #[test]
    fn smokers_shape() {
        let s = parse_fo(SMOKERS).unwrap();
        let d = fomc_encode(&s, 3).unwrap();
        assert_eq!(d.n(), 6);
        let widths: Vec<usize> = d.existentials().iter().map(|e| e.deps.len()).collect();
        assert_eq!(widths, vec![3, 3, 6, 3]);
    }

    #[test]
    fn forced_predicate() {
        let s = parse_fo("predicate P/1\nforall u;\nP(u)\n").unwrap();
        let d = fomc_encode(&s, 1).unwrap();
        assert_eq!(d.k(), 1);
        assert_eq!(brute_count(&d).unwrap(), BigCount::one());
        assert_eq!(structure_count(&s, 1).unwrap(), BigCount::one());
    }

    #[test]
    fn smokers_domain_two() {
        let s = parse_fo(SMOKERS).unwrap();
        let d = fomc_encode(&s, 1).unwrap();
        let mut exhaustive = 0u64;
        for m in 0u32..256 {
            let bit = |i: u32| m >> i & 1 == 1;
            let ok = (0..2u32).all(|u| {
                (0..2u32).all(|v| {
                    let (stress, smoke, friend) = (bit(u), |x: u32| bit(2 + x), bit(4 + u + 2 * v));
                    (!stress || smoke(u)) && (!(friend && smoke(u)) || smoke(v))
                })
            });
            exhaustive += ok as u64;
        }
        assert_eq!(structure_count(&s, 1).unwrap(), BigCount::from_u64(exhaustive));
        assert_eq!(brute_count(&d).unwrap(), BigCount::from_u64(exhaustive));
    }

    #[test]
    fn unaligned_atoms_use_a_shared_function() {
        for text in [
            "predicate E/2\nforall u v;\nE(u, v) -> E(v, u)\n",
            "predicate E/2\nforall u;\n!E(u, u)\n",
            "predicate E/2\npredicate P/1\nforall u v;\nP(u) | u = v\n",
        ] {
            let s = parse_fo(text).unwrap();
            let d = fomc_encode(&s, 1).unwrap();
            assert_eq!(brute_count(&d).unwrap(), structure_count(&s, 1).unwrap(), "{text}");
        }
    }
}
