//! Text formats: a line-oriented circuit grammar (`#dqcir`) and DQDIMACS.
//!
//! Circuit files look like
//!
//! ```text
//! #dqcir
//! forall(x1, x2)
//! exists(y1; x1)
//! exists(y2; x2)
//! g1 = or(y1, -y2)
//! g2 = xor(g1, x1)
//! output(g2)
//! ```
//!
//! Gate operators are `and`, `or`, `xor`, `ite`, `not`, plus `iff` and
//! `implies`. `and()` and `or()` denote the constants.

use rustc_hash::{FxHashMap, FxHashSet};

use super::{Dqbf, DqbfBuilder, FormulaError, Gate, GateId, VarId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Circuit,
    Cnf,
}

impl InputFormat {
    /// Guesses the format from the first meaningful line.
    pub fn detect(text: &str) -> InputFormat {
        for line in text.lines() {
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if t.starts_with("#dqcir") {
                return InputFormat::Circuit;
            }
            if t.starts_with("p ") || t == "c" || t.starts_with("c ") {
                return InputFormat::Cnf;
            }
            return InputFormat::Circuit;
        }
        InputFormat::Circuit
    }
}

pub fn parse(text: &str, format: InputFormat) -> Result<Dqbf, FormulaError> {
    match format {
        InputFormat::Circuit => parse_circuit(text),
        InputFormat::Cnf => parse_dqdimacs(text),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    LParen,
    RParen,
    Comma,
    Semi,
    Eq,
    Minus,
}

fn is_ident_char(c: char) -> bool {
    !(c.is_whitespace() || "(),;=-#".contains(c))
}

fn lex(line: &str, line_no: usize) -> Result<Vec<(Tok, usize)>, FormulaError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        let tok = match c {
            _ if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            ';' => Tok::Semi,
            '=' => Tok::Eq,
            '-' => Tok::Minus,
            _ if is_ident_char(c) => {
                let start = i;
                while i < chars.len() && is_ident_char(chars[i]) {
                    i += 1;
                }
                out.push((Tok::Ident(chars[start..i].iter().collect()), col));
                continue;
            }
            _ => {
                return Err(FormulaError::Syntax {
                    line: line_no,
                    col,
                    msg: format!("unexpected character {c:?}"),
                })
            }
        };
        out.push((tok, col));
        i += 1;
    }
    Ok(out)
}

struct Cursor<'a> {
    toks: &'a [(Tok, usize)],
    pos: usize,
    line: usize,
    eol_col: usize,
}

impl<'a> Cursor<'a> {
    fn col(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.eol_col)
    }

    fn err(&self, msg: impl Into<String>) -> FormulaError {
        FormulaError::Syntax {
            line: self.line,
            col: self.col(),
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn next(&mut self) -> Option<&Tok> {
        let t = self.toks.get(self.pos).map(|t| &t.0);
        self.pos += 1;
        t
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), FormulaError> {
        if self.peek() == Some(&want) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected {what}")))
        }
    }

    fn ident(&mut self) -> Result<(String, usize), FormulaError> {
        let col = self.col();
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok((s, col))
            }
            _ => Err(self.err("expected identifier")),
        }
    }

    fn end(&self) -> Result<(), FormulaError> {
        if self.pos < self.toks.len() {
            Err(self.err("trailing input"))
        } else {
            Ok(())
        }
    }

    /// Comma separated identifiers up to (not including) `stop`.
    fn ident_list(&mut self, stop: &[Tok]) -> Result<Vec<(String, usize)>, FormulaError> {
        let mut out = Vec::new();
        if self.peek().map(|t| stop.contains(t)).unwrap_or(false) {
            return Ok(out);
        }
        loop {
            out.push(self.ident()?);
            match self.peek() {
                Some(Tok::Comma) => {
                    self.pos += 1;
                }
                Some(t) if stop.contains(t) => return Ok(out),
                _ => return Err(self.err("expected `,` or end of list")),
            }
        }
    }
}

/// A possibly negated reference: number of leading minus signs and the name.
type Lit = (usize, String, usize);

fn literal_list(cur: &mut Cursor) -> Result<Vec<Lit>, FormulaError> {
    let mut out = Vec::new();
    if cur.peek() == Some(&Tok::RParen) {
        return Ok(out);
    }
    loop {
        let mut negs = 0;
        while cur.peek() == Some(&Tok::Minus) {
            cur.next();
            negs += 1;
        }
        let (name, col) = cur.ident()?;
        out.push((negs, name, col));
        match cur.peek() {
            Some(Tok::Comma) => {
                cur.next();
            }
            Some(Tok::RParen) => return Ok(out),
            _ => return Err(cur.err("expected `,` or `)`")),
        }
    }
}

pub fn parse_circuit(text: &str) -> Result<Dqbf, FormulaError> {
    let mut b = DqbfBuilder::new();
    let mut gates: FxHashMap<String, GateId> = FxHashMap::default();
    let mut output: Option<GateId> = None;
    let mut seen_header = false;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if !seen_header {
            if trimmed.split_whitespace().next() == Some("#dqcir") {
                seen_header = true;
                continue;
            }
            return Err(FormulaError::Syntax {
                line: line_no,
                col: 1,
                msg: "missing `#dqcir` header".into(),
            });
        }
        if trimmed.starts_with('#') {
            continue;
        }
        let toks = lex(raw, line_no)?;
        let mut cur = Cursor {
            toks: &toks,
            pos: 0,
            line: line_no,
            eol_col: raw.chars().count() + 1,
        };
        if output.is_some() {
            return Err(cur.err("content after `output`"));
        }
        let (head, head_col) = cur.ident()?;
        let semantic = |col: usize, msg: String| FormulaError::Semantic {
            line: line_no,
            col,
            msg,
        };
        match head.as_str() {
            "forall" if cur.peek() == Some(&Tok::LParen) => {
                cur.next();
                for (name, col) in cur.ident_list(&[Tok::RParen])? {
                    if b.is_declared(&name) || gates.contains_key(&name) {
                        return Err(semantic(col, format!("duplicate declaration of `{name}`")));
                    }
                    b.universal(&name).map_err(|e| semantic(col, e.to_string()))?;
                }
                cur.expect(Tok::RParen, "`)`")?;
                cur.end()?;
            }
            "exists" if cur.peek() == Some(&Tok::LParen) => {
                cur.next();
                let names = cur.ident_list(&[Tok::Semi, Tok::RParen])?;
                if names.is_empty() {
                    return Err(cur.err("expected existential name"));
                }
                let mut deps = Vec::new();
                if cur.peek() == Some(&Tok::Semi) {
                    cur.next();
                    for (dep, col) in cur.ident_list(&[Tok::RParen])? {
                        match b.lookup(&dep) {
                            Some(v) => deps.push((v, dep, col)),
                            None => {
                                return Err(semantic(col, format!("undeclared variable `{dep}`")))
                            }
                        }
                    }
                }
                cur.expect(Tok::RParen, "`)`")?;
                cur.end()?;
                let dep_ids: Vec<VarId> = deps.iter().map(|d| d.0).collect();
                for (name, col) in names {
                    if gates.contains_key(&name) {
                        return Err(semantic(col, format!("duplicate declaration of `{name}`")));
                    }
                    b.existential(&name, &dep_ids).map_err(|e| {
                        let col = match &e {
                            FormulaError::DependencyNotUniversal { dep, .. }
                            | FormulaError::DuplicateDependency { dep, .. } => deps
                                .iter()
                                .find(|d| &d.1 == dep)
                                .map(|d| d.2)
                                .unwrap_or(col),
                            _ => col,
                        };
                        semantic(col, e.to_string())
                    })?;
                }
            }
            "output" if cur.peek() == Some(&Tok::LParen) => {
                cur.next();
                let lits = literal_list(&mut cur)?;
                cur.expect(Tok::RParen, "`)`")?;
                cur.end()?;
                if lits.len() != 1 {
                    return Err(semantic(head_col, "output takes exactly one literal".into()));
                }
                output = Some(resolve(&mut b, &gates, &lits[0], line_no)?);
            }
            _ => {
                cur.expect(Tok::Eq, "`=` after gate name")?;
                if b.is_declared(&head) || gates.contains_key(&head) {
                    return Err(semantic(head_col, format!("duplicate declaration of `{head}`")));
                }
                let (op, op_col) = cur.ident()?;
                cur.expect(Tok::LParen, "`(`")?;
                let lits = literal_list(&mut cur)?;
                cur.expect(Tok::RParen, "`)`")?;
                cur.end()?;
                let args = lits
                    .iter()
                    .map(|l| resolve(&mut b, &gates, l, line_no))
                    .collect::<Result<Vec<_>, _>>()?;
                let arity = |n: usize| -> Result<(), FormulaError> {
                    if args.len() == n {
                        Ok(())
                    } else {
                        Err(semantic(op_col, format!("`{op}` takes {n} arguments")))
                    }
                };
                let e = b.expr();
                let g = match op.as_str() {
                    "and" => e.and(args),
                    "or" => e.or(args),
                    "xor" => e.xor(args),
                    "not" => {
                        arity(1)?;
                        e.not(args[0])
                    }
                    "ite" => {
                        arity(3)?;
                        e.ite(args[0], args[1], args[2])
                    }
                    "iff" => {
                        arity(2)?;
                        e.iff(args[0], args[1])
                    }
                    "implies" => {
                        arity(2)?;
                        e.implies(args[0], args[1])
                    }
                    other => {
                        return Err(FormulaError::Syntax {
                            line: line_no,
                            col: op_col,
                            msg: format!("unknown operator `{other}`"),
                        })
                    }
                };
                gates.insert(head, g);
            }
        }
    }
    if !seen_header {
        return Err(FormulaError::Syntax {
            line: 1,
            col: 1,
            msg: "missing `#dqcir` header".into(),
        });
    }
    let root = output.ok_or(FormulaError::Syntax {
        line: last_line.max(1),
        col: 1,
        msg: "missing `output(...)`".into(),
    })?;
    b.build(root)
}

fn resolve(
    b: &mut DqbfBuilder,
    gates: &FxHashMap<String, GateId>,
    lit: &Lit,
    line: usize,
) -> Result<GateId, FormulaError> {
    let (negs, name, col) = lit;
    let mut g = if let Some(g) = gates.get(name) {
        *g
    } else if let Some(v) = b.lookup(name) {
        b.expr().var(v)
    } else {
        return Err(FormulaError::Semantic {
            line,
            col: *col,
            msg: format!("undeclared variable `{name}`"),
        });
    };
    for _ in 0..*negs {
        g = b.expr().not(g);
    }
    Ok(g)
}

/// Renders `d` in the circuit grammar. Negations are written inline.
pub fn serialize_circuit(d: &Dqbf) -> String {
    let matrix = d.matrix().canonical();
    let mut prefix = String::from("g");
    while (0..d.num_vars()).any(|i| d.name(VarId(i as u32)).starts_with(&prefix)) {
        prefix.insert(0, '_');
    }
    let mut out = String::from("#dqcir\n");
    let unames: Vec<&str> = d.universals().iter().map(|v| d.name(*v)).collect();
    out.push_str(&format!("forall({})\n", unames.join(", ")));
    for e in d.existentials() {
        let deps: Vec<&str> = e.deps.iter().map(|v| d.name(*v)).collect();
        if deps.is_empty() {
            out.push_str(&format!("exists({})\n", d.name(e.var)));
        } else {
            out.push_str(&format!("exists({}; {})\n", d.name(e.var), deps.join(", ")));
        }
    }
    let mut names: FxHashMap<GateId, String> = FxHashMap::default();
    let mut counter = 0usize;
    let order = matrix.reachable();
    let needed: FxHashSet<GateId> = order.iter().copied().collect();
    for g in order {
        debug_assert!(needed.contains(&g));
        let gate = matrix.gate(g);
        let lit = |names: &FxHashMap<GateId, String>, x: &GateId| -> String { names[x].clone() };
        let body = match gate {
            Gate::Var(v) => {
                names.insert(g, d.name(*v).to_string());
                continue;
            }
            Gate::Not(a) => {
                names.insert(g, format!("-{}", lit(&names, a)));
                continue;
            }
            Gate::Const(true) => "and()".to_string(),
            Gate::Const(false) => "or()".to_string(),
            Gate::And(xs) | Gate::Or(xs) | Gate::Xor(xs) => {
                let op = match gate {
                    Gate::And(_) => "and",
                    Gate::Or(_) => "or",
                    _ => "xor",
                };
                let args: Vec<String> = xs.iter().map(|x| lit(&names, x)).collect();
                format!("{op}({})", args.join(", "))
            }
            Gate::Iff(a, b) => format!("iff({}, {})", lit(&names, a), lit(&names, b)),
            Gate::Implies(a, b) => format!("implies({}, {})", lit(&names, a), lit(&names, b)),
            Gate::Ite(c, t, e) => format!(
                "ite({}, {}, {})",
                lit(&names, c),
                lit(&names, t),
                lit(&names, e)
            ),
        };
        counter += 1;
        let name = format!("{prefix}{counter}");
        out.push_str(&format!("{name} = {body}\n"));
        names.insert(g, name);
    }
    out.push_str(&format!("output({})\n", names[&matrix.root()]));
    out
}

pub fn parse_dqdimacs(text: &str) -> Result<Dqbf, FormulaError> {
    let mut b = DqbfBuilder::new();
    let mut header: Option<(u64, u64)> = None;
    let mut clauses: Vec<Vec<(bool, VarId)>> = Vec::new();
    let mut current: Vec<(bool, VarId)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('c') {
            continue;
        }
        let mut fields = Vec::new();
        let mut col = 1;
        for part in raw.split(' ') {
            if !part.trim().is_empty() {
                for sub in part.split_whitespace() {
                    fields.push((sub, col));
                }
            }
            col += part.chars().count() + 1;
        }
        let syntax = |col: usize, msg: &str| FormulaError::Syntax {
            line: line_no,
            col,
            msg: msg.to_string(),
        };
        let semantic = |col: usize, msg: String| FormulaError::Semantic {
            line: line_no,
            col,
            msg,
        };
        let int = |(s, col): (&str, usize)| -> Result<i64, FormulaError> {
            s.parse::<i64>().map_err(|_| syntax(col, "expected integer"))
        };
        match fields[0].0 {
            "p" => {
                if header.is_some() {
                    return Err(syntax(fields[0].1, "duplicate problem line"));
                }
                if fields.len() != 4 || fields[1].0 != "cnf" {
                    return Err(syntax(fields[0].1, "expected `p cnf <vars> <clauses>`"));
                }
                let v = int(fields[2])?;
                let c = int(fields[3])?;
                if v < 0 || c < 0 {
                    return Err(syntax(fields[2].1, "negative count"));
                }
                header = Some((v as u64, c as u64));
            }
            q @ ("a" | "e" | "d") => {
                let (nvars, _) = header.ok_or_else(|| syntax(1, "quantifier before problem line"))?;
                let mut ids = Vec::new();
                let mut terminated = false;
                for f in &fields[1..] {
                    if terminated {
                        return Err(syntax(f.1, "trailing input after 0"));
                    }
                    let v = int(*f)?;
                    if v == 0 {
                        terminated = true;
                    } else if v < 0 || v as u64 > nvars {
                        return Err(semantic(f.1, format!("variable {v} out of range")));
                    } else {
                        ids.push((v, f.1));
                    }
                }
                if !terminated {
                    return Err(syntax(col, "missing terminating 0"));
                }
                match q {
                    "a" => {
                        for (v, c) in ids {
                            b.universal(&v.to_string())
                                .map_err(|e| semantic(c, e.to_string()))?;
                        }
                    }
                    "e" => {
                        let deps: Vec<VarId> = b_universals(&b);
                        for (v, c) in ids {
                            b.existential(&v.to_string(), &deps)
                                .map_err(|e| semantic(c, e.to_string()))?;
                        }
                    }
                    _ => {
                        let Some(((y, ycol), rest)) = ids.split_first() else {
                            return Err(syntax(fields[0].1, "`d` line needs an existential"));
                        };
                        let mut deps = Vec::new();
                        for (v, c) in rest {
                            match b.lookup(&v.to_string()) {
                                Some(id) => deps.push(id),
                                None => {
                                    return Err(semantic(*c, format!("undeclared variable `{v}`")))
                                }
                            }
                        }
                        b.existential(&y.to_string(), &deps)
                            .map_err(|e| semantic(*ycol, e.to_string()))?;
                    }
                }
            }
            _ => {
                if header.is_none() {
                    return Err(syntax(fields[0].1, "clause before problem line"));
                }
                for f in &fields {
                    let v = int(*f)?;
                    if v == 0 {
                        clauses.push(std::mem::take(&mut current));
                        continue;
                    }
                    let name = v.abs().to_string();
                    match b.lookup(&name) {
                        Some(id) => current.push((v > 0, id)),
                        None => {
                            return Err(semantic(f.1, format!("undeclared variable `{name}`")))
                        }
                    }
                }
            }
        }
    }
    if header.is_none() {
        return Err(FormulaError::Syntax {
            line: 1,
            col: 1,
            msg: "missing problem line".into(),
        });
    }
    if !current.is_empty() {
        clauses.push(current);
    }
    let e = b.expr();
    let cls: Vec<GateId> = clauses
        .iter()
        .map(|c| {
            let lits = c.iter().map(|(pos, v)| e.lit(*v, *pos)).collect();
            e.or(lits)
        })
        .collect();
    let root = e.and(cls);
    b.build(root)
}

fn b_universals(b: &DqbfBuilder) -> Vec<VarId> {
    b.universals.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    const PHI0: &str = "#dqcir\nforall(x)\nexists(y1; x)\nexists(y2; x)\ng = or(y1, y2)\noutput(g)\n";

    #[test]
    fn circuit_basic() {
        let d = parse_circuit(PHI0).unwrap();
        assert_eq!(d.n(), 1);
        assert_eq!(d.k(), 2);
        assert_eq!(parse_circuit(&serialize_circuit(&d)).unwrap(), d);
    }

    #[test]
    fn circuit_errors_carry_positions() {
        let bad = "#dqcir\nforall(x)\nexists(y; x)\ng = and(y, z)\noutput(g)\n";
        match parse_circuit(bad) {
            Err(FormulaError::Semantic { line: 4, col: 12, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
        let bad = "#dqcir\nforall(x)\nexists(y; x\n";
        assert!(matches!(
            parse_circuit(bad),
            Err(FormulaError::Syntax { line: 3, .. })
        ));
        let bad = "#dqcir\nforall(x)\nexists(y; y)\noutput(y)\n";
        assert!(matches!(parse_circuit(bad), Err(FormulaError::Semantic { .. })));
        assert!(parse_circuit("forall(x)\n").is_err());
        assert!(parse_circuit("#dqcir\nforall(x)\n").is_err());
        let bad = "#dqcir\nforall(x)\ng = frob(x)\noutput(g)\n";
        assert!(matches!(parse_circuit(bad), Err(FormulaError::Syntax { line: 3, col: 5, .. })));
    }

    #[test]
    fn constants_and_negation() {
        let t = "#dqcir\nforall(x)\nexists(y)\ng1 = and()\ng2 = or(-g1, --y, -x)\noutput(-g2)\n";
        let d = parse_circuit(t).unwrap();
        assert_eq!(parse_circuit(&serialize_circuit(&d)).unwrap(), d);
        assert!(d.existential(0).deps.is_empty());
    }

    #[test]
    fn dqdimacs() {
        let t = "c example\np cnf 4 2\na 1 2 0\nd 3 1 0\ne 4 0\n3 4 0\n-3 -1 0\n";
        let d = parse_dqdimacs(t).unwrap();
        assert_eq!(d.n(), 2);
        assert_eq!(d.existential(0).deps.len(), 1);
        assert_eq!(d.existential(1).deps.len(), 2);
        let bad = "p cnf 3 1\na 1 0\nd 2 1 0\n2 3 0\n";
        assert!(matches!(
            parse_dqdimacs(bad),
            Err(FormulaError::Semantic { line: 4, col: 3, .. })
        ));
        assert_eq!(InputFormat::detect(t), InputFormat::Cnf);
        assert_eq!(InputFormat::detect(PHI0), InputFormat::Circuit);
    }
}
