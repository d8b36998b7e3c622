use super::{index_width, Names, ReductionError};
use crate::formula::{Dqbf, DqbfBuilder, GateId, VarId};

/// Rewrites a k-DQBF into one whose Skolem functions are `k` copies of a
/// single function over `(x̄, ū)`, preserving the model count.
///
/// A 1-DQBF is already uniform and is returned unchanged.
pub fn to_uniform(d: &Dqbf) -> Result<Dqbf, ReductionError> {
    let k = d.k();
    if k <= 1 {
        return Ok(d.clone());
    }
    let w = index_width(k);
    let mut names = Names::of(d);
    let mut b = DqbfBuilder::new();
    let mut xs: Vec<Vec<VarId>> = Vec::with_capacity(k);
    let mut us: Vec<Vec<VarId>> = Vec::with_capacity(k);
    for i in 1..=k {
        let copy = d
            .universals()
            .iter()
            .map(|x| b.universal(&names.fresh(&format!("{}_{i}", d.name(*x)))))
            .collect::<Result<Vec<_>, _>>()?;
        xs.push(copy);
    }
    for i in 1..=k {
        let bits = (0..w)
            .map(|j| b.universal(&names.fresh(&format!("u{i}_{j}"))))
            .collect::<Result<Vec<_>, _>>()?;
        us.push(bits);
    }
    let mut ys = Vec::with_capacity(k);
    for (i, ex) in d.existentials().iter().enumerate() {
        let deps: Vec<VarId> = xs[i].iter().chain(&us[i]).copied().collect();
        ys.push(b.existential(d.name(ex.var), &deps)?);
    }

    let pos = |v: VarId| d.universal_position(v).expect("dependency is universal");
    let e = b.expr();
    let mut parts: Vec<GateId> = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let same_x = e.vars_equal(&xs[i], &xs[j]);
            let same_u = e.vars_equal(&us[i], &us[j]);
            let (a, c) = (e.var(ys[i]), e.var(ys[j]));
            let eq = e.iff(a, c);
            let pre = e.and2(same_x, same_u);
            parts.push(e.implies(pre, eq));
        }
    }
    let (y1, y2) = (e.var(ys[0]), e.var(ys[1]));
    let y_eq = e.iff(y1, y2);
    for (i, ex) in d.existentials().iter().enumerate() {
        let l: Vec<VarId> = ex.deps.iter().map(|z| xs[0][pos(*z)]).collect();
        let r: Vec<VarId> = ex.deps.iter().map(|z| xs[1][pos(*z)]).collect();
        let on_z = e.vars_equal(&l, &r);
        let u1 = e.vars_equal_const(&us[0], i as u64);
        let u2 = e.vars_equal_const(&us[1], i as u64);
        let pre = e.and(vec![on_z, u1, u2]);
        parts.push(e.implies(pre, y_eq));
    }
    // All copies of x̄ must agree for ψ to read a single universal point.
    let mut pre: Vec<GateId> = (0..k).map(|i| e.vars_equal_const(&us[i], i as u64)).collect();
    for copy in &xs[1..] {
        pre.push(e.vars_equal(&xs[0], copy));
    }
    let pre = e.and(pre);
    let body = e.import(d.matrix(), d.matrix().root(), &|v: VarId| match d.existential_index(v) {
        Some(i) => ys[i],
        None => xs[0][pos(v)],
    });
    parts.push(e.implies(pre, body));
    for i in 0..k {
        for j in k..1usize << w {
            let sel = e.vars_equal_const(&us[i], j as u64);
            let y = e.var(ys[i]);
            parts.push(e.implies(sel, y));
        }
    }
    let root = e.and(parts);
    Ok(b.build(root)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::counter::oracle::brute_count;
    use crate::formula::parse_circuit;

    #[test]
    fn arity_bookkeeping() {
        let d = parse_circuit("#dqcir\nforall(x)\nexists(y1; x)\nexists(y2)\ng = or(y1, y2)\noutput(g)\n").unwrap();
        let u = to_uniform(&d).unwrap();
        assert_eq!(u.n(), 4);
        assert_eq!(u.k(), 2);
        assert!(u.existentials().iter().all(|e| e.deps.len() == 2));
        assert_eq!(brute_count(&u).unwrap(), brute_count(&d).unwrap());
    }

    #[test]
    fn single_existential_is_unchanged() {
        let d = parse_circuit("#dqcir\nforall(x)\nexists(y; x)\noutput(y)\n").unwrap();
        assert_eq!(to_uniform(&d).unwrap(), d);
    }
}
