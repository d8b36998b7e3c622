//! Randomized properties of the diagram package and the sparse counts.

use num_bigint::BigUint;
use proptest::prelude::*;

use dqcount::bdd::{Bdd, Manager};
use dqcount::BigCount;

const VARS: u32 = 5;

#[derive(Debug, Clone)]
enum Expr {
    Var(u32),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Xor(Box<Expr>, Box<Expr>),
}

fn expr() -> impl Strategy<Value = Expr> {
    let leaf = (0..VARS).prop_map(Expr::Var);
    leaf.prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Not(Box::new(e))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::And(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Or(Box::new(a), Box::new(b))),
            (inner.clone(), inner).prop_map(|(a, b)| Expr::Xor(Box::new(a), Box::new(b))),
        ]
    })
}

fn eval(e: &Expr, m: u32) -> bool {
    match e {
        Expr::Var(v) => m >> v & 1 == 1,
        Expr::Not(a) => !eval(a, m),
        Expr::And(a, b) => eval(a, m) && eval(b, m),
        Expr::Or(a, b) => eval(a, m) || eval(b, m),
        Expr::Xor(a, b) => eval(a, m) != eval(b, m),
    }
}

fn build(mgr: &mut Manager, e: &Expr) -> Bdd {
    match e {
        Expr::Var(v) => mgr.var(*v),
        Expr::Not(a) => {
            let a = build(mgr, a);
            mgr.not(a)
        }
        Expr::And(a, b) => {
            let (a, b) = (build(mgr, a), build(mgr, b));
            mgr.and(a, b)
        }
        Expr::Or(a, b) => {
            let (a, b) = (build(mgr, a), build(mgr, b));
            mgr.or(a, b)
        }
        Expr::Xor(a, b) => {
            let (a, b) = (build(mgr, a), build(mgr, b));
            mgr.xor(a, b)
        }
    }
}

/// The disjunction of the minterms of a truth table, highest first.
fn from_table(mgr: &mut Manager, table: &[bool]) -> Bdd {
    let mut f = mgr.zero();
    for m in (0..table.len() as u32).rev().filter(|m| table[*m as usize]) {
        let lits: Vec<(u32, bool)> = (0..VARS).map(|v| (v, m >> v & 1 == 1)).collect();
        let c = mgr.cube(&lits);
        f = mgr.or(f, c);
    }
    f
}

fn big(x: u128) -> BigCount {
    BigCount::from_biguint(&BigUint::from(x))
}

fn value(c: &BigCount) -> BigUint {
    c.to_biguint_bounded(1 << 12).expect("small exponents")
}

proptest! {
    #[test]
    fn equal_functions_share_a_node(e in expr()) {
        let mut mgr = Manager::with_vars(VARS);
        let f = build(&mut mgr, &e);
        let table: Vec<bool> = (0..1u32 << VARS).map(|m| eval(&e, m)).collect();
        let g = from_table(&mut mgr, &table);
        prop_assert_eq!(f, g);
        for (m, want) in table.iter().enumerate() {
            prop_assert_eq!(mgr.eval(f, |v| m >> v & 1 == 1), *want);
        }
        let all: Vec<u32> = (0..VARS).collect();
        let ones = table.iter().filter(|b| **b).count();
        prop_assert_eq!(mgr.count_models(f, &all).unwrap(), BigUint::from(ones));
    }

    #[test]
    fn double_negation_and_de_morgan(a in expr(), b in expr()) {
        let mut mgr = Manager::with_vars(VARS);
        let (fa, fb) = (build(&mut mgr, &a), build(&mut mgr, &b));
        let nn = mgr.not(fa);
        prop_assert_eq!(mgr.not(nn), fa);
        let and = mgr.and(fa, fb);
        let lhs = mgr.not(and);
        let (na, nb) = (mgr.not(fa), mgr.not(fb));
        prop_assert_eq!(lhs, mgr.or(na, nb));
    }

    #[test]
    fn quantifiers_match_cofactors(e in expr(), v in 0..VARS) {
        let mut mgr = Manager::with_vars(VARS);
        let f = build(&mut mgr, &e);
        let (lo, hi) = (mgr.cofactor(f, v, false), mgr.cofactor(f, v, true));
        prop_assert_eq!(mgr.exists_vars(f, &[v]), mgr.or(lo, hi));
        let cube = mgr.var_cube(&[v]);
        prop_assert_eq!(mgr.forall(f, cube), mgr.and(lo, hi));
    }

    #[test]
    fn counts_follow_integers(a in any::<u64>(), b in any::<u64>(), s in 0u32..64) {
        let (x, y) = (a as u128, b as u128);
        prop_assert_eq!(value(&big(x).add(&big(y))), BigUint::from(x + y));
        prop_assert_eq!(value(&big(x).mul(&big(y))), BigUint::from(x * y));
        prop_assert_eq!(value(&big(x).shl(&BigUint::from(s))), BigUint::from(x << s));
        let (hi, lo) = (x.max(y), x.min(y));
        prop_assert_eq!(value(&big(hi).sub(&big(lo)).unwrap()), BigUint::from(hi - lo));
        if hi != lo {
            prop_assert!(big(lo).sub(&big(hi)).is_err());
        }
        prop_assert_eq!(big(x) == big(y), x == y);
    }

    #[test]
    fn binary_round_trip(bits in "1[01]{0,80}") {
        let c = BigCount::from_bits(&bits).unwrap();
        let back = value(&c).to_str_radix(2);
        prop_assert_eq!(back, bits);
    }
}
