//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Built with `harness = false`; exits nonzero when any criterion fails.

use std::time::{Duration, Instant};

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dqcount::bdd::Manager;
use dqcount::counter::candidates::{count_1dqbf_restricted, OneDqbf};
use dqcount::counter::oracle::{brute_count, count_cnf};
use dqcount::counter::support::support_sets;
use dqcount::counter::{count, CountError, CountOptions, Method, Strategy};
use dqcount::expansion::{self, ExpansionConfig};
use dqcount::generators::{
    ind_set, ind_set_count, random, random_general, two_col, RandomGeneralSpec, RandomSpec,
};
use dqcount::reachability::{Implication, TransitionSystem};
use dqcount::reductions::{count_general, fomc_encode, parse_fo, structure_count, to_uniform};
use dqcount::{BigCount, Dqbf};

/// Criterion 1: total wall clock for the triple comparison.
const ORACLE_BUDGET: Duration = Duration::from_secs(300);
/// Criterion 2: per instance.
const TWO_COL_BUDGET: Duration = Duration::from_secs(60);
/// Criterion 2: the expansion budget that must already be exceeded at n = 16.
const TWO_COL_CLAUSES: u64 = 1 << 17;
const ORACLE_INSTANCES: u64 = 500;
const GENERAL_INSTANCES: u64 = 100;
/// Criterion 4: total f cells per instance, Σ 2^{|z̄_i|}.
const GENERAL_MAX_CELLS: usize = 8;
const BIGCOUNT_OPS: usize = 10_000;

const SMOKERS: &str = "predicate stress/1\npredicate smoke/1\npredicate friend/2\nforall u v;\n\
                       (stress(u) -> smoke(u)) & (friend(u, v) & smoke(u) -> smoke(v))\n";

type Outcome = Result<String, String>;

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle triple equality", oracle_triple),
        ("TWO-COL_{n,0} = 2", two_col_counts),
        ("IND-SET closed form", ind_set_counts),
        ("reduction identity", reduction_identity),
        ("uniformization parsimony", uniform_parsimony),
        ("support sets and 1-DQBF slices", support_and_slices),
        ("FOMC smoker-friend", fomc_smokers),
        ("BigCount arithmetic", bigcount_ops),
        ("satisfiability verdicts", sat_verdicts),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} ({secs:.1}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} ({secs:.1}s)", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Seeded 2-DQBFs with n ≤ 6 and widths ≤ 3.
fn oracle_corpus() -> impl Iterator<Item = (u64, Dqbf)> {
    (0..ORACLE_INSTANCES).map(|seed| {
        let n = 1 + (seed % 6) as usize;
        let spec = RandomSpec {
            seed,
            n,
            w1: ((seed / 6 % 4) as usize).min(n),
            w2: ((seed / 24 % 4) as usize).min(n),
            gates: 2 + (seed / 96 % 5) as usize,
            guard: seed % 3 == 0,
        };
        (seed, random(&spec).expect("valid spec"))
    })
}

/// Seeded k-DQBFs with k ∈ {3, 4}, n ≤ 4 and widths ≤ 2.
fn general_corpus() -> impl Iterator<Item = (u64, Dqbf)> {
    (0..GENERAL_INSTANCES).map(|seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(3..=4);
        let n = rng.gen_range(1..=4usize);
        let widths = loop {
            let w: Vec<usize> = (0..k).map(|_| rng.gen_range(0..=n.min(2))).collect();
            if w.iter().map(|x| 1usize << x).sum::<usize>() <= GENERAL_MAX_CELLS {
                break w;
            }
        };
        let spec = RandomGeneralSpec {
            seed,
            n,
            widths,
            gates: rng.gen_range(2..=5),
        };
        (seed, random_general(&spec).expect("valid spec"))
    })
}

fn oracle_triple() -> Outcome {
    let start = Instant::now();
    let symbolic = CountOptions::with_method(Method::Symbolic);
    let expansion = CountOptions::with_method(Method::Expansion);
    let mut sat = 0;
    for (seed, d) in oracle_corpus() {
        let b = brute_count(&d).map_err(err)?;
        let s = count(&d, &symbolic).map_err(err)?.count;
        let e = count(&d, &expansion).map_err(err)?.count;
        ensure(s == b && e == b, || format!("seed {seed}: symbolic {s}, expansion {e}, brute {b}"))?;
        sat += !b.is_zero() as u32;
    }
    let took = start.elapsed();
    ensure(took < ORACLE_BUDGET, || format!("took {took:?}, budget {ORACLE_BUDGET:?}"))?;
    Ok(format!("{ORACLE_INSTANCES} instances ({sat} satisfiable) equal in {took:.1?}"))
}

fn two_col_counts() -> Outcome {
    let mut slowest = Duration::ZERO;
    for n in 1..=16 {
        let d = two_col(n, 0).map_err(err)?;
        let start = Instant::now();
        let opts = CountOptions {
            timeout: Some(TWO_COL_BUDGET),
            ..CountOptions::with_method(Method::Symbolic)
        };
        let r = count(&d, &opts).map_err(|e| format!("n = {n}: {e}"))?;
        let took = start.elapsed();
        ensure(r.count == BigCount::from_u64(2), || format!("n = {n}: count {}", r.count))?;
        ensure(took < TWO_COL_BUDGET, || format!("n = {n} took {took:?}"))?;
        slowest = slowest.max(took);
    }
    let d = two_col(16, 0).map_err(err)?;
    let opts = CountOptions {
        expansion_clauses: TWO_COL_CLAUSES,
        timeout: Some(TWO_COL_BUDGET),
        ..CountOptions::with_method(Method::Expansion)
    };
    match count(&d, &opts) {
        Err(CountError::Budget { .. }) => {}
        other => return Err(format!("expansion at n = 16 within 2^17 clauses: {other:?}")),
    }
    Ok(format!("n = 1..16 all 2, slowest {slowest:.1?}; expansion over budget at n = 16"))
}

fn ind_set_counts() -> Outcome {
    let opts = CountOptions::with_method(Method::Symbolic);
    let mut checked = 0;
    for n in 1..=10 {
        for k in 0..=3.min(n - 1) {
            let d = ind_set(n, k).map_err(err)?;
            let want = ind_set_count(n, k).map_err(err)?;
            let got = count(&d, &opts).map_err(|e| format!("({n},{k}): {e}"))?.count;
            ensure(got == want, || format!("({n},{k}): got {got}, want {want}"))?;
            if n <= 3 {
                let b = brute_count(&d).map_err(err)?;
                ensure(b == want, || format!("({n},{k}): brute {b}, want {want}"))?;
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} (n, k) pairs exact, brute force agrees for n ≤ 3"))
}

fn reduction_identity() -> Outcome {
    let opts = CountOptions::with_method(Method::Reduction);
    let mut unsat = 0;
    for (seed, d) in general_corpus() {
        let want = brute_count(&d).map_err(err)?;
        let got = count_general(&d, &opts).map_err(|e| format!("seed {seed}: {e}"))?;
        ensure(got.count == want, || format!("seed {seed}: got {}, want {want}", got.count))?;
        unsat += want.is_zero() as u32;
    }
    Ok(format!("{GENERAL_INSTANCES} instances exact ({unsat} unsatisfiable), no underflow"))
}

fn uniform_parsimony() -> Outcome {
    // The uniform formula has k·2^{n+⌈log k⌉} cells, beyond tuple
    // enumeration. Its reduced expansion is counted by the DPLL counter
    // instead, which shares no code with the reduction.
    let cfg = ExpansionConfig {
        reduce: true,
        ..ExpansionConfig::default()
    };
    let mut clauses = 0;
    for (seed, d) in general_corpus() {
        let want = brute_count(&d).map_err(err)?;
        let u = to_uniform(&d).map_err(err)?;
        let (cnf, table) = expansion::expand(&u, &cfg).map_err(|e| format!("seed {seed}: {e}"))?;
        clauses = clauses.max(cnf.clauses.len());
        let vars: Vec<u32> = (1..=cnf.num_vars).collect();
        let free = u.total_cells() - table.len() as u128;
        let got = count_cnf(cnf.clauses, &vars) << free as usize;
        ensure(got.to_string() == want.to_string(), || {
            format!("seed {seed}: uniform {got}, original {want}")
        })?;
    }
    Ok(format!("{GENERAL_INSTANCES} instances exact, at most {clauses} clauses"))
}

fn support_and_slices() -> Outcome {
    let mut slices = 0;
    for (seed, d) in oracle_corpus() {
        let (cnf, table) = expansion::expand(&d, &ExpansionConfig::default()).map_err(err)?;
        let mut explicit = [0u64; 2];
        for (_, side, _) in table.iter() {
            explicit[side] += 1;
        }
        let total: [u64; 2] = [0, 1].map(|i| 1u64 << d.existential(i).deps.len());
        let mut mgr = Manager::new();
        let imp = Implication::build(&mut mgr, &d).map_err(err)?;
        let s = support_sets(&mut mgr, &imp).map_err(err)?;
        let sizes = [0, 1].map(|i| BigUint::from(explicit[i]));
        ensure(s.sizes == sizes, || format!("seed {seed}: |S| {:?}, explicit {explicit:?}", s.sizes))?;
        let m = total[0] + total[1] - explicit[0] - explicit[1];
        ensure(s.nonsupport_exponent == BigUint::from(m), || {
            format!("seed {seed}: m = {}, explicit {m}", s.nonsupport_exponent)
        })?;

        // Every recorded slice against enumeration of its completions.
        let opts = CountOptions {
            strategy: Strategy::Enumerate,
            record_slices: true,
            ..CountOptions::with_method(Method::Symbolic)
        };
        let r = count(&d, &opts).map_err(err)?;
        for slice in r.slices.unwrap_or_default() {
            let other = 1 - slice.side;
            let var = |side: usize, cell: u64| table.var(side, cell).expect("support cell");
            let mut fixed: Vec<Vec<i32>> = slice
                .candidate
                .iter()
                .map(|&(c, v)| {
                    let x = var(slice.side, c) as i32;
                    vec![if v { x } else { -x }]
                })
                .collect();
            let mut vars: Vec<u32> = slice.candidate.iter().map(|&(c, _)| var(slice.side, c)).collect();
            vars.extend(slice.other_cells.iter().map(|&c| var(other, c)));
            vars.sort_unstable();
            let local: Vec<Vec<i32>> = cnf
                .clauses
                .iter()
                .filter(|cl| cl.iter().all(|l| vars.binary_search(&l.unsigned_abs()).is_ok()))
                .cloned()
                .collect();
            fixed.extend(local);
            let want = BigCount::from_biguint(&count_cnf(fixed, &vars));
            ensure(slice.completions == want, || {
                format!("seed {seed}: slice completions {}, enumerated {want}", slice.completions)
            })?;
            slices += 1;
        }
    }
    // The 1-DQBF formula on its own, with one forced cell out of four.
    let mut mgr = Manager::new();
    let (z0, z1, y, x) = (mgr.new_var(), mgr.new_var(), mgr.new_var(), mgr.new_var());
    let deps = [z0, z1];
    let others = [x];
    let (a, b, yv, xv) = (mgr.var(z0), mgr.var(z1), mgr.var(y), mgr.var(x));
    // ¬φ′ = z0 ∧ z1 ∧ ¬y ∧ x: the cell (1,1) is forced to ⊤.
    let ny = mgr.not(yv);
    let neg = mgr.and_all([a, b, ny, xv]);
    let u = OneDqbf {
        neg_matrix: neg,
        deps: &deps,
        existential: y,
        others: &others,
    };
    let all = mgr.one();
    let got = count_1dqbf_restricted(&mut mgr, &u, all).map_err(err)?;
    ensure(got == BigCount::from_u64(8), || format!("1-DQBF example: {got}"))?;
    Ok(format!("{ORACLE_INSTANCES} instances, {slices} slices match enumeration"))
}

fn fomc_smokers() -> Outcome {
    let s = parse_fo(SMOKERS).map_err(err)?;
    // Domain of size 2: every structure, evaluated directly.
    let arity: Vec<usize> = s.predicates.iter().map(|p| p.arity).collect();
    let mut offsets = vec![0usize];
    for a in &arity {
        offsets.push(offsets.last().unwrap() + (1 << a));
    }
    let bits = *offsets.last().unwrap();
    ensure(bits == 8, || format!("{bits} tuple bits"))?;
    let mut exhaustive = 0u64;
    for m in 0u32..1 << bits {
        let ok = (0..1u64 << s.vars.len()).all(|g| {
            let value = |v: usize| g >> v & 1;
            s.body.eval(
                &mut |p, args| {
                    let idx = args.iter().rev().fold(0, |acc, a| acc * 2 + value(*a) as usize);
                    m >> (offsets[p] + idx) & 1 == 1
                },
                &value,
            )
        });
        exhaustive += ok as u64;
    }
    let d1 = fomc_encode(&s, 1).map_err(err)?;
    let enc1 = count(&d1, &CountOptions::default()).map_err(err)?.count;
    ensure(enc1 == BigCount::from_u64(exhaustive), || format!("domain 2: encoder {enc1}, structures {exhaustive}"))?;
    let pruned1 = structure_count(&s, 1).map_err(err)?;
    ensure(pruned1 == enc1, || format!("domain 2: pruned search {pruned1}"))?;

    // Domain of size 4: 2^{4+4+16} structures, pruned search.
    let d2 = fomc_encode(&s, 2).map_err(err)?;
    let enc2 = count(&d2, &CountOptions::default()).map_err(err)?.count;
    let pruned2 = structure_count(&s, 2).map_err(err)?;
    ensure(enc2 == pruned2, || format!("domain 4: encoder {enc2}, structures {pruned2}"))?;
    Ok(format!("domain 2: {exhaustive} of 256; domain 4: {enc2}"))
}

fn bigcount_ops() -> Outcome {
    let b = BigCount::from_bits("10100101").map_err(err)?;
    let exps: Vec<u64> = b.exponents().iter().map(|e| e.try_into().unwrap()).collect();
    ensure(exps == [0, 2, 5, 7], || format!("10100101 → {exps:?}"))?;
    let back = BigCount::from_exponents([0u32, 2, 5, 7].map(BigUint::from));
    let bits = back.to_biguint_bounded(64).unwrap().to_str_radix(2);
    ensure(bits == "10100101", || format!("⟨0,2,5,7⟩ → {bits}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let random_value = |rng: &mut ChaCha8Rng| -> BigUint {
        let mut v = BigUint::from(0u32);
        for _ in 0..rng.gen_range(0..6) {
            v.set_bit(rng.gen_range(0..300), true);
        }
        v
    };
    let sparse = |v: &BigUint| BigCount::from_biguint(v);
    for i in 0..BIGCOUNT_OPS {
        let (x, y) = (random_value(&mut rng), random_value(&mut rng));
        let (sx, sy) = (sparse(&x), sparse(&y));
        let (got, want) = match i % 5 {
            0 => (Some(sx.add(&sy)), Some(&x + &y)),
            1 => (sx.sub(&sy).ok(), (x >= y).then(|| &x - &y)),
            2 => (Some(sx.mul(&sy)), Some(&x * &y)),
            3 => {
                let e = rng.gen_range(0..200u32);
                (Some(sx.shl(&BigUint::from(e))), Some(&x << e))
            }
            _ => {
                let ord = sx.cmp(&sy);
                ensure(ord == x.cmp(&y), || format!("op {i}: compare {x} {y}"))?;
                continue;
            }
        };
        let got = got.map(|g| g.to_biguint_bounded(2048).expect("small"));
        ensure(got == want, || format!("op {i}: {x} and {y}: got {got:?}, want {want:?}"))?;
    }
    Ok(format!("{BIGCOUNT_OPS} operations agree; 10100101 ↔ ⟨0,2,5,7⟩"))
}

fn sat_verdicts() -> Outcome {
    let mut unsat = 0;
    for (seed, d) in oracle_corpus() {
        let brute = !brute_count(&d).map_err(err)?.is_zero();
        let mut mgr = Manager::new();
        let mut imp = Implication::build(&mut mgr, &d).map_err(err)?;
        let closure = imp.is_satisfiable(&mut mgr);
        let support = support_sets(&mut mgr, &imp).map_err(err)?.literals;
        let ts = TransitionSystem::new(&mut mgr, &imp, imp.edges, support);
        let system = !ts.is_unsat(&mut mgr, &imp);
        ensure(closure == brute && system == brute, || {
            format!("seed {seed}: closure {closure}, system {system}, brute {brute}")
        })?;
        unsat += !brute as u32;
    }
    Ok(format!("{ORACLE_INSTANCES} instances ({unsat} unsatisfiable) agree three ways"))
}
