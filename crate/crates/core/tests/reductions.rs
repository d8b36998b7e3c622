//! Every reduction emits an instance that survives a round trip through
//! the circuit format, and counting the re-read instance gives the same
//! answer.

use dqcount::counter::oracle::brute_count;
use dqcount::counter::{count, CountOptions, Method};
use dqcount::formula::{parse_circuit, serialize_circuit};
use dqcount::generators::{ind_set, random_general, two_col, RandomGeneralSpec};
use dqcount::reductions::{extended_to_2dqbf, fomc_encode, parse_fo, to_extended_pair, to_uniform};
use dqcount::Dqbf;

fn reread(d: &Dqbf) -> Dqbf {
    let text = serialize_circuit(d);
    let back = parse_circuit(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
    assert_eq!(serialize_circuit(&back), text);
    assert_eq!((back.n(), back.k()), (d.n(), d.k()));
    back
}

fn small(seed: u64) -> Dqbf {
    random_general(&RandomGeneralSpec {
        seed,
        n: 1 + (seed % 2) as usize,
        widths: vec![(seed % 2) as usize, 1, 0],
        gates: 3,
    })
    .unwrap()
}

#[test]
fn uniform_output_rereads() {
    for seed in 0..10 {
        let u = to_uniform(&small(seed)).unwrap();
        reread(&u);
    }
}

#[test]
fn pipeline_output_rereads_and_counts_the_same() {
    let opts = CountOptions::with_method(Method::Symbolic);
    for seed in 0..4 {
        let d = small(seed);
        let (p1, p2) = to_extended_pair(&d).unwrap();
        let mut counts = Vec::new();
        for p in [&p1, &p2] {
            reread(p.dqbf());
            let f = extended_to_2dqbf(p).unwrap();
            let g = reread(&f);
            let a = count(&f, &opts).unwrap().count;
            let b = count(&g, &opts).unwrap().count;
            assert_eq!(a, b, "seed {seed}");
            counts.push(a);
        }
        let diff = counts[0].sub(&counts[1]).unwrap();
        assert_eq!(diff, brute_count(&d).unwrap(), "seed {seed}");
    }
}

#[test]
fn fomc_output_rereads() {
    let s = parse_fo("predicate p/1\npredicate q/2\nforall u v;\np(u) & q(u, v) -> p(v)\n").unwrap();
    for n in 1..=2 {
        let d = fomc_encode(&s, n).unwrap();
        let back = reread(&d);
        assert_eq!(brute_count(&back).unwrap(), brute_count(&d).unwrap());
    }
}

#[test]
fn generated_families_reread() {
    for n in 1..=4 {
        reread(&two_col(n, 0).unwrap());
        reread(&ind_set(n + 1, 1).unwrap());
    }
}
