//! Symbolic, expansion and brute-force counts agree on random instances.

use dqcount::counter::oracle::brute_count;
use dqcount::counter::{count, CountOptions, Method, Strategy};
use dqcount::generators::{random, RandomSpec};

fn spec(seed: u64) -> RandomSpec {
    RandomSpec {
        seed,
        n: 2 + (seed % 5) as usize,
        w1: (seed / 5 % 4) as usize,
        w2: (seed / 20 % 4) as usize,
        gates: 2 + (seed / 80 % 6) as usize,
        guard: seed.is_multiple_of(3),
    }
}

fn fit(mut s: RandomSpec) -> RandomSpec {
    s.w1 = s.w1.min(s.n);
    s.w2 = s.w2.min(s.n);
    s
}

#[test]
fn strategies_agree_with_brute_force() {
    for seed in 0..300 {
        let d = random(&fit(spec(seed))).unwrap();
        let expect = brute_count(&d).unwrap();
        for strategy in [Strategy::Enumerate, Strategy::Branch] {
            for pruning in [true, false] {
                let opts = CountOptions {
                    strategy,
                    pruning,
                    ..CountOptions::with_method(Method::Symbolic)
                };
                let got = count(&d, &opts).unwrap().count;
                assert_eq!(got, expect, "seed {seed} {strategy:?} pruning={pruning}");
            }
        }
        let e = count(&d, &CountOptions::with_method(Method::Expansion)).unwrap().count;
        assert_eq!(e, expect, "seed {seed} expansion");
    }
}
