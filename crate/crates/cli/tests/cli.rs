use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use serde_json::Value;
use tempfile::TempDir;

const PHI0: &str = "#dqcir\nforall(x)\nexists(y1; x)\nexists(y2; x)\ng = or(y1, y2)\noutput(g)\n";
const PHI_EQ: &str = "#dqcir\nforall(x, xp)\nexists(y1; x)\nexists(y2; xp)\ng1 = iff(x, xp)\ng2 = iff(y1, y2)\ng = implies(g1, g2)\noutput(g)\n";
const SMOKERS: &str = "predicate stress/1\npredicate smoke/1\npredicate friend/2\nforall u v;\n\
                       (stress(u) -> smoke(u)) & (friend(u, v) & smoke(u) -> smoke(v))\n";

fn dqcount(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dqcount"))
        .args(args)
        .env_remove("DQCOUNT_TIMEOUT")
        .env_remove("DQCOUNT_EXPANSION_CLAUSES")
        .output()
        .expect("binary runs")
}

fn file(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(bytes)))
}

fn ok(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    json(&out.stdout)
}

fn decimal(report: &Value) -> u128 {
    report["count"]["decimal"].as_str().unwrap().parse().unwrap()
}

#[test]
fn counts_two_col_symbolically() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("two_col_1_0.dqcir");
    ok(&dqcount(&["generate", "two-col", "--n", "1", "--k", "0", "-o", s(&p)]));
    let r = ok(&dqcount(&["count", "--method", "symbolic", s(&p)]));
    assert_eq!(r["count"]["decimal"], "2");
    assert_eq!(r["satisfiable"], true);
    assert_eq!(r["schema"], 1);
}

#[test]
fn brute_force_on_phi0() {
    let dir = TempDir::new().unwrap();
    let p = file(&dir, "tiny.dqcir", PHI0);
    let r = ok(&dqcount(&["count", "--method", "brute", s(&p)]));
    assert_eq!(r["count"]["decimal"], "9");
}

#[test]
fn malformed_input_exits_one_with_position() {
    let dir = TempDir::new().unwrap();
    let p = file(&dir, "bad.dqcir", "#dqcir\nforall(x)\nexists(y; x\n");
    let out = dqcount(&["count", s(&p)]);
    assert_eq!(out.status.code(), Some(1));
    let e = json(&out.stderr);
    assert_eq!(e["error"]["kind"], "input");
    assert_eq!(e["error"]["line"], 3);
}

#[test]
fn usage_errors_are_input_errors() {
    let out = dqcount(&["count", "--method", "guess", "x"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out.stderr)["error"]["kind"], "input");
    let missing = dqcount(&["count", "/nonexistent/file.dqcir"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn compare_reports_equal() {
    let dir = TempDir::new().unwrap();
    let p = file(&dir, "eq.dqcir", PHI_EQ);
    let r = ok(&dqcount(&["compare", "--methods", "symbolic,brute", s(&p)]));
    assert_eq!(r["verdict"], "EQUAL");
    for run in r["runs"].as_array().unwrap() {
        assert_eq!(run["count"]["decimal"], "4");
    }
}

#[test]
fn compare_random_corpus() {
    let dir = TempDir::new().unwrap();
    for seed in 0..6 {
        let p = dir.path().join(format!("r{seed}.dqcir"));
        let seed = seed.to_string();
        ok(&dqcount(&[
            "generate", "random", "--seed", &seed, "--n", "3", "--w1", "2", "--w2", "1", "-o", s(&p),
        ]));
        let r = ok(&dqcount(&["compare", s(&p)]));
        assert_eq!(r["verdict"], "EQUAL", "seed {seed}");
    }
}

#[test]
fn injected_fault_is_a_mismatch() {
    let dir = TempDir::new().unwrap();
    let p = file(&dir, "tiny.dqcir", PHI0);
    let out = dqcount(&["compare", "--inject-fault", s(&p)]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(json(&out.stdout)["verdict"], "MISMATCH");
    assert_eq!(json(&out.stderr)["error"]["kind"], "mismatch");
}

#[test]
fn expand_writes_dimacs_and_manifest() {
    let dir = TempDir::new().unwrap();
    let p = file(&dir, "tiny.dqcir", PHI0);
    let out = dqcount(&["expand", s(&p)]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("c map 2 1 4\np cnf 4 2\n1 3 0\n2 4 0\n"));
    let cnf = dir.path().join("tiny.cnf");
    let m = ok(&dqcount(&["expand", s(&p), "-o", s(&cnf)]));
    assert_eq!(m["clauses"], 2);
    assert_eq!(std::fs::read_to_string(&cnf).unwrap(), text);
}

#[test]
fn info_reports_structure() {
    let dir = TempDir::new().unwrap();
    let p = file(&dir, "tiny.dqcir", PHI0);
    let dot = dir.path().join("g.dot");
    let r = ok(&dqcount(&["info", s(&p), "--dump-bdd", s(&dot)]));
    assert_eq!(r["satisfiable"], true);
    assert_eq!(r["support_cells"], serde_json::json!(["2", "2"]));
    assert_eq!(r["components"], 2);
    assert!(r["closure_iterations"].as_u64().unwrap() >= 1);
    assert!(std::fs::read_to_string(dot).unwrap().starts_with("digraph"));
}

#[test]
fn reduction_manifest_and_subtraction() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("g.dqcir");
    ok(&dqcount(&[
        "generate", "random-general", "--seed", "3", "--n", "1", "--widths", "1,0,1", "-o", s(&p),
    ]));
    let want = decimal(&ok(&dqcount(&["count", "--method", "brute", s(&p)])));
    let out = dir.path().join("red");
    let m = ok(&dqcount(&["reduce", "to-2dqbf", s(&p), "--out-dir", s(&out)]));
    let on_disk: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m, on_disk);
    let side = |key: &str| {
        let f = out.join(m[key].as_str().unwrap());
        decimal(&ok(&dqcount(&["count", "--method", "symbolic", "--strategy", "branch", s(&f)])))
    };
    assert_eq!(side("minuend") - side("subtrahend"), want);
    let r = ok(&dqcount(&["count", "--method", "reduction", s(&p)]));
    assert_eq!(decimal(&r), want);
}

#[test]
fn uniform_reduction_keeps_the_count() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("g.dqcir");
    ok(&dqcount(&[
        "generate", "random-general", "--seed", "5", "--n", "1", "--widths", "1,1", "-o", s(&p),
    ]));
    let u = dir.path().join("u.dqcir");
    ok(&dqcount(&["reduce", "uniform", s(&p), "-o", s(&u)]));
    let a = ok(&dqcount(&["count", "--method", "brute", s(&p)]));
    let b = ok(&dqcount(&["count", "--method", "expansion", s(&u)]));
    assert_eq!(a["count"], b["count"]);
}

#[test]
fn fomc_encoding_counts_structures() {
    let dir = TempDir::new().unwrap();
    let p = file(&dir, "smokers.fo", SMOKERS);
    let d = dir.path().join("smokers.dqcir");
    let m = ok(&dqcount(&["encode", "fomc", s(&p), "--log-domain", "1", "-o", s(&d)]));
    assert_eq!(m["log_domain"], 1);
    let r = ok(&dqcount(&["count", s(&d)]));
    assert_eq!(r["count"]["decimal"], "112");
}

#[test]
fn generation_is_deterministic() {
    let args = ["generate", "random", "--seed", "11", "--n", "4", "--w1", "3", "--w2", "2", "--gates", "6"];
    let a = dqcount(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, dqcount(&args).stdout);
    let other = dqcount(&["generate", "random", "--seed", "12", "--n", "4", "--w1", "3", "--w2", "2", "--gates", "6"]);
    assert_ne!(a.stdout, other.stdout);
}

#[test]
fn reports_are_reproducible() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("r.dqcir");
    ok(&dqcount(&["generate", "ind-set", "--n", "4", "--k", "1", "-o", s(&p)]));
    let strip = |mut v: Value| {
        v.as_object_mut().unwrap().remove("elapsed_ms");
        v.to_string()
    };
    let args = ["count", "--method", "symbolic", "--jobs", "2", s(&p)];
    assert_eq!(strip(ok(&dqcount(&args))), strip(ok(&dqcount(&args))));
}

#[test]
fn environment_overrides_budgets() {
    let dir = TempDir::new().unwrap();
    let p = file(&dir, "tiny.dqcir", PHI0);
    let out = Command::new(env!("CARGO_BIN_EXE_dqcount"))
        .args(["count", "--method", "expansion", s(&p)])
        .env("DQCOUNT_EXPANSION_CLAUSES", "1")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out.stderr)["error"]["kind"], "budget");
}

#[test]
fn timeout_is_honored() {
    let dir = TempDir::new().unwrap();
    let p = dir.path().join("s.dqcir");
    ok(&dqcount(&["generate", "ind-set", "--n", "10", "--k", "0", "-o", s(&p)]));
    let start = Instant::now();
    let out = dqcount(&["count", "--method", "symbolic", "--timeout", "0.1", s(&p)]);
    let took = start.elapsed();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stdout));
    assert_eq!(json(&out.stderr)["error"]["kind"], "timeout");
    // 1.5 × the limit, plus process start-up.
    assert!(took < Duration::from_millis(150 + 200), "{took:?}");
}

#[test]
fn text_format() {
    let dir = TempDir::new().unwrap();
    let p = file(&dir, "tiny.dqcir", PHI0);
    let out = dqcount(&["count", "--method", "brute", "--format", "text", s(&p)]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l == "count: 9"), "{text}");
}
