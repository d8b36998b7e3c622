use std::fmt::Write;

use rustc_hash::FxHashSet;

pub(super) fn render(
    nodes: &[(u32, u32, u32)],
    roots: &[(String, u32)],
    name: &dyn Fn(u32) -> String,
) -> String {
    let mut out = String::from("digraph bdd {\n  node [shape=circle];\n");
    out.push_str("  n0 [shape=box,label=\"0\"];\n  n1 [shape=box,label=\"1\"];\n");
    let mut seen = FxHashSet::default();
    let mut stack = Vec::new();
    for (i, (label, r)) in roots.iter().enumerate() {
        let _ = writeln!(out, "  r{i} [shape=plaintext,label=\"{}\"];", escape(label));
        let _ = writeln!(out, "  r{i} -> n{r};");
        stack.push(*r);
    }
    while let Some(x) = stack.pop() {
        if x <= 1 || !seen.insert(x) {
            continue;
        }
        let (v, lo, hi) = nodes[x as usize];
        let _ = writeln!(out, "  n{x} [label=\"{}\"];", escape(&name(v)));
        let _ = writeln!(out, "  n{x} -> n{lo} [style=dashed];");
        let _ = writeln!(out, "  n{x} -> n{hi};");
        stack.push(lo);
        stack.push(hi);
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}
