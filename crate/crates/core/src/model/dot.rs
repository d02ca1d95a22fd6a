use std::fmt::Write;

use super::AtgModel;
use crate::scalar::Real;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

impl<T: Real> AtgModel<T> {
    /// Graphviz rendering, nodes and edges in key order.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("digraph atg {\n");
        for key in self.nodes.keys() {
            let _ = writeln!(out, "  {};", quote(key));
        }
        for e in self.edges.values() {
            let mean: Vec<String> = e.dist.mean.iter().map(|m| format!("{m:.4}")).collect();
            let label = format!("{} mean=[{}] n={}", e.kind, mean.join(","), e.visit_count);
            let _ = writeln!(
                out,
                "  {} -> {} [label={}];",
                quote(&e.src),
                quote(&e.dst),
                quote(&label)
            );
        }
        out.push_str("}\n");
        out
    }
}
