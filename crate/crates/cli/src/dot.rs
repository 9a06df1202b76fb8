//! Graphviz export. Multinodes are filled squares, simple nodes circles.

use std::fmt::Write;

use mgg_core::multigraph::is_multinode;
use mgg_core::TypedGraph;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn to_dot(name: &str, g: &TypedGraph) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(name)).unwrap();
    for n in g.node_ids() {
        let ty = g.types_of(&n).map(|t| t.to_string()).unwrap_or_default();
        if is_multinode(g, &n) {
            writeln!(
                out,
                "  {} [shape=square, style=filled, label=\"\", xlabel={}];",
                quote(n.as_str()),
                quote(n.as_str())
            )
            .unwrap();
        } else {
            let label = format!("{n}:{ty}");
            writeln!(
                out,
                "  {} [shape=circle, label={}];",
                quote(n.as_str()),
                quote(&label)
            )
            .unwrap();
        }
    }
    for (a, b) in g.edge_list() {
        writeln!(out, "  {} -> {};", quote(a.as_str()), quote(b.as_str())).unwrap();
    }
    out.push_str("}\n");
    out
}
