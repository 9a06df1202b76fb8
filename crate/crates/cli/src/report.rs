//! Reports: ordered key/value trees printed as indented text or JSON.

use mgg_core::conditions::{Anchor, Condition};
use mgg_core::{MultiGraph, Production, TypedGraph};
use serde_json::{json, Map, Value};

#[derive(Clone, Debug)]
pub enum Item {
    Text(String),
    Flag(bool),
    Count(usize),
    List(Vec<String>),
    Graph(TypedGraph),
    Section(Report),
    Entries(Vec<Report>),
}

#[derive(Clone, Debug, Default)]
pub struct Report(Vec<(String, Item)>);

impl Report {
    pub fn new() -> Report {
        Report::default()
    }

    pub fn push(&mut self, key: &str, item: Item) -> &mut Report {
        self.0.push((key.to_owned(), item));
        self
    }

    pub fn text(&mut self, key: &str, value: impl ToString) -> &mut Report {
        self.push(key, Item::Text(value.to_string()))
    }

    pub fn flag(&mut self, key: &str, value: bool) -> &mut Report {
        self.push(key, Item::Flag(value))
    }

    pub fn count(&mut self, key: &str, value: usize) -> &mut Report {
        self.push(key, Item::Count(value))
    }

    pub fn list<I, S>(&mut self, key: &str, items: I) -> &mut Report
    where
        I: IntoIterator<Item = S>,
        S: ToString,
    {
        self.push(
            key,
            Item::List(items.into_iter().map(|s| s.to_string()).collect()),
        )
    }

    pub fn graph(&mut self, key: &str, g: &TypedGraph) -> &mut Report {
        self.push(key, Item::Graph(g.clone()))
    }

    pub fn section(&mut self, key: &str, r: Report) -> &mut Report {
        self.push(key, Item::Section(r))
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        self.write_text(0, &mut out);
        out
    }

    fn write_text(&self, depth: usize, out: &mut String) {
        let pad = "  ".repeat(depth);
        for (k, item) in &self.0 {
            match item {
                Item::Text(s) => out.push_str(&format!("{pad}{k}: {s}\n")),
                Item::Flag(b) => out.push_str(&format!("{pad}{k}: {b}\n")),
                Item::Count(n) => out.push_str(&format!("{pad}{k}: {n}\n")),
                Item::List(xs) => out.push_str(&format!("{pad}{k}: [{}]\n", xs.join(", "))),
                Item::Graph(g) => {
                    out.push_str(&format!("{pad}{k}:\n"));
                    for line in g.to_string().lines() {
                        out.push_str(&format!("{pad}  {line}\n"));
                    }
                }
                Item::Section(r) => {
                    out.push_str(&format!("{pad}{k}:\n"));
                    r.write_text(depth + 1, out);
                }
                Item::Entries(rs) => {
                    out.push_str(&format!("{pad}{k}:\n"));
                    for r in rs {
                        out.push_str(&format!("{pad}  -\n"));
                        r.write_text(depth + 2, out);
                    }
                }
            }
        }
    }

    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        for (k, item) in &self.0 {
            let v = match item {
                Item::Text(s) => json!(s),
                Item::Flag(b) => json!(b),
                Item::Count(n) => json!(n),
                Item::List(xs) => json!(xs),
                Item::Graph(g) => graph_json(g),
                Item::Section(r) => r.to_json(),
                Item::Entries(rs) => Value::Array(rs.iter().map(Report::to_json).collect()),
            };
            map.insert(k.clone(), v);
        }
        Value::Object(map)
    }
}

pub fn graph_json(g: &TypedGraph) -> Value {
    let nodes: Map<String, Value> = g
        .node_ids()
        .iter()
        .map(|n| {
            let types: Vec<&str> = g
                .types_of(n)
                .map(|t| t.types().collect())
                .unwrap_or_default();
            (n.to_string(), json!(types))
        })
        .collect();
    let edges: Vec<Value> = g
        .edge_list()
        .iter()
        .map(|(a, b)| json!([a.to_string(), b.to_string()]))
        .collect();
    json!({ "nodes": nodes, "edges": edges })
}

pub fn edges<'a, I>(edges: I) -> Vec<String>
where
    I: IntoIterator<Item = &'a (mgg_core::ElemId, mgg_core::ElemId)>,
{
    edges
        .into_iter()
        .map(|(a, b)| format!("({a},{b})"))
        .collect()
}

pub fn production(p: &Production) -> Report {
    let mut r = Report::new();
    r.text("name", p.name())
        .graph("L", &p.lhs().compact())
        .graph("R", &p.rhs().compact())
        .list("K", edges(&p.nihil().edge_list()))
        .list("erase", edges(&p.erase().edges.entries()))
        .list("restock", edges(&p.restock().edges.entries()))
        .list("deleted nodes", p.deleted_nodes())
        .list("added nodes", p.added_nodes());
    r
}

pub fn condition(c: &Condition) -> Report {
    let mut r = Report::new();
    match &c.anchor {
        Anchor::None => r.text("kind", "constraint"),
        Anchor::Pre(p) => r.text("kind", "precondition").text("rule", p.name()),
        Anchor::Post(p) => r.text("kind", "postcondition").text("rule", p.name()),
    };
    r.text("formula", c.body());
    let mut graphs = Report::new();
    for (name, v) in c.diagram.vars.iter().filter(|(_, v)| !v.is_anchor()) {
        let mut g = Report::new();
        g.list("nodes", v.nodes.iter().map(|(n, t)| format!("{n}:{t}")))
            .list("edges", edges(&v.certain))
            .list("forbid", edges(&v.nihil));
        graphs.section(name, g);
    }
    r.section("graphs", graphs);
    r.list(
        "morphisms",
        c.diagram.morphisms.iter().map(|m| {
            let pairs: Vec<String> = m.map.iter().map(|(a, b)| format!("{a}={b}")).collect();
            format!("{}->{} {{{}}}", m.from, m.to, pairs.join(" "))
        }),
    );
    r
}

pub fn multigraph(m: &MultiGraph) -> Report {
    let mut r = Report::new();
    r.list("nodes", m.nodes().iter().map(|(n, t)| format!("{n}:{t}")))
        .list(
            "edges",
            m.edges().iter().map(|(e, (s, t))| format!("{e}:{s}->{t}")),
        );
    r
}
