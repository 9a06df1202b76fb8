//! Seeded generators for small graphs, rules, sequences and conditions.

use std::collections::BTreeSet;

use mgg_core::conditions::{Condition, Diagram, Variable};
use mgg_core::{
    CompletedSequence, Formula, MultiGraph, MultiRule, NodeMap, Production, TypeSet, TypedGraph,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const TYPES: [&str; 2] = ["T", "U"];

pub type Nodes = Vec<(String, &'static str)>;
pub type Edges = Vec<(String, String)>;

pub fn build(nodes: &[(String, &str)], edges: &[(String, String)]) -> TypedGraph {
    let mut b = TypedGraph::builder();
    for (n, t) in nodes {
        b = b.node(n.as_str(), t);
    }
    for (x, y) in edges {
        b = b.edge(x.as_str(), y.as_str());
    }
    b.build().expect("generated graph")
}

/// Nodes and edges of `g` as owned lists.
pub fn parts(g: &TypedGraph) -> (Vec<(String, String)>, Edges) {
    let nodes = g
        .node_ids()
        .into_iter()
        .map(|n| {
            let t = g.types_of(&n).expect("typed").to_string();
            (n.to_string(), t)
        })
        .collect();
    let edges = g
        .edge_list()
        .into_iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect();
    (nodes, edges)
}

pub fn rebuild(nodes: &[(String, String)], edges: &[(String, String)]) -> TypedGraph {
    let typed: Vec<(String, &str)> = nodes.iter().map(|(n, t)| (n.clone(), t.as_str())).collect();
    build(&typed, edges)
}

fn has(nodes: &[(String, &str)], id: &str) -> bool {
    nodes.iter().any(|(n, _)| n == id)
}

pub struct Gen(StdRng);

impl Gen {
    pub fn new(seed: u64) -> Gen {
        Gen(StdRng::seed_from_u64(seed))
    }

    pub fn coin(&mut self, p: f64) -> bool {
        self.0.gen_bool(p)
    }

    pub fn range(&mut self, lo: usize, hi: usize) -> usize {
        self.0.gen_range(lo..=hi)
    }

    pub fn pick<'a, T>(&mut self, xs: &'a [T]) -> &'a T {
        &xs[self.0.gen_range(0..xs.len())]
    }

    pub fn ty(&mut self) -> &'static str {
        *self.pick(&TYPES)
    }

    pub fn nodes(&mut self, prefix: &str, lo: usize, hi: usize) -> Nodes {
        (1..=self.range(lo, hi))
            .map(|i| (format!("{prefix}{i}"), self.ty()))
            .collect()
    }

    pub fn edges(&mut self, nodes: &[(String, &str)], p: f64) -> Edges {
        let mut out = Vec::new();
        for (a, _) in nodes {
            for (b, _) in nodes {
                if self.coin(p) {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
        out
    }

    pub fn graph(&mut self, prefix: &str, lo: usize, hi: usize, p: f64) -> TypedGraph {
        let nodes = self.nodes(prefix, lo, hi);
        let edges = self.edges(&nodes, p);
        build(&nodes, &edges)
    }

    /// Right hand side edges: kept pairs mostly follow `lhs_edges`.
    fn rhs_edges(
        &mut self,
        lhs: &[(String, &str)],
        lhs_edges: &Edges,
        rhs: &[(String, &str)],
    ) -> Edges {
        let mut out = Vec::new();
        for (a, _) in rhs {
            for (b, _) in rhs {
                let p = if has(lhs, a) && has(lhs, b) {
                    if lhs_edges.contains(&(a.clone(), b.clone())) {
                        0.7
                    } else {
                        0.2
                    }
                } else {
                    0.35
                };
                if self.coin(p) {
                    out.push((a.clone(), b.clone()));
                }
            }
        }
        out
    }

    /// A rule over `pool`: each node is kept, deleted, added or unused.
    pub fn rule(&mut self, name: &str, pool: &[(String, &'static str)]) -> Production {
        loop {
            let (mut lhs, mut rhs) = (Vec::new(), Vec::new());
            for n in pool {
                match self.range(0, 5) {
                    0 => {}
                    1 => lhs.push(n.clone()),
                    2 => rhs.push(n.clone()),
                    _ => {
                        lhs.push(n.clone());
                        rhs.push(n.clone());
                    }
                }
            }
            if lhs.is_empty() {
                continue;
            }
            let le = self.edges(&lhs, 0.35);
            let re = self.rhs_edges(&lhs, &le, &rhs);
            return Production::from_static(
                name,
                &build(&lhs, &le),
                &build(&rhs, &re),
                &NodeMap::new(),
            )
            .expect("generated rule");
        }
    }

    /// Rules over shared global ids. Later rules may use nodes created or
    /// deleted by earlier ones; created ids are never reused.
    pub fn sequence(&mut self, max_len: usize) -> CompletedSequence {
        let mut known: Nodes = self.nodes("n", 2, 4);
        let mut rules = Vec::new();
        for i in 0..self.range(1, max_len) {
            let mut lhs: Nodes = known.iter().filter(|_| self.coin(0.5)).cloned().collect();
            if lhs.is_empty() {
                lhs.push(self.pick(&known).clone());
            }
            let mut rhs: Nodes = lhs.iter().filter(|_| self.coin(0.8)).cloned().collect();
            if self.coin(0.3) {
                let fresh = (format!("c{i}"), self.ty());
                known.push(fresh.clone());
                rhs.push(fresh);
            }
            let le = self.edges(&lhs, 0.3);
            let re = self.rhs_edges(&lhs, &le, &rhs);
            let p = Production::from_static(
                format!("p{i}"),
                &build(&lhs, &le),
                &build(&rhs, &re),
                &NodeMap::new(),
            )
            .expect("generated rule");
            rules.push(p);
        }
        CompletedSequence::new(rules).expect("consistent typing")
    }

    /// Variable over the anchor nodes kept with probability 1/2 plus `extra`
    /// fresh nodes, with random certainty and nihil edges.
    pub fn variable(
        &mut self,
        anchor: Option<&TypedGraph>,
        extra: usize,
        prefix: &str,
    ) -> (Variable, NodeMap) {
        let mut nodes: Nodes = Vec::new();
        let mut shared = NodeMap::new();
        if let Some(a) = anchor {
            for n in a.node_ids() {
                if self.coin(0.5) {
                    let t = a.types_of(&n).expect("typed").to_string();
                    let t = if t == "T" { "T" } else { "U" };
                    shared.insert(n.clone(), n.clone());
                    nodes.push((n.to_string(), t));
                }
            }
        }
        for i in 1..=extra {
            nodes.push((format!("{prefix}{i}"), self.ty()));
        }
        let certain = self.edges(&nodes, 0.35);
        let mut nihil = Vec::new();
        for (a, _) in &nodes {
            for (b, _) in &nodes {
                if !certain.contains(&(a.clone(), b.clone())) && self.coin(0.15) {
                    nihil.push((a.clone(), b.clone()));
                }
            }
        }
        let var = Variable::from_graph(&build(&nodes, &certain))
            .with_nihil(nihil)
            .expect("nihil on own nodes");
        (var, shared)
    }

    /// A small multidigraph; parallel edges and loops allowed.
    pub fn multigraph(&mut self, max_nodes: usize, max_edges: usize) -> MultiGraph {
        let mut m = MultiGraph::new();
        let nodes = self.nodes("v", 1, max_nodes);
        for (n, t) in &nodes {
            m.add_node(n.as_str(), TypeSet::single(*t))
                .expect("simple type");
        }
        for _ in 0..self.range(0, max_edges) {
            let (s, _) = self.pick(&nodes).clone();
            let (t, _) = self.pick(&nodes).clone();
            m.add_edge(&s.as_str().into(), &t.as_str().into())
                .expect("known nodes");
        }
        m
    }

    /// A rule whose left hand side is a piece of `host`: the right hand side
    /// drops nodes and edges and may add an edge and a node.
    pub fn multirule(&mut self, host: &MultiGraph) -> MultiRule {
        let mut lhs = MultiGraph::new();
        let chosen: BTreeSet<_> = host
            .nodes()
            .keys()
            .filter(|_| self.coin(0.5))
            .cloned()
            .collect();
        let chosen = if chosen.is_empty() {
            BTreeSet::from([host.nodes().keys().next().expect("nodes").clone()])
        } else {
            chosen
        };
        for n in &chosen {
            lhs.add_node(n.clone(), host.nodes()[n].clone()).unwrap();
        }
        for (e, (s, t)) in host.edges() {
            if chosen.contains(s) && chosen.contains(t) && self.coin(0.6) {
                lhs.add_named_edge(e.clone(), s, t).unwrap();
            }
        }
        let mut rhs = MultiGraph::new();
        for (n, t) in lhs.nodes() {
            if self.coin(0.7) {
                rhs.add_node(n.clone(), t.clone()).unwrap();
            }
        }
        for (e, (s, t)) in lhs.edges() {
            if rhs.nodes().contains_key(s) && rhs.nodes().contains_key(t) && self.coin(0.6) {
                rhs.add_named_edge(e.clone(), s, t).unwrap();
            }
        }
        if self.coin(0.2) {
            rhs.add_node("fresh", TypeSet::single(self.ty())).unwrap();
        }
        let kept: Vec<_> = rhs.nodes().keys().cloned().collect();
        if !kept.is_empty() && self.coin(0.3) {
            let s = self.pick(&kept).clone();
            let t = self.pick(&kept).clone();
            rhs.add_named_edge("new", &s, &t).unwrap();
        }
        MultiRule {
            name: "q".into(),
            lhs,
            rhs,
        }
    }
}

/// Operators whose compilation the suite checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op {
    Match,
    Closure,
    Decompose,
    Nac,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Place {
    Free,
    Pre,
    Post,
}

/// A random condition shaped for `op`: a graph constraint or an
/// application condition of a random two-node rule.
pub fn condition(g: &mut Gen, op: Op, place: Place) -> Condition {
    let pool: Nodes = vec![("1".into(), g.ty()), ("2".into(), g.ty())];
    let p = g.rule("p", &pool);
    let anchor_graph = match place {
        Place::Free => None,
        Place::Pre => Some(p.lhs().compact()),
        Place::Post => Some(p.rhs().compact()),
    };
    let anchor_name = if place == Place::Post { "R" } else { "L" };
    let extra = g.range(1, 2);
    let (mut a, shared) = g.variable(anchor_graph.as_ref(), extra, "x");
    if op == Op::Decompose && a.certain.is_empty() && a.nihil.is_empty() {
        let n = a.nodes.keys().next().expect("one node").clone();
        a.certain.insert((n.clone(), n));
    }
    let mut d = Diagram::new().with_var("A", a.clone());
    if !shared.is_empty() {
        d = d.with_morphism(anchor_name, "A", shared.clone());
    }
    let text = match op {
        Op::Match => "exists A . A",
        Op::Closure => {
            let (b, _) = g.variable(None, 1, "w");
            let mut b_full = a.clone();
            b_full.nodes.extend(b.nodes);
            let ids: Vec<_> = b_full.nodes.keys().cloned().collect();
            for x in &ids {
                for y in &ids {
                    if g.coin(0.2) && !b_full.nihil.contains(&(x.clone(), y.clone())) {
                        b_full.certain.insert((x.clone(), y.clone()));
                    }
                }
            }
            let map: NodeMap = a.nodes.keys().map(|n| (n.clone(), n.clone())).collect();
            d = d.with_var("B", b_full).with_morphism("A", "B", map);
            *g.pick(&["forall A . exists B . B", "forall A . (exists B . B) | !A"])
        }
        Op::Decompose => *g.pick(&["exists A . Q(A)", "exists A . !Q(A)", "exists A . Q(A,~G)"]),
        Op::Nac => *g.pick(&["!exists A . A", "forall A . !A"]),
    };
    let f = Formula::parse(text).expect("formula");
    match place {
        Place::Free => Condition::constraint(d, f),
        Place::Pre => Condition::pre(&p, d, f),
        Place::Post => Condition::post(&p, d, f),
    }
    .expect("generated condition")
}
