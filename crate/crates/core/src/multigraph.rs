//! Multidigraphs encoded as simple digraphs: every edge becomes a multinode
//! with one incoming edge from its source and one outgoing edge to its target.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::conditions::{delocalize, satisfies, Condition, Diagram, Formula, Stage};
use crate::digraph::{TypeSet, TypedGraph};
use crate::error::{Error, Result};
use crate::matching::{Morphism, NodeMap};
use crate::matrix::ElemId;
use crate::production::Production;
use crate::sequence::{first_execution, CompletedSequence};

/// Node type reserved for multinodes.
pub const MULTINODE: &str = "multinode";

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MultiGraph {
    nodes: BTreeMap<ElemId, TypeSet>,
    edges: BTreeMap<ElemId, (ElemId, ElemId)>,
}

impl MultiGraph {
    pub fn new() -> MultiGraph {
        MultiGraph::default()
    }

    pub fn add_node(&mut self, id: impl Into<ElemId>, types: TypeSet) -> Result<()> {
        let id = id.into();
        if types.contains(MULTINODE) {
            return Err(Error::InvalidRule(format!(
                "node {id} uses the reserved type {MULTINODE}"
            )));
        }
        if self.nodes.contains_key(&id) || self.edges.contains_key(&id) {
            return Err(Error::DuplicateElement(id));
        }
        self.nodes.insert(id, types);
        Ok(())
    }

    /// Add an edge named `source>target#k`, `k` its ordinal among parallels.
    pub fn add_edge(&mut self, source: &ElemId, target: &ElemId) -> Result<ElemId> {
        let mut k = self.multiplicity(source, target) + 1;
        let id = loop {
            let id = ElemId::new(format!("{source}>{target}#{k}"));
            if !self.edges.contains_key(&id) && !self.nodes.contains_key(&id) {
                break id;
            }
            k += 1;
        };
        self.add_named_edge(id.clone(), source, target)?;
        Ok(id)
    }

    pub fn add_named_edge(
        &mut self,
        id: impl Into<ElemId>,
        source: &ElemId,
        target: &ElemId,
    ) -> Result<()> {
        let id = id.into();
        for n in [source, target] {
            if !self.nodes.contains_key(n) {
                return Err(Error::UnknownElement(n.clone()));
            }
        }
        if self.nodes.contains_key(&id) || self.edges.contains_key(&id) {
            return Err(Error::DuplicateElement(id));
        }
        self.edges.insert(id, (source.clone(), target.clone()));
        Ok(())
    }

    pub fn nodes(&self) -> &BTreeMap<ElemId, TypeSet> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeMap<ElemId, (ElemId, ElemId)> {
        &self.edges
    }

    pub fn multiplicity(&self, source: &ElemId, target: &ElemId) -> usize {
        self.edges
            .values()
            .filter(|(s, t)| s == source && t == target)
            .count()
    }

    /// Some type-preserving node bijection carries edge multiplicities over.
    pub fn is_isomorphic(&self, other: &MultiGraph) -> bool {
        if self.nodes.len() != other.nodes.len() || self.edges.len() != other.edges.len() {
            return false;
        }
        let counts = |m: &MultiGraph| {
            let mut c: BTreeMap<(ElemId, ElemId), usize> = BTreeMap::new();
            for e in m.edges.values() {
                *c.entry(e.clone()).or_default() += 1;
            }
            c
        };
        let mine = counts(self);
        let theirs = counts(other);
        let ours: Vec<&ElemId> = self.nodes.keys().collect();
        let mut used = BTreeSet::new();
        let mut map = BTreeMap::new();
        fn go<'a>(
            k: usize,
            ours: &[&'a ElemId],
            a: &'a MultiGraph,
            b: &'a MultiGraph,
            mine: &BTreeMap<(ElemId, ElemId), usize>,
            theirs: &BTreeMap<(ElemId, ElemId), usize>,
            used: &mut BTreeSet<&'a ElemId>,
            map: &mut BTreeMap<&'a ElemId, &'a ElemId>,
        ) -> bool {
            if k == ours.len() {
                return mine
                    .iter()
                    .all(|((s, t), n)| theirs.get(&(map[s].clone(), map[t].clone())) == Some(n));
            }
            let x = ours[k];
            for (y, ty) in &b.nodes {
                if used.contains(y) || *ty != a.nodes[x] {
                    continue;
                }
                used.insert(y);
                map.insert(x, y);
                if go(k + 1, ours, a, b, mine, theirs, used, map) {
                    return true;
                }
                map.remove(x);
                used.remove(y);
            }
            false
        }
        go(0, &ours, self, other, &mine, &theirs, &mut used, &mut map)
    }
}

impl fmt::Display for MultiGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (id, t) in &self.nodes {
            writeln!(f, "{id}: {t}")?;
        }
        for (id, (s, t)) in &self.edges {
            writeln!(f, "{id}: {s} -> {t}")?;
        }
        Ok(())
    }
}

pub fn is_multinode(g: &TypedGraph, id: &ElemId) -> bool {
    g.types_of(id).is_some_and(|t| t.contains(MULTINODE))
}

/// Simple nodes first, then one multinode per edge.
pub fn encode(m: &MultiGraph) -> Result<TypedGraph> {
    let mut b = TypedGraph::builder();
    for (id, t) in &m.nodes {
        b = b.typed_node(id.clone(), t.clone());
    }
    for (id, (s, t)) in &m.edges {
        b = b
            .node(id.clone(), MULTINODE)
            .edge(s.clone(), id.clone())
            .edge(id.clone(), t.clone());
    }
    b.build()
}

pub fn decode(g: &TypedGraph) -> Result<MultiGraph> {
    let report = check_mc(g)?;
    if !report.holds() {
        return Err(Error::NotAMultigraph(report.violations[0].to_string()));
    }
    let mut m = MultiGraph::new();
    for id in g.node_ids() {
        if !is_multinode(g, &id) {
            m.add_node(id.clone(), g.types_of(&id).expect("node").clone())?;
        }
    }
    for id in g.node_ids().into_iter().filter(|n| is_multinode(g, n)) {
        let source = g
            .node_ids()
            .into_iter()
            .find(|s| g.has_edge(s, &id))
            .expect("checked");
        let target = g
            .node_ids()
            .into_iter()
            .find(|t| g.has_edge(&id, t))
            .expect("checked");
        m.add_named_edge(id, &source, &target)?;
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum McViolation {
    /// An edge between two simple nodes or two multinodes.
    SameKind(ElemId, ElemId),
    /// A multinode without exactly one source and one target.
    Unanchored {
        multinode: ElemId,
        sources: usize,
        targets: usize,
    },
}

impl fmt::Display for McViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            McViolation::SameKind(a, b) => write!(f, "edge ({a},{b}) joins nodes of the same kind"),
            McViolation::Unanchored {
                multinode,
                sources,
                targets,
            } => write!(
                f,
                "multinode {multinode} has {sources} sources and {targets} targets"
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct McReport {
    /// Nodes and multinodes alternate along every edge.
    pub gc0: bool,
    /// Every multinode has one simple source and one simple target.
    pub gc1: bool,
    pub violations: Vec<McViolation>,
}

impl McReport {
    pub fn holds(&self) -> bool {
        self.gc0 && self.gc1
    }
}

/// The alternation constraint over the given simple node types:
/// `(forall A0 . !Q(A0)) & (forall A1 . !Q(A1))`, where `A0` is two simple
/// nodes and `A1` two multinodes, each pair with all four edges between and on
/// them. The quantifiers are split so that a graph without multinodes still
/// has its simple nodes checked.
pub fn alternation_constraint(simple_types: &BTreeSet<String>) -> Result<Condition> {
    let pair = |t: TypeSet| {
        TypedGraph::builder()
            .typed_node("x", t.clone())
            .typed_node("y", t)
            .edge("x", "y")
            .edge("y", "x")
            .edge("x", "x")
            .edge("y", "y")
            .build()
    };
    let mut d = Diagram::new().with_graph("A1", &pair(TypeSet::single(MULTINODE))?);
    let f = if simple_types.is_empty() {
        "forall A1 . !Q(A1)"
    } else {
        d = d.with_graph("A0", &pair(TypeSet::new(simple_types.iter().cloned())?)?);
        "(forall A0 . !Q(A0)) & (forall A1 . !Q(A1))"
    };
    Condition::constraint(d, Formula::parse(f)?)
}

fn simple_types(g: &TypedGraph) -> BTreeSet<String> {
    g.type_names()
        .into_iter()
        .filter(|t| t != MULTINODE)
        .collect()
}

/// Check the multidigraph constraint. The alternation part is evaluated as a
/// graph constraint; it needs two nodes of a kind, so loops on a lone node
/// are checked directly. The anchoring part is checked directly.
pub fn check_mc(g: &TypedGraph) -> Result<McReport> {
    let mut violations = Vec::new();
    let nodes = g.node_ids();
    for (a, b) in g.edge_list() {
        if is_multinode(g, &a) == is_multinode(g, &b) {
            violations.push(McViolation::SameKind(a, b));
        }
    }
    let loops = nodes.iter().any(|n| g.has_edge(n, n));
    let gc0 = !loops && satisfies(g, &alternation_constraint(&simple_types(g))?)?;
    let mut gc1 = true;
    for m in nodes.iter().filter(|n| is_multinode(g, n)) {
        let sources = nodes
            .iter()
            .filter(|s| !is_multinode(g, s) && g.has_edge(s, m))
            .count();
        let targets = nodes
            .iter()
            .filter(|t| !is_multinode(g, t) && g.has_edge(m, t))
            .count();
        if sources != 1 || targets != 1 {
            gc1 = false;
            violations.push(McViolation::Unanchored {
                multinode: m.clone(),
                sources,
                targets,
            });
        }
    }
    Ok(McReport {
        gc0,
        gc1,
        violations,
    })
}

/// A rule between multidigraphs; elements with the same id are preserved.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiRule {
    pub name: String,
    pub lhs: MultiGraph,
    pub rhs: MultiGraph,
}

/// The encoded rule with the alternation constraint as pre- and postcondition.
#[derive(Clone, Debug)]
pub struct LiftedRule {
    pub production: Production,
    pub pre: Condition,
    pub post: Condition,
}

pub fn lift_rule(rule: &MultiRule) -> Result<LiftedRule> {
    for (id, e) in &rule.lhs.edges {
        if rule.rhs.edges.get(id).is_some_and(|f| f != e) {
            return Err(Error::InvalidRule(format!(
                "edge {id} changes its endpoints"
            )));
        }
    }
    let l = encode(&rule.lhs)?;
    let r = encode(&rule.rhs)?;
    let production = Production::from_static(rule.name.clone(), &l, &r, &NodeMap::new())?;
    let mut types = simple_types(&l);
    types.extend(simple_types(&r));
    let mc = alternation_constraint(&types)?;
    let rules = [production.clone()];
    Ok(LiftedRule {
        pre: delocalize(&mc, &rules, 0, 0, Stage::Pre)?,
        post: delocalize(&mc, &rules, 1, 0, Stage::Post)?,
        production,
    })
}

/// The chain that lets `p` delete simple nodes of a multidigraph: the
/// Xi rule removes the edges of multinodes left hanging, the epsilon rule
/// removes those multinodes, then `p` runs. Rules are over host ids.
#[derive(Clone, Debug)]
pub struct XiExpansion {
    pub xi: Option<Production>,
    pub epsilon: Option<Production>,
    pub rule: Production,
    /// Application order: Xi, epsilon, the rule.
    pub sequence: CompletedSequence,
}

impl XiExpansion {
    pub fn apply(&self, g: &TypedGraph) -> Result<TypedGraph> {
        let exec = first_execution(&self.sequence, g)
            .ok_or_else(|| Error::InvalidMatch("the expanded chain does not apply".into()))?;
        Ok(exec.result().cloned().unwrap_or_else(|| g.clone()))
    }
}

/// Expand `p` at `m` (a total injective morphism `L -> g`, nihilation not
/// required). With `fused` the Xi rule is folded into the epsilon rule.
pub fn xi_expand(p: &Production, g: &TypedGraph, m: &Morphism, fused: bool) -> Result<XiExpansion> {
    m.validate(p.lhs(), g)?;
    let image = m.image();
    let deleted: BTreeSet<ElemId> = p
        .deleted_nodes()
        .iter()
        .map(|n| m.node_map()[n].clone())
        .collect();
    let mut hanging = BTreeSet::new();
    for n in &deleted {
        for x in g.node_ids() {
            if is_multinode(g, &x)
                && !image.contains(&x)
                && (g.has_edge(n, &x) || g.has_edge(&x, n))
            {
                hanging.insert(x);
            }
        }
    }
    let mut grounding = m.node_map().clone();
    for n in p.added_nodes() {
        let mut fresh = n.clone();
        while g.has_node(&fresh) {
            fresh = ElemId::new(format!("{fresh}'"));
        }
        grounding.insert(n, fresh);
    }
    let rule = p.rename(&grounding)?;

    let (xi, epsilon) = if hanging.is_empty() {
        (None, None)
    } else {
        let mut around = TypedGraph::builder();
        let mut bare = TypedGraph::builder();
        let mut ends = BTreeSet::new();
        let mut edges = Vec::new();
        for x in &hanging {
            for y in g.node_ids() {
                if g.has_edge(&y, x) {
                    edges.push((y.clone(), x.clone()));
                    ends.insert(y.clone());
                }
                if g.has_edge(x, &y) {
                    edges.push((x.clone(), y.clone()));
                    ends.insert(y);
                }
            }
        }
        for n in hanging
            .iter()
            .chain(ends.iter().filter(|e| !hanging.contains(*e)))
        {
            let t = g.types_of(n).expect("host node").clone();
            around = around.typed_node(n.clone(), t.clone());
            bare = bare.typed_node(n.clone(), t);
        }
        for (a, b) in &edges {
            around = around.edge(a.clone(), b.clone());
        }
        let around = around.build()?;
        let bare = bare.build()?;
        let survivors = |h: &TypedGraph| -> Result<TypedGraph> {
            let mut b = TypedGraph::builder();
            for n in h.node_ids().into_iter().filter(|n| !hanging.contains(n)) {
                b = b.typed_node(n.clone(), h.types_of(&n).expect("node").clone());
            }
            b.build()
        };
        let eps_name = format!("{}_eps", p.name());
        if fused {
            (
                None,
                Some(Production::from_static(
                    eps_name,
                    &around,
                    &survivors(&around)?,
                    &NodeMap::new(),
                )?),
            )
        } else {
            let xi = Production::from_static(
                format!("{}_xi", p.name()),
                &around,
                &bare,
                &NodeMap::new(),
            )?;
            let mut only = TypedGraph::builder();
            for n in &hanging {
                only = only.typed_node(n.clone(), g.types_of(n).expect("node").clone());
            }
            let eps = Production::from_static(
                eps_name,
                &only.build()?,
                &TypedGraph::empty(),
                &NodeMap::new(),
            )?;
            (Some(xi), Some(eps))
        }
    };

    let mut rules: Vec<Production> = xi.iter().chain(epsilon.iter()).cloned().collect();
    rules.push(rule.clone());
    let pins: NodeMap = rules
        .iter()
        .flat_map(|r| r.lhs().node_ids())
        .map(|n| (n.clone(), n))
        .collect();
    let sequence = CompletedSequence::new(rules)?.with_pins(pins);
    Ok(XiExpansion {
        xi,
        epsilon,
        rule,
        sequence,
    })
}
