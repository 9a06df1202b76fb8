//! Completed sequences: coherence, compatibility, minimal and negative
//! initial digraphs, G-congruence and concrete applicability.
//!
//! Rules are stored in application order (`rules[0]` is applied first) over a
//! shared namespace of global node ids: equal ids denote the same host node.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::digraph::{type_meet, TypeSet, TypedGraph};
use crate::error::{Error, Result};
use crate::matching::{match_search, Morphism, NodeMap};
use crate::matrix::{BoolMatrix, BoolVector, ElemId, Universe};
use crate::production::{DerivationResult, Production};

/// Which distinct global ids may share a host node.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum Sharing {
    /// Distinct ids always denote distinct nodes.
    #[default]
    Explicit,
    /// Distinct ids of different rules may coincide unless listed as apart.
    Open { apart: BTreeSet<(ElemId, ElemId)> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompletedSequence {
    rules: Vec<Production>,
    typing: BTreeMap<ElemId, TypeSet>,
    universe: Universe,
    sharing: Sharing,
    pins: NodeMap,
}

impl CompletedSequence {
    /// Rules already written over shared global ids.
    pub fn new(rules: Vec<Production>) -> Result<CompletedSequence> {
        let mut universe = Universe::empty();
        let mut typing: BTreeMap<ElemId, TypeSet> = BTreeMap::new();
        for p in &rules {
            universe = universe.union(p.universe());
            for (id, t) in p.typing() {
                let t = match typing.get(id) {
                    Some(prev) => type_meet(id, prev, t)?,
                    None => t.clone(),
                };
                typing.insert(id.clone(), t);
            }
        }
        Ok(CompletedSequence {
            rules,
            typing,
            universe,
            sharing: Sharing::Explicit,
            pins: NodeMap::new(),
        })
    }

    /// Rules in local ids plus identification groups of `(rule index, local id)`.
    /// A group takes the id of its first member; other ids of rule `i` become
    /// `r{i}.{local}`.
    pub fn identified(
        rules: &[Production],
        groups: &[Vec<(usize, ElemId)>],
    ) -> Result<CompletedSequence> {
        let mut maps: Vec<NodeMap> = vec![NodeMap::new(); rules.len()];
        let mut names = BTreeSet::new();
        for group in groups {
            let Some((_, first)) = group.first() else {
                continue;
            };
            if !names.insert(first.clone()) {
                return Err(Error::DuplicateElement(first.clone()));
            }
            for (i, n) in group {
                let rule = rules
                    .get(*i)
                    .ok_or_else(|| Error::UnknownElement(n.clone()))?;
                if !rule.universe().contains(n) {
                    return Err(Error::UnknownElement(n.clone()));
                }
                if maps[*i].insert(n.clone(), first.clone()).is_some() {
                    return Err(Error::DuplicateElement(n.clone()));
                }
            }
        }
        let mut renamed = Vec::new();
        for (i, p) in rules.iter().enumerate() {
            let map = &mut maps[i];
            for n in p.universe().ids() {
                if !map.contains_key(n) {
                    let global = ElemId::new(format!("r{i}.{n}"));
                    if names.contains(&global) {
                        return Err(Error::DuplicateElement(global));
                    }
                    map.insert(n.clone(), global);
                }
            }
            let targets: BTreeSet<&ElemId> = map.values().collect();
            if targets.len() != map.len() {
                return Err(Error::InvalidRule(format!(
                    "identification of rule {i} is not injective"
                )));
            }
            renamed.push(p.rename(map)?);
        }
        CompletedSequence::new(renamed)
    }

    pub fn with_sharing(mut self, sharing: Sharing) -> CompletedSequence {
        self.sharing = sharing;
        self
    }

    /// Fix global ids to host nodes for concrete execution.
    pub fn with_pins(mut self, pins: NodeMap) -> CompletedSequence {
        self.pins = pins;
        self
    }

    pub fn rules(&self) -> &[Production] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn typing(&self) -> &BTreeMap<ElemId, TypeSet> {
        &self.typing
    }

    pub fn sharing(&self) -> &Sharing {
        &self.sharing
    }

    pub fn pins(&self) -> &NodeMap {
        &self.pins
    }

    /// Rule names in application order.
    pub fn names(&self) -> Vec<&str> {
        self.rules.iter().map(|p| p.name()).collect()
    }

    pub fn analyze(&self) -> SequenceReport {
        Analysis::new(self).run()
    }

    /// Reorder the rules; `order[k]` is the old index of the new `k`-th rule.
    pub fn permuted(&self, order: &[usize]) -> Result<CompletedSequence> {
        let mut seen = BTreeSet::new();
        if order.len() != self.rules.len()
            || !order
                .iter()
                .all(|i| *i < self.rules.len() && seen.insert(*i))
        {
            return Err(Error::NotAPermutation);
        }
        let mut out = self.clone();
        out.rules = order.iter().map(|i| self.rules[*i].clone()).collect();
        Ok(out)
    }
}

impl fmt::Display for CompletedSequence {
    /// Written right to left: `p2;p1` applies `p1` first.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.rules.iter().rev().map(|p| p.name()).collect();
        write!(f, "{}", names.join(";"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    Unknown,
    Present,
    Absent,
}

/// A graph element: a node or an edge.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Element {
    Node(ElemId),
    Edge(ElemId, ElemId),
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Node(n) => write!(f, "{n}"),
            Element::Edge(a, b) => write!(f, "({a},{b})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConflictKind {
    /// A left-hand side element is absent at this point.
    MissingRequired,
    /// A nihilation edge is present at this point.
    ForbiddenPresent,
    /// The rule adds an edge or node that already exists.
    DoubleAdd,
    /// Deleting a node would leave this edge dangling.
    Dangling,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Conflict {
    /// Index (application order) of the rule that fails.
    pub rule: usize,
    pub element: Element,
    pub kind: ConflictKind,
}

#[derive(Clone, Debug)]
pub struct SequenceReport {
    pub coherent: bool,
    pub compatible: bool,
    /// First conflict per element.
    pub conflicts: Vec<Conflict>,
    pub mid: TypedGraph,
    pub nid: TypedGraph,
}

impl SequenceReport {
    pub fn applicable(&self) -> bool {
        self.coherent && self.compatible
    }

    /// Offending elements as a graph over the sequence universe.
    pub fn conflict_graph(&self, seq: &CompletedSequence) -> TypedGraph {
        let u = seq.universe();
        let mut edges = BoolMatrix::zeros(u);
        let mut nodes = BoolVector::zeros(u);
        for c in &self.conflicts {
            match &c.element {
                Element::Node(n) => nodes.set_id(n, true).expect("in universe"),
                Element::Edge(a, b) => edges.set_ids(a, b, true).expect("in universe"),
            }
        }
        TypedGraph::new(edges, nodes, seq.typing().clone()).expect("same universe")
    }
}

struct Analysis<'a> {
    seq: &'a CompletedSequence,
    nodes: BTreeMap<ElemId, State>,
    edges: BTreeMap<(ElemId, ElemId), State>,
    created: BTreeSet<ElemId>,
    mid_nodes: BTreeSet<ElemId>,
    mid_edges: BTreeSet<(ElemId, ElemId)>,
    nid_edges: BTreeSet<(ElemId, ElemId)>,
    conflicts: BTreeMap<Element, Conflict>,
}

impl<'a> Analysis<'a> {
    fn new(seq: &'a CompletedSequence) -> Self {
        Analysis {
            seq,
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            created: BTreeSet::new(),
            mid_nodes: BTreeSet::new(),
            mid_edges: BTreeSet::new(),
            nid_edges: BTreeSet::new(),
            conflicts: BTreeMap::new(),
        }
    }

    fn node(&self, n: &ElemId) -> State {
        *self.nodes.get(n).unwrap_or(&State::Unknown)
    }

    fn edge(&self, a: &ElemId, b: &ElemId) -> State {
        *self
            .edges
            .get(&(a.clone(), b.clone()))
            .unwrap_or(&State::Unknown)
    }

    fn conflict(&mut self, rule: usize, element: Element, kind: ConflictKind) {
        self.conflicts.entry(element.clone()).or_insert(Conflict {
            rule,
            element,
            kind,
        });
    }

    fn set_edge(&mut self, a: &ElemId, b: &ElemId, s: State) {
        self.edges.insert((a.clone(), b.clone()), s);
    }

    fn step(&mut self, i: usize, p: &Production) {
        let lhs = p.lhs();
        for n in lhs.node_ids() {
            match self.node(&n) {
                State::Absent => {
                    self.conflict(i, Element::Node(n.clone()), ConflictKind::MissingRequired)
                }
                State::Unknown => {
                    self.mid_nodes.insert(n.clone());
                    self.nodes.insert(n, State::Present);
                }
                State::Present => {}
            }
        }
        for (a, b) in lhs.edge_list() {
            match self.edge(&a, &b) {
                State::Absent => self.conflict(
                    i,
                    Element::Edge(a.clone(), b.clone()),
                    ConflictKind::MissingRequired,
                ),
                State::Unknown => {
                    self.mid_edges.insert((a.clone(), b.clone()));
                    self.set_edge(&a, &b, State::Present);
                }
                State::Present => {}
            }
        }
        let added_edges = &p.restock().edges;
        for (a, b) in p.nihil().edge_list() {
            if !lhs.has_node(&a) || !lhs.has_node(&b) {
                continue;
            }
            match self.edge(&a, &b) {
                State::Present => {
                    let kind = if added_edges.get_ids(&a, &b) {
                        ConflictKind::DoubleAdd
                    } else {
                        ConflictKind::ForbiddenPresent
                    };
                    self.conflict(i, Element::Edge(a.clone(), b.clone()), kind);
                }
                State::Unknown => {
                    if !self.created.contains(&a) && !self.created.contains(&b) {
                        self.nid_edges.insert((a.clone(), b.clone()));
                    }
                    self.set_edge(&a, &b, State::Absent);
                }
                State::Absent => {}
            }
        }
        let all: Vec<ElemId> = self.seq.universe().ids().to_vec();
        for n in p.added_nodes() {
            if self.node(&n) != State::Unknown {
                self.conflict(i, Element::Node(n.clone()), ConflictKind::DoubleAdd);
            }
            self.created.insert(n.clone());
            for m in &all {
                self.set_edge(&n, m, State::Absent);
                self.set_edge(m, &n, State::Absent);
            }
        }
        let erased = &p.erase().edges;
        for d in p.deleted_nodes() {
            for m in &all {
                for (a, b) in [(&d, m), (m, &d)] {
                    if self.edge(a, b) == State::Present && !erased.get_ids(a, b) {
                        self.conflict(
                            i,
                            Element::Edge(a.clone(), b.clone()),
                            ConflictKind::Dangling,
                        );
                    }
                }
            }
        }
        for (a, b) in erased.entries() {
            self.set_edge(&a, &b, State::Absent);
        }
        for d in p.deleted_nodes() {
            for m in &all {
                self.set_edge(&d, m, State::Absent);
                self.set_edge(m, &d, State::Absent);
            }
            self.nodes.insert(d, State::Absent);
        }
        for n in p.added_nodes() {
            self.nodes.insert(n, State::Present);
        }
        for (a, b) in added_edges.entries() {
            self.set_edge(&a, &b, State::Present);
        }
    }

    fn run(mut self) -> SequenceReport {
        for (i, p) in self.seq.rules.iter().enumerate() {
            self.step(i, p);
        }
        let ids: Vec<ElemId> = self
            .seq
            .universe()
            .ids()
            .iter()
            .filter(|n| self.mid_nodes.contains(*n))
            .cloned()
            .collect();
        let u = Universe::new(ids).expect("subset of the universe");
        let typing: BTreeMap<ElemId, TypeSet> = u
            .ids()
            .iter()
            .map(|n| (n.clone(), self.seq.typing()[n].clone()))
            .collect();
        let graph = |edges: &BTreeSet<(ElemId, ElemId)>| {
            let mut m = BoolMatrix::zeros(&u);
            for (a, b) in edges {
                m.set_ids(a, b, true).expect("endpoints are initial nodes");
            }
            TypedGraph::new(m, BoolVector::ones(&u), typing.clone()).expect("same universe")
        };
        let mid = graph(&self.mid_edges);
        let nid = graph(&self.nid_edges);
        let conflicts: Vec<Conflict> = self.conflicts.into_values().collect();
        SequenceReport {
            coherent: conflicts.iter().all(|c| c.kind == ConflictKind::Dangling),
            compatible: conflicts.iter().all(|c| c.kind != ConflictKind::Dangling),
            conflicts,
            mid,
            nid,
        }
    }
}

/// Outcome of G-congruence: symmetric differences of MIDs and NIDs.
#[derive(Clone, Debug)]
pub struct Congruence {
    pub congruent: bool,
    pub delta_mid: TypedGraph,
    pub delta_nid: TypedGraph,
}

fn same_rules(s1: &CompletedSequence, s2: &CompletedSequence) -> bool {
    if s1.len() != s2.len() {
        return false;
    }
    let mut used = vec![false; s2.len()];
    s1.rules.iter().all(|p| {
        let hit = s2
            .rules
            .iter()
            .enumerate()
            .find(|(j, q)| !used[*j] && *q == p)
            .map(|(j, _)| j);
        hit.map(|j| used[j] = true).is_some()
    })
}

fn symmetric_difference(a: &TypedGraph, b: &TypedGraph) -> TypedGraph {
    let u = a.universe().union(b.universe());
    let mut typing = a.typing().clone();
    typing.extend(b.typing().iter().map(|(k, v)| (k.clone(), v.clone())));
    let a = a.extend_to(&u, &typing).expect("typed");
    let b = b.extend_to(&u, &typing).expect("typed");
    let xor_m = a
        .edges()
        .minus(b.edges())
        .unwrap()
        .or(&b.edges().minus(a.edges()).unwrap())
        .unwrap();
    let xor_v = a
        .nodes()
        .and(&b.nodes().not())
        .unwrap()
        .or(&b.nodes().and(&a.nodes().not()).unwrap())
        .unwrap();
    TypedGraph::new(xor_m, xor_v, typing).expect("same universe")
}

pub fn g_congruent(s1: &CompletedSequence, s2: &CompletedSequence) -> Result<Congruence> {
    if !same_rules(s1, s2) {
        return Err(Error::NotAPermutation);
    }
    let (r1, r2) = (s1.analyze(), s2.analyze());
    let delta_mid = symmetric_difference(&r1.mid, &r2.mid);
    let delta_nid = symmetric_difference(&r1.nid, &r2.nid);
    Ok(Congruence {
        congruent: delta_mid.edges().is_zero()
            && delta_mid.nodes().is_zero()
            && delta_nid.edges().is_zero(),
        delta_mid,
        delta_nid,
    })
}

pub fn sequentially_independent(s1: &CompletedSequence, s2: &CompletedSequence) -> Result<bool> {
    let c = g_congruent(s1, s2)?;
    Ok(c.congruent && s1.analyze().applicable() && s2.analyze().applicable())
}

/// A successful concrete run of a sequence.
#[derive(Clone, Debug)]
pub struct Execution {
    pub steps: Vec<DerivationResult>,
    /// Global id -> host node (created nodes included).
    pub assignment: NodeMap,
}

impl Execution {
    pub fn result(&self) -> Option<&TypedGraph> {
        self.steps.last().map(|s| &s.after)
    }
}

/// Search for executions of `s` on `g`; `visit` returns `false` to stop.
pub fn executions(
    s: &CompletedSequence,
    g: &TypedGraph,
    visit: &mut dyn FnMut(&Execution) -> bool,
) {
    let mut exec = Execution {
        steps: Vec::new(),
        assignment: s.pins.clone(),
    };
    run_from(s, 0, g, &mut exec, visit);
}

fn run_from(
    s: &CompletedSequence,
    i: usize,
    g: &TypedGraph,
    exec: &mut Execution,
    visit: &mut dyn FnMut(&Execution) -> bool,
) -> bool {
    if i == s.rules.len() {
        return visit(exec);
    }
    let p = &s.rules[i];
    let mut search = match_search(p);
    let mut dead = false;
    for n in p.lhs().node_ids() {
        if let Some(h) = exec.assignment.get(&n) {
            search.fixed.insert(n.clone(), h.clone());
        }
    }
    for n in p.added_nodes() {
        // a created id must be fresh unless pinned to the id it will receive
        if exec.assignment.contains_key(&n) && !s.pins.contains_key(&n) {
            dead = true;
        }
    }
    if dead {
        return true;
    }
    match &s.sharing {
        Sharing::Explicit => {
            search.avoid = exec
                .assignment
                .iter()
                .filter(|(k, _)| !p.lhs().has_node(k))
                .map(|(_, v)| v.clone())
                .collect();
        }
        Sharing::Open { apart } => {
            for (a, b) in apart {
                for (x, y) in [(a, b), (b, a)] {
                    if let Some(h) = exec.assignment.get(y) {
                        if p.lhs().has_node(x) {
                            search
                                .avoid_for
                                .entry(x.clone())
                                .or_default()
                                .insert(h.clone());
                        }
                    }
                }
            }
        }
    }
    let mut candidates = Vec::new();
    search.run(g, &mut |m| {
        candidates.push(m.clone());
        true
    });
    for m in candidates {
        let morphism = Morphism::induced(m.clone(), p.lhs(), g);
        let Ok(step) = p.apply(g, &morphism) else {
            continue;
        };
        if step
            .created
            .iter()
            .any(|(n, h)| s.pins.get(n).is_some_and(|pin| pin != h))
        {
            continue;
        }
        let saved = exec.assignment.clone();
        exec.assignment.extend(m);
        exec.assignment.extend(step.created.clone());
        let after = step.after.clone();
        exec.steps.push(step);
        let go_on = run_from(s, i + 1, &after, exec, visit);
        exec.steps.pop();
        exec.assignment = saved;
        if !go_on {
            return false;
        }
    }
    true
}

/// Some joint match applies every rule in order (no epsilon rules).
pub fn applicable(s: &CompletedSequence, g: &TypedGraph) -> bool {
    first_execution(s, g).is_some()
}

pub fn first_execution(s: &CompletedSequence, g: &TypedGraph) -> Option<Execution> {
    let mut found = None;
    executions(s, g, &mut |e| {
        found = Some(e.clone());
        false
    });
    found
}

/// Distinct assignments of the sequence's initial nodes that execute fully.
pub fn joint_matches(s: &CompletedSequence, g: &TypedGraph) -> Vec<NodeMap> {
    let initial: BTreeSet<ElemId> = s.analyze().mid.node_ids().into_iter().collect();
    let mut out = BTreeSet::new();
    executions(s, g, &mut |e| {
        out.insert(
            e.assignment
                .iter()
                .filter(|(k, _)| initial.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect::<NodeMap>(),
        );
        true
    });
    out.into_iter().collect()
}
