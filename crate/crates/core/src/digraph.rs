//! Typed simple digraphs `(M, V, λ)` with type-set typing.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{BoolMatrix, BoolVector, ElemId, Universe};

/// Non-empty set of admissible type names for a node. A fixed-type node is the
/// singleton case.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct TypeSet(BTreeSet<String>);

impl TypeSet {
    pub fn new<I, S>(types: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let set: BTreeSet<String> = types.into_iter().map(Into::into).collect();
        if set.is_empty() {
            return Err(Error::EmptyTypeSet);
        }
        Ok(TypeSet(set))
    }

    pub fn single(ty: impl Into<String>) -> Self {
        TypeSet(BTreeSet::from([ty.into()]))
    }

    pub fn types(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    pub fn contains(&self, ty: &str) -> bool {
        self.0.contains(ty)
    }

    pub fn is_fixed(&self) -> bool {
        self.0.len() == 1
    }

    pub fn intersects(&self, other: &TypeSet) -> bool {
        self.0.iter().any(|t| other.0.contains(t))
    }

    /// Intersection of two type sets; `None` when it would be empty.
    pub fn meet(&self, other: &TypeSet) -> Option<TypeSet> {
        let set: BTreeSet<String> = self.0.intersection(&other.0).cloned().collect();
        (!set.is_empty()).then_some(TypeSet(set))
    }
}

/// Meet of the types of two operated nodes; empty intersections are refused.
pub fn type_meet(id: &ElemId, a: &TypeSet, b: &TypeSet) -> Result<TypeSet> {
    a.meet(b).ok_or_else(|| Error::TypeClash(id.clone()))
}

impl TryFrom<Vec<String>> for TypeSet {
    type Error = Error;

    fn try_from(v: Vec<String>) -> Result<Self> {
        TypeSet::new(v)
    }
}

impl From<TypeSet> for Vec<String> {
    fn from(t: TypeSet) -> Self {
        t.0.into_iter().collect()
    }
}

impl fmt::Display for TypeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_fixed() {
            write!(f, "{}", self.0.iter().next().unwrap())
        } else {
            write!(
                f,
                "{{{}}}",
                self.0.iter().cloned().collect::<Vec<_>>().join(",")
            )
        }
    }
}

impl fmt::Debug for TypeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A typed simple digraph. Positions of the universe whose node bit is 0 are
/// absent nodes; they keep their typing so graphs can be completed against
/// each other.
#[derive(Clone, PartialEq, Eq)]
pub struct TypedGraph {
    edges: BoolMatrix,
    nodes: BoolVector,
    typing: BTreeMap<ElemId, TypeSet>,
}

impl TypedGraph {
    pub fn new(
        edges: BoolMatrix,
        nodes: BoolVector,
        typing: BTreeMap<ElemId, TypeSet>,
    ) -> Result<Self> {
        if edges.universe() != nodes.universe() {
            return Err(Error::UniverseMismatch);
        }
        for id in nodes.universe().ids() {
            if !typing.contains_key(id) {
                return Err(Error::UnknownElement(id.clone()));
            }
        }
        if typing.len() != nodes.universe().len() {
            let extra = typing
                .keys()
                .find(|k| !nodes.universe().contains(k))
                .cloned()
                .expect("typing has an extra key");
            return Err(Error::UnknownElement(extra));
        }
        Ok(TypedGraph {
            edges,
            nodes,
            typing,
        })
    }

    pub fn empty() -> Self {
        let u = Universe::empty();
        TypedGraph {
            edges: BoolMatrix::zeros(&u),
            nodes: BoolVector::zeros(&u),
            typing: BTreeMap::new(),
        }
    }

    pub fn builder() -> GraphBuilder {
        GraphBuilder::default()
    }

    pub fn universe(&self) -> &Universe {
        self.nodes.universe()
    }

    pub fn edges(&self) -> &BoolMatrix {
        &self.edges
    }

    pub fn nodes(&self) -> &BoolVector {
        &self.nodes
    }

    pub fn typing(&self) -> &BTreeMap<ElemId, TypeSet> {
        &self.typing
    }

    pub fn types_of(&self, id: &ElemId) -> Option<&TypeSet> {
        self.typing.get(id)
    }

    /// Present node ids in universe order.
    pub fn node_ids(&self) -> Vec<ElemId> {
        self.nodes.support()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.bits().iter().filter(|b| **b).count()
    }

    pub fn has_node(&self, id: &ElemId) -> bool {
        self.nodes.get_id(id)
    }

    pub fn has_edge(&self, from: &ElemId, to: &ElemId) -> bool {
        self.edges.get_ids(from, to)
    }

    pub fn edge_list(&self) -> Vec<(ElemId, ElemId)> {
        self.edges.entries()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.count_ones()
    }

    /// No dangling edges: `||(M | M^t) (.) !V||_1 = 0`.
    pub fn compatible(&self) -> bool {
        let sym = self
            .edges
            .or(&self.edges.transpose())
            .expect("same universe");
        !sym.bool_product(&self.nodes.not())
            .expect("same universe")
            .norm1()
    }

    /// Edges touching absent nodes.
    pub fn dangling_edges(&self) -> Vec<(ElemId, ElemId)> {
        self.edge_list()
            .into_iter()
            .filter(|(a, b)| !self.has_node(a) || !self.has_node(b))
            .collect()
    }

    /// Negation of the edge matrix; nodes and typing unchanged.
    pub fn complement_edges(&self) -> TypedGraph {
        TypedGraph {
            edges: self.edges.not(),
            nodes: self.nodes.clone(),
            typing: self.typing.clone(),
        }
    }

    pub fn with_edges(&self, edges: BoolMatrix) -> Result<TypedGraph> {
        TypedGraph::new(edges, self.nodes.clone(), self.typing.clone())
    }

    pub fn with_nodes(&self, nodes: BoolVector) -> Result<TypedGraph> {
        TypedGraph::new(self.edges.clone(), nodes, self.typing.clone())
    }

    /// Same graph with only the nodes (no edges).
    pub fn node_skeleton(&self) -> TypedGraph {
        TypedGraph {
            edges: BoolMatrix::zeros(self.universe()),
            nodes: self.nodes.clone(),
            typing: self.typing.clone(),
        }
    }

    /// Re-index onto a larger universe. Added positions are absent nodes; their
    /// types come from `types`.
    pub fn extend_to(
        &self,
        universe: &Universe,
        types: &BTreeMap<ElemId, TypeSet>,
    ) -> Result<TypedGraph> {
        if universe == self.universe() {
            return Ok(self.clone());
        }
        let mut typing = BTreeMap::new();
        for id in universe.ids() {
            let t = self
                .typing
                .get(id)
                .or_else(|| types.get(id))
                .ok_or_else(|| Error::UnknownElement(id.clone()))?;
            typing.insert(id.clone(), t.clone());
        }
        TypedGraph::new(
            self.edges.extend_to(universe)?,
            self.nodes.extend_to(universe)?,
            typing,
        )
    }

    /// Drop absent nodes from the universe (and any edges touching them).
    pub fn compact(&self) -> TypedGraph {
        let ids = self.node_ids();
        if ids.len() == self.universe().len() {
            return self.clone();
        }
        let universe = Universe::new(ids).expect("support is duplicate free");
        self.restrict_to(&universe)
    }

    /// Restrict to a sub-universe.
    pub fn restrict_to(&self, universe: &Universe) -> TypedGraph {
        TypedGraph {
            edges: self.edges.restrict_to(universe),
            nodes: self.nodes.restrict_to(universe),
            typing: universe
                .ids()
                .iter()
                .map(|id| (id.clone(), self.typing[id].clone()))
                .collect(),
        }
    }

    /// Rename node ids through `map`; ids not in the map are kept.
    pub fn rename(&self, map: &BTreeMap<ElemId, ElemId>) -> Result<TypedGraph> {
        let typing = self
            .typing
            .iter()
            .map(|(k, v)| (map.get(k).cloned().unwrap_or_else(|| k.clone()), v.clone()))
            .collect();
        TypedGraph::new(self.edges.rename(map)?, self.nodes.rename(map)?, typing)
    }

    /// Node-wise union of two graphs over the union universe. Shared ids must
    /// have intersecting types; the result carries the meet.
    pub fn union(&self, other: &TypedGraph) -> Result<TypedGraph> {
        let universe = self.universe().union(other.universe());
        let mut typing = BTreeMap::new();
        for id in universe.ids() {
            let t = match (self.typing.get(id), other.typing.get(id)) {
                (Some(a), Some(b)) => type_meet(id, a, b)?,
                (Some(a), None) | (None, Some(a)) => a.clone(),
                (None, None) => unreachable!("id from one of the universes"),
            };
            typing.insert(id.clone(), t);
        }
        let edges = self
            .edges
            .extend_to(&universe)?
            .or(&other.edges.extend_to(&universe)?)?;
        let nodes = self
            .nodes
            .extend_to(&universe)?
            .or(&other.nodes.extend_to(&universe)?)?;
        TypedGraph::new(edges, nodes, typing)
    }

    /// Types occurring in the graph (present nodes only).
    pub fn type_names(&self) -> BTreeSet<String> {
        self.node_ids()
            .iter()
            .flat_map(|id| {
                self.typing[id]
                    .types()
                    .map(str::to_owned)
                    .collect::<Vec<_>>()
            })
            .collect()
    }
}

impl fmt::Display for TypedGraph {
    /// Adjacency-list rendering: one `id:type -> succ, succ` line per present node.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for id in self.node_ids() {
            let succ: Vec<String> = self
                .universe()
                .ids()
                .iter()
                .filter(|t| self.has_edge(&id, t))
                .map(|t| t.to_string())
                .collect();
            writeln!(f, "{id}:{} -> [{}]", self.typing[&id], succ.join(", "))?;
        }
        let dangling = self.dangling_edges();
        if !dangling.is_empty() {
            let d: Vec<String> = dangling.iter().map(|(a, b)| format!("({a},{b})")).collect();
            writeln!(f, "dangling: {}", d.join(", "))?;
        }
        Ok(())
    }
}

impl fmt::Debug for TypedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "TypedGraph {{ ")?;
        for id in self.universe().ids() {
            let mark = if self.has_node(id) { "" } else { "~" };
            write!(f, "{mark}{id}:{} ", self.typing[id])?;
        }
        write!(f, "| ")?;
        for (a, b) in self.edge_list() {
            write!(f, "{a}->{b} ")?;
        }
        write!(f, "}}")
    }
}

/// Incremental construction of a [`TypedGraph`]; nodes keep insertion order.
#[derive(Default, Clone)]
pub struct GraphBuilder {
    nodes: Vec<(ElemId, TypeSet, bool)>,
    edges: Vec<(ElemId, ElemId)>,
}

impl GraphBuilder {
    pub fn node(self, id: impl Into<ElemId>, ty: &str) -> Self {
        self.typed_node(id, TypeSet::single(ty))
    }

    pub fn typed_node(mut self, id: impl Into<ElemId>, types: TypeSet) -> Self {
        self.nodes.push((id.into(), types, true));
        self
    }

    /// A universe position whose node bit is 0.
    pub fn absent_node(mut self, id: impl Into<ElemId>, ty: &str) -> Self {
        self.nodes.push((id.into(), TypeSet::single(ty), false));
        self
    }

    pub fn edge(mut self, from: impl Into<ElemId>, to: impl Into<ElemId>) -> Self {
        self.edges.push((from.into(), to.into()));
        self
    }

    pub fn build(self) -> Result<TypedGraph> {
        let universe = Universe::new(self.nodes.iter().map(|(id, _, _)| id.clone()).collect())?;
        let mut nodes = BoolVector::zeros(&universe);
        let mut typing = BTreeMap::new();
        for (i, (id, t, present)) in self.nodes.into_iter().enumerate() {
            nodes.set(i, present);
            typing.insert(id, t);
        }
        let mut edges = BoolMatrix::zeros(&universe);
        for (a, b) in &self.edges {
            edges.set_ids(a, b, true)?;
        }
        TypedGraph::new(edges, nodes, typing)
    }
}
