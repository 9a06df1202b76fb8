//! Productions `p = (L, R)` with erasing/restock matrices `e = L!R`,
//! `r = R!L` and nihilation matrix `K`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::digraph::{type_meet, TypeSet, TypedGraph};
use crate::error::{Error, Result};
use crate::matching::{is_match, Morphism, NodeMap};
use crate::matrix::{BoolMatrix, BoolVector, ElemId, Universe};

/// Edge and node part of `e` or `r`.
#[derive(Clone, PartialEq, Eq)]
pub struct Delta {
    pub edges: BoolMatrix,
    pub nodes: BoolVector,
}

impl Delta {
    pub fn is_zero(&self) -> bool {
        self.edges.is_zero() && self.nodes.is_zero()
    }
}

impl fmt::Debug for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "E={:?} V={:?}", self.edges, self.nodes)
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct Production {
    name: String,
    lhs: TypedGraph,
    rhs: TypedGraph,
    erase: Delta,
    restock: Delta,
    nihil: TypedGraph,
}

/// `D^bar`: edges with at least one endpoint deleted by the rule.
fn incident_to(nodes: &BoolVector) -> BoolMatrix {
    let keep = nodes.not();
    keep.tensor(&keep).expect("same universe").not()
}

fn delta(a: &TypedGraph, b: &TypedGraph) -> Delta {
    Delta {
        edges: a.edges().minus(b.edges()).expect("common universe"),
        nodes: a.nodes().and(&b.nodes().not()).expect("common universe"),
    }
}

impl Production {
    /// Build a rule from its left and right hand sides. `identification` maps
    /// ids of `rhs` onto ids of `lhs`; other ids are matched by name.
    pub fn from_static(
        name: impl Into<String>,
        lhs: &TypedGraph,
        rhs: &TypedGraph,
        identification: &NodeMap,
    ) -> Result<Production> {
        Production::with_nihil(name, lhs, rhs, identification, None)
    }

    /// As [`Production::from_static`], with extra forbidden edges `extra`
    /// (over ids of `lhs`) added to the derived nihilation matrix.
    pub fn with_nihil(
        name: impl Into<String>,
        lhs: &TypedGraph,
        rhs: &TypedGraph,
        identification: &NodeMap,
        extra: Option<&[(ElemId, ElemId)]>,
    ) -> Result<Production> {
        let name = name.into();
        let lhs = lhs.compact();
        let rhs = rhs.compact().rename(identification)?;
        for (g, side) in [(&lhs, "left"), (&rhs, "right")] {
            if !g.compatible() {
                return Err(Error::InvalidRule(format!(
                    "{side} hand side of {name} has dangling edges"
                )));
            }
        }
        let universe = lhs.universe().union(rhs.universe());
        let mut typing = BTreeMap::new();
        for id in universe.ids() {
            let t = match (lhs.types_of(id), rhs.types_of(id)) {
                (Some(a), Some(b)) => type_meet(id, a, b)?,
                (Some(a), None) | (None, Some(a)) => a.clone(),
                (None, None) => unreachable!(),
            };
            typing.insert(id.clone(), t);
        }
        let lhs = align(&lhs, &universe, &typing)?;
        let rhs = align(&rhs, &universe, &typing)?;
        let erase = delta(&lhs, &rhs);
        let restock = delta(&rhs, &lhs);
        let mut k = restock
            .edges
            .or(&erase.edges.not().and(&incident_to(&erase.nodes))?)?;
        if let Some(extra) = extra {
            for (a, b) in extra {
                if lhs.has_edge(a, b) {
                    return Err(Error::InvalidRule(format!(
                        "({a},{b}) is both required and forbidden"
                    )));
                }
                if !lhs.has_node(a) || !lhs.has_node(b) {
                    return Err(Error::InvalidRule(format!(
                        "forbidden edge ({a},{b}) leaves the left hand side"
                    )));
                }
                k.set_ids(a, b, true)?;
            }
        }
        let nihil = TypedGraph::new(k, lhs.nodes().clone(), typing)?;
        Ok(Production {
            name,
            lhs,
            rhs,
            erase,
            restock,
            nihil,
        })
    }

    /// The rule `id_A`: preserves `a`, forbids `forbidden`.
    pub fn identity(
        name: impl Into<String>,
        a: &TypedGraph,
        forbidden: &[(ElemId, ElemId)],
    ) -> Result<Production> {
        Production::with_nihil(name, a, a, &NodeMap::new(), Some(forbidden))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Production {
        self.name = name.into();
        self
    }

    pub fn universe(&self) -> &Universe {
        self.lhs.universe()
    }

    pub fn lhs(&self) -> &TypedGraph {
        &self.lhs
    }

    pub fn rhs(&self) -> &TypedGraph {
        &self.rhs
    }

    pub fn erase(&self) -> &Delta {
        &self.erase
    }

    pub fn restock(&self) -> &Delta {
        &self.restock
    }

    /// Nihilation graph `K`: nodes of `L`, edges that must be absent.
    pub fn nihil(&self) -> &TypedGraph {
        &self.nihil
    }

    pub fn typing(&self) -> &BTreeMap<ElemId, TypeSet> {
        self.lhs.typing()
    }

    /// Types of the nodes the rule creates.
    pub fn added_node_types(&self) -> BTreeMap<ElemId, TypeSet> {
        self.restock
            .nodes
            .support()
            .into_iter()
            .map(|n| {
                let t = self.typing()[&n].clone();
                (n, t)
            })
            .collect()
    }

    pub fn deleted_nodes(&self) -> Vec<ElemId> {
        self.erase.nodes.support()
    }

    pub fn added_nodes(&self) -> Vec<ElemId> {
        self.restock.nodes.support()
    }

    /// Nodes of `L` that survive.
    pub fn preserved_nodes(&self) -> Vec<ElemId> {
        self.lhs
            .node_ids()
            .into_iter()
            .filter(|n| !self.erase.nodes.get_id(n))
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.universe().is_empty()
    }

    /// Recompute the derived matrices and compare with the stored ones.
    pub fn check_invariants(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidRule(format!("{}: {what}", self.name)));
        if delta(&self.lhs, &self.rhs) != self.erase || delta(&self.rhs, &self.lhs) != self.restock
        {
            return bad("e or r does not match L and R");
        }
        if !self.erase.edges.and(&self.restock.edges)?.is_zero()
            || !self.erase.nodes.and(&self.restock.nodes)?.is_zero()
        {
            return bad("e and r overlap");
        }
        let r = self
            .restock
            .edges
            .or(&self.erase.edges.not().and(self.lhs.edges())?)?;
        if &r != self.rhs.edges() {
            return bad("R != r | !e L");
        }
        let derived = self.restock.edges.or(&self
            .erase
            .edges
            .not()
            .and(&incident_to(&self.erase.nodes))?)?;
        if !derived.is_subset_of(self.nihil.edges())? {
            return bad("K misses derived forbidden edges");
        }
        Ok(())
    }

    /// `p^-1`: swaps the sides; its nihilation is `Q = e | !r K`.
    pub fn invert(&self) -> Production {
        let q = self
            .erase
            .edges
            .or(&self
                .restock
                .edges
                .not()
                .and(self.nihil.edges())
                .expect("common universe"))
            .expect("common universe");
        let name = match self.name.strip_suffix("^-1") {
            Some(base) => base.to_owned(),
            None => format!("{}^-1", self.name),
        };
        Production {
            name,
            lhs: self.rhs.clone(),
            rhs: self.lhs.clone(),
            erase: self.restock.clone(),
            restock: self.erase.clone(),
            nihil: TypedGraph::new(q, self.rhs.nodes().clone(), self.typing().clone())
                .expect("common universe"),
        }
    }

    /// Rename node ids; the map must be injective on the rule's universe.
    pub fn rename(&self, map: &NodeMap) -> Result<Production> {
        Ok(Production {
            name: self.name.clone(),
            lhs: self.lhs.rename(map)?,
            rhs: self.rhs.rename(map)?,
            erase: Delta {
                edges: self.erase.edges.rename(map)?,
                nodes: self.erase.nodes.rename(map)?,
            },
            restock: Delta {
                edges: self.restock.edges.rename(map)?,
                nodes: self.restock.nodes.rename(map)?,
            },
            nihil: self.nihil.rename(map)?,
        })
    }

    /// Apply at match `m` (node map from `L` into `g`).
    pub fn apply(&self, g: &TypedGraph, m: &Morphism) -> Result<DerivationResult> {
        if !is_match(self, g, m) {
            return Err(Error::InvalidMatch(format!(
                "{m} is not a match of {} in the host",
                self.name
            )));
        }
        let mut map = m.node_map().clone();
        let mut created = BTreeMap::new();
        let mut taken: BTreeSet<ElemId> = g.universe().ids().iter().cloned().collect();
        for n in self.added_nodes() {
            let fresh = fresh_id(&format!("{}.{}", self.name, n), &taken);
            taken.insert(fresh.clone());
            created.insert(n.clone(), fresh.clone());
            map.insert(n, fresh);
        }
        let mut fresh_ids = g.universe().ids().to_vec();
        fresh_ids.extend(created.values().cloned());
        let universe = Universe::new(fresh_ids)?;
        let mut typing = g.typing().clone();
        for (n, h) in &created {
            typing.insert(h.clone(), self.typing()[n].clone());
        }
        let lift_m =
            |x: &BoolMatrix| -> Result<BoolMatrix> { x.rename(&map)?.extend_to(&universe) };
        let lift_v =
            |x: &BoolVector| -> Result<BoolVector> { x.rename(&map)?.extend_to(&universe) };
        let g_ext = g.extend_to(&universe, &typing)?;
        let e_edges = lift_m(&self.erase.edges)?;
        let e_nodes = lift_v(&self.erase.nodes)?;
        let edges = lift_m(&self.restock.edges)?.or(&e_edges.not().and(g_ext.edges())?)?;
        let nodes = lift_v(&self.restock.nodes)?.or(&e_nodes.not().and(g_ext.nodes())?)?;
        let h = TypedGraph::new(edges, nodes, typing)?;
        let dangling = h.dangling_edges();
        if !dangling.is_empty() {
            return Err(Error::DanglingEdges(dangling));
        }
        Ok(DerivationResult {
            before: g.clone(),
            after: h.compact(),
            matched: m.clone(),
            created,
            epsilon: Vec::new(),
        })
    }

    /// Apply after first removing, with `p_eps`, the edges that would dangle.
    pub fn apply_with_epsilon(&self, g: &TypedGraph, m: &Morphism) -> Result<DerivationResult> {
        let exp = epsilon_expand(self, g, m)?;
        if exp.epsilon.is_empty() {
            return self.apply(g, m);
        }
        let mid = exp.epsilon.apply(g, &exp.epsilon_match)?.after;
        let mut out = self.apply(&mid, m)?;
        out.before = g.clone();
        out.epsilon = vec![exp.epsilon];
        Ok(out)
    }
}

/// Re-index a compacted graph onto the rule universe, typing by `typing`.
fn align(
    g: &TypedGraph,
    universe: &Universe,
    typing: &BTreeMap<ElemId, TypeSet>,
) -> Result<TypedGraph> {
    let ext = g.extend_to(universe, typing)?;
    TypedGraph::new(ext.edges().clone(), ext.nodes().clone(), typing.clone())
}

fn fresh_id(base: &str, taken: &BTreeSet<ElemId>) -> ElemId {
    let id = ElemId::new(base);
    if !taken.contains(&id) {
        return id;
    }
    (2..)
        .map(|k| ElemId::new(format!("{base}#{k}")))
        .find(|c| !taken.contains(c))
        .expect("unbounded")
}

impl fmt::Display for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rule {}", self.name)?;
        writeln!(f, "L:")?;
        write!(f, "{}", self.lhs)?;
        writeln!(f, "R:")?;
        write!(f, "{}", self.rhs.compact())?;
        let k = self.nihil.edge_list();
        let k: Vec<String> = k.iter().map(|(a, b)| format!("({a},{b})")).collect();
        writeln!(f, "K: {}", k.join(" "))
    }
}

impl fmt::Debug for Production {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Production")
            .field("name", &self.name)
            .field("L", &self.lhs)
            .field("R", &self.rhs)
            .field("K", &self.nihil.edge_list())
            .finish()
    }
}

#[derive(Clone, Debug)]
pub struct DerivationResult {
    pub before: TypedGraph,
    pub after: TypedGraph,
    pub matched: Morphism,
    /// Rule node id -> fresh host id for every created node.
    pub created: NodeMap,
    /// Epsilon rules applied before the rule itself.
    pub epsilon: Vec<Production>,
}

impl DerivationResult {
    /// Node map of `R` into the result graph.
    pub fn comatch(&self, p: &Production) -> NodeMap {
        let mut map: NodeMap = p
            .preserved_nodes()
            .into_iter()
            .map(|n| {
                let h = self.matched.node_map()[&n].clone();
                (n, h)
            })
            .collect();
        map.extend(self.created.clone());
        map
    }
}

/// `p;p_eps`: `p_eps` is written in host ids and applied first, at
/// `epsilon_match` (the identity on its nodes).
#[derive(Clone, Debug)]
pub struct EpsilonExpansion {
    pub rule: Production,
    pub epsilon: Production,
    pub epsilon_match: Morphism,
}

/// Host edges incident to `m(deleted nodes)` that `p` does not delete.
pub fn dangling_at(p: &Production, g: &TypedGraph, m: &Morphism) -> Vec<(ElemId, ElemId)> {
    let doomed: BTreeSet<&ElemId> = p
        .deleted_nodes()
        .iter()
        .filter_map(|n| m.apply(n))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    let inverse: BTreeMap<&ElemId, &ElemId> = m.node_map().iter().map(|(a, b)| (b, a)).collect();
    g.edge_list()
        .into_iter()
        .filter(|(a, b)| doomed.contains(a) || doomed.contains(b))
        .filter(|(a, b)| match (inverse.get(a), inverse.get(b)) {
            (Some(x), Some(y)) => !p.erase().edges.get_ids(x, y),
            _ => true,
        })
        .collect()
}

pub fn epsilon_expand(p: &Production, g: &TypedGraph, m: &Morphism) -> Result<EpsilonExpansion> {
    if !is_match(p, g, m) {
        return Err(Error::InvalidMatch(format!(
            "{m} is not a match of {}",
            p.name()
        )));
    }
    let edges = dangling_at(p, g, m);
    let nodes: BTreeSet<ElemId> = edges
        .iter()
        .flat_map(|(a, b)| [a.clone(), b.clone()])
        .collect();
    let mut lhs = TypedGraph::builder();
    let mut rhs = TypedGraph::builder();
    for n in g.universe().ids().iter().filter(|n| nodes.contains(*n)) {
        let t = g.types_of(n).expect("host node").clone();
        lhs = lhs.typed_node(n.clone(), t.clone());
        rhs = rhs.typed_node(n.clone(), t);
    }
    for (a, b) in &edges {
        lhs = lhs.edge(a.clone(), b.clone());
    }
    let lhs = lhs.build()?;
    let epsilon = Production::from_static(
        format!("{}_eps", p.name()),
        &lhs,
        &rhs.build()?,
        &NodeMap::new(),
    )?;
    let epsilon_match = Morphism::induced(
        nodes.iter().map(|n| (n.clone(), n.clone())).collect(),
        &lhs,
        g,
    );
    Ok(EpsilonExpansion {
        rule: p.clone(),
        epsilon,
        epsilon_match,
    })
}

/// Marking: rename the listed `(rule index, node)` groups to one shared id per
/// group so that a joint match sends each group to a single host node.
pub fn mark(rules: &[Production], shared: &[Vec<(usize, ElemId)>]) -> Result<Vec<Production>> {
    let mut maps: Vec<NodeMap> = vec![NodeMap::new(); rules.len()];
    for (k, group) in shared.iter().enumerate() {
        let target = ElemId::new(format!("mu{k}"));
        let mut ty: Option<TypeSet> = None;
        for (i, n) in group {
            let rule = rules
                .get(*i)
                .ok_or_else(|| Error::UnknownElement(n.clone()))?;
            if !rule.lhs().has_node(n) {
                return Err(Error::UnknownElement(n.clone()));
            }
            let t = &rule.typing()[n];
            ty = Some(match ty {
                Some(prev) => type_meet(n, &prev, t)?,
                None => t.clone(),
            });
            maps[*i].insert(n.clone(), target.clone());
        }
    }
    rules
        .iter()
        .zip(&maps)
        .map(|(p, map)| {
            if let Some(clash) = map
                .values()
                .find(|t| p.universe().contains(t) && !map.contains_key(*t))
            {
                return Err(Error::DuplicateElement((*clash).clone()));
            }
            p.rename(map)
        })
        .collect()
}
