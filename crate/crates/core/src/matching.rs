//! Injective, type-compatible morphisms and exhaustive match search.
//!
//! Search order is deterministic: pattern nodes in universe order, candidate
//! host nodes in host universe order.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::digraph::{TypeSet, TypedGraph};
use crate::error::{Error, Result};
use crate::matrix::ElemId;
use crate::production::Production;

pub type NodeMap = BTreeMap<ElemId, ElemId>;

/// Partial injective map between graphs; the edge part is induced by the
/// node part (`f(n, m) = (f(n), f(m))`) for the source edges whose image exists.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Morphism {
    nodes: NodeMap,
    edges: BTreeMap<(ElemId, ElemId), (ElemId, ElemId)>,
}

impl Morphism {
    /// Induce the maximal edge map of `nodes` from `source` into `target`.
    pub fn induced(nodes: NodeMap, source: &TypedGraph, target: &TypedGraph) -> Morphism {
        let mut edges = BTreeMap::new();
        for (a, b) in source.edge_list() {
            if let (Some(fa), Some(fb)) = (nodes.get(&a), nodes.get(&b)) {
                if target.has_edge(fa, fb) {
                    edges.insert((a, b), (fa.clone(), fb.clone()));
                }
            }
        }
        Morphism { nodes, edges }
    }

    pub fn identity(g: &TypedGraph) -> Morphism {
        let nodes = g.node_ids().into_iter().map(|n| (n.clone(), n)).collect();
        Morphism::induced(nodes, g, g)
    }

    pub fn node_map(&self) -> &NodeMap {
        &self.nodes
    }

    pub fn edge_map(&self) -> &BTreeMap<(ElemId, ElemId), (ElemId, ElemId)> {
        &self.edges
    }

    pub fn apply(&self, id: &ElemId) -> Option<&ElemId> {
        self.nodes.get(id)
    }

    pub fn image(&self) -> BTreeSet<ElemId> {
        self.nodes.values().cloned().collect()
    }

    /// Every edge of `source` is mapped.
    pub fn is_total_on(&self, source: &TypedGraph) -> bool {
        source.node_ids().iter().all(|n| self.nodes.contains_key(n))
            && self.edges.len() == source.edge_count()
    }

    /// Injective, type compatible and consistent with both graphs.
    pub fn validate(&self, source: &TypedGraph, target: &TypedGraph) -> Result<()> {
        let mut seen = BTreeSet::new();
        for (s, t) in &self.nodes {
            let (Some(ts), Some(tt)) = (source.types_of(s), target.types_of(t)) else {
                return Err(Error::InvalidMatch(format!("{s} -> {t} leaves the graphs")));
            };
            if !source.has_node(s) || !target.has_node(t) {
                return Err(Error::InvalidMatch(format!(
                    "{s} -> {t} maps an absent node"
                )));
            }
            if !ts.intersects(tt) {
                return Err(Error::TypeClash(s.clone()));
            }
            if !seen.insert(t) {
                return Err(Error::InvalidMatch(format!("not injective at {t}")));
            }
        }
        for ((a, b), (fa, fb)) in &self.edges {
            if !source.has_edge(a, b)
                || !target.has_edge(fa, fb)
                || self.nodes.get(a) != Some(fa)
                || self.nodes.get(b) != Some(fb)
            {
                return Err(Error::InvalidMatch(format!(
                    "edge ({a},{b}) is not preserved"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Morphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .nodes
            .iter()
            .map(|(a, b)| format!("{a}->{b}"))
            .collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

impl fmt::Display for Morphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Constraints for the backtracking search of injective node maps.
#[derive(Clone, Default)]
pub struct Search {
    /// Pattern nodes in search order with their admissible types.
    pub pattern: Vec<(ElemId, TypeSet)>,
    /// Pattern nodes whose image is already decided.
    pub fixed: NodeMap,
    /// Host nodes no pattern node may use.
    pub avoid: BTreeSet<ElemId>,
    /// Per pattern node, additional host nodes it must not use.
    pub avoid_for: BTreeMap<ElemId, BTreeSet<ElemId>>,
    /// Edges whose image must be present in the host.
    pub required: Vec<(ElemId, ElemId)>,
    /// Edges whose image must be absent from the host (complement matching).
    pub forbidden: Vec<(ElemId, ElemId)>,
}

impl Search {
    pub fn over(pattern: &TypedGraph) -> Search {
        Search {
            pattern: pattern
                .node_ids()
                .into_iter()
                .map(|n| {
                    let t = pattern.types_of(&n).expect("typed").clone();
                    (n, t)
                })
                .collect(),
            ..Search::default()
        }
    }

    /// Enumerate all admissible maps; `visit` returns `false` to stop early.
    pub fn run(&self, host: &TypedGraph, visit: &mut dyn FnMut(&NodeMap) -> bool) {
        let hosts: Vec<ElemId> = host.node_ids();
        let position: BTreeMap<&ElemId, usize> = self
            .pattern
            .iter()
            .enumerate()
            .map(|(i, (id, _))| (id, i))
            .collect();
        // edge constraints are checked once both endpoints are assigned
        let mut checks: Vec<Vec<(usize, usize, bool)>> = vec![Vec::new(); self.pattern.len()];
        for (edges, want) in [(&self.required, true), (&self.forbidden, false)] {
            for (a, b) in edges {
                if let (Some(&i), Some(&j)) = (position.get(a), position.get(b)) {
                    checks[i.max(j)].push((i, j, want));
                }
            }
        }
        let mut assigned: Vec<Option<ElemId>> = vec![None; self.pattern.len()];
        let mut used: BTreeSet<ElemId> = BTreeSet::new();
        self.step(0, host, &hosts, &checks, &mut assigned, &mut used, visit);
    }

    #[allow(clippy::too_many_arguments)]
    fn step(
        &self,
        k: usize,
        host: &TypedGraph,
        hosts: &[ElemId],
        checks: &[Vec<(usize, usize, bool)>],
        assigned: &mut Vec<Option<ElemId>>,
        used: &mut BTreeSet<ElemId>,
        visit: &mut dyn FnMut(&NodeMap) -> bool,
    ) -> bool {
        if k == self.pattern.len() {
            let map: NodeMap = self
                .pattern
                .iter()
                .zip(assigned.iter())
                .map(|((p, _), h)| (p.clone(), h.clone().expect("assigned")))
                .collect();
            return visit(&map);
        }
        let (pid, types) = &self.pattern[k];
        let own = self.avoid_for.get(pid);
        let allowed = |h: &ElemId| !self.avoid.contains(h) && !own.is_some_and(|a| a.contains(h));
        let candidates: Vec<&ElemId> = match self.fixed.get(pid) {
            Some(h) => vec![h],
            None => hosts.iter().collect(),
        };
        let candidates: Vec<&ElemId> = candidates.into_iter().filter(|h| allowed(h)).collect();
        for h in candidates {
            if used.contains(h) || !host.has_node(h) {
                continue;
            }
            if !host.types_of(h).is_some_and(|t| t.intersects(types)) {
                continue;
            }
            assigned[k] = Some(h.clone());
            let ok = checks[k].iter().all(|&(i, j, want)| {
                let (a, b) = (assigned[i].as_ref().unwrap(), assigned[j].as_ref().unwrap());
                host.has_edge(a, b) == want
            });
            if ok {
                used.insert(h.clone());
                let go_on = self.step(k + 1, host, hosts, checks, assigned, used, visit);
                used.remove(h);
                if !go_on {
                    assigned[k] = None;
                    return false;
                }
            }
            assigned[k] = None;
        }
        true
    }

    pub fn all(&self, host: &TypedGraph) -> Vec<NodeMap> {
        let mut out = Vec::new();
        self.run(host, &mut |m| {
            out.push(m.clone());
            true
        });
        out
    }
}

/// Maximal partial morphisms defined on every node of `a`, edges mapped
/// wherever possible. A node-less `a` has exactly one (vacuous) morphism.
pub fn par_max(a: &TypedGraph, g: &TypedGraph) -> Vec<Morphism> {
    Search::over(a)
        .all(g)
        .into_iter()
        .map(|m| Morphism::induced(m, a, g))
        .collect()
}

/// The total morphisms among [`par_max`].
pub fn tot(a: &TypedGraph, g: &TypedGraph) -> Vec<Morphism> {
    let mut search = Search::over(a);
    search.required = a.edge_list();
    search
        .all(g)
        .into_iter()
        .map(|m| Morphism::induced(m, a, g))
        .collect()
}

/// Isomorphisms from `a` onto `b`.
pub fn iso(a: &TypedGraph, b: &TypedGraph) -> Vec<Morphism> {
    if a.node_count() != b.node_count() || a.edge_count() != b.edge_count() {
        return Vec::new();
    }
    tot(a, b)
}

/// All matches of `p` in `g`: total injective `m_L` whose node assignment also
/// places every nihilation edge inside the complement of `g`.
pub fn find_matches(p: &Production, g: &TypedGraph) -> Vec<Morphism> {
    let lhs = p.lhs();
    match_search(p)
        .all(g)
        .into_iter()
        .map(|m| Morphism::induced(m, lhs, g))
        .collect()
}

/// The search behind [`find_matches`], open to further constraints.
pub fn match_search(p: &Production) -> Search {
    let mut search = Search::over(p.lhs());
    search.required = p.lhs().edge_list();
    search.forbidden = p.nihil().edge_list();
    search
}

/// Is `m` a match of `p` in `g`?
pub fn is_match(p: &Production, g: &TypedGraph, m: &Morphism) -> bool {
    let mut search = match_search(p);
    search.fixed = m.node_map().clone();
    m.node_map().len() == p.lhs().node_count()
        && m.node_map().keys().all(|n| p.lhs().has_node(n))
        && !search.all(g).is_empty()
}
