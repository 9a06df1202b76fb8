//! Satisfaction of conditions by a host graph.

use std::collections::{BTreeMap, BTreeSet};

use super::formula::{Atom, Formula, Pred};
use super::{Anchor, Condition, Variable};
use crate::digraph::TypedGraph;
use crate::error::{Error, Result};
use crate::matching::{find_matches, NodeMap, Search};
use crate::matrix::ElemId;

/// Does `g` satisfy `c`? For application conditions this asks for some
/// applicable match of the rule at which the condition holds.
pub fn satisfies(g: &TypedGraph, c: &Condition) -> Result<bool> {
    let ev = Evaluator { c };
    ev.eval(&c.formula, &mut BTreeMap::new(), g)
}

/// Evaluate an application condition at the match `m` of its rule.
pub fn satisfies_at(g: &TypedGraph, c: &Condition, m: &NodeMap) -> Result<bool> {
    satisfies(g, &c.pinned_at(m))
}

pub(crate) type Env = BTreeMap<String, NodeMap>;

pub(crate) struct Evaluator<'a> {
    pub c: &'a Condition,
}

/// A placement, and for the anchor of a postcondition the result graph.
pub(crate) struct Candidate {
    pub placement: NodeMap,
    pub host: Option<TypedGraph>,
    /// What a pin must hold to select this candidate: the match for anchors.
    pub pin: NodeMap,
}

impl Evaluator<'_> {
    fn eval(&self, f: &Formula, env: &mut Env, host: &TypedGraph) -> Result<bool> {
        Ok(match f {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => self.atom(a, env, host)?,
            Formula::Not(g) => !self.eval(g, env, host)?,
            Formula::And(gs) => {
                for g in gs {
                    if !self.eval(g, env, host)? {
                        return Ok(false);
                    }
                }
                true
            }
            Formula::Or(gs) => {
                for g in gs {
                    if self.eval(g, env, host)? {
                        return Ok(true);
                    }
                }
                false
            }
            Formula::Implies(a, b) => !self.eval(a, env, host)? || self.eval(b, env, host)?,
            Formula::Exists(v, body) | Formula::Forall(v, body) => {
                let universal = matches!(f, Formula::Forall(..));
                let saved = env.remove(v);
                let mut result = universal;
                for cand in self.candidates(v, env, host)? {
                    env.insert(v.clone(), cand.placement);
                    let inner = self.eval(body, env, cand.host.as_ref().unwrap_or(host))?;
                    if inner != universal {
                        result = inner;
                        break;
                    }
                }
                env.remove(v);
                if let Some(s) = saved {
                    env.insert(v.clone(), s);
                }
                result
            }
        })
    }

    fn atom(&self, a: &Atom, env: &Env, host: &TypedGraph) -> Result<bool> {
        let var = self.c.diagram.var(&a.var)?;
        let at = env
            .get(&a.var)
            .ok_or_else(|| Error::UnboundVariable(a.var.clone()))?;
        if a.pred == Pred::Q && var.edge_count() == 0 {
            return Err(Error::EdgelessQ(a.var.clone()));
        }
        Ok(match (a.pred, a.complement) {
            (Pred::P, false) => included(var, at, host, false),
            (Pred::P, true) => included(var, at, host, true),
            (Pred::Q, false) => !included(var, at, host, true),
            (Pred::Q, true) => !included(var, at, host, false),
        })
    }

    /// Placements of `v` given the bound variables in `env`.
    pub(crate) fn candidates(
        &self,
        v: &str,
        env: &Env,
        host: &TypedGraph,
    ) -> Result<Vec<Candidate>> {
        let var = self.c.diagram.var(v)?;
        if var.is_anchor() {
            return self.anchor_candidates(var, host);
        }
        let Some(search) = self.search_for(v, env)? else {
            return Ok(Vec::new());
        };
        Ok(search
            .all(host)
            .into_iter()
            .map(|placement| Candidate {
                pin: placement.clone(),
                placement,
                host: None,
            })
            .collect())
    }

    /// Search constraints for placing `v`; `None` when morphisms disagree.
    pub(crate) fn search_for(&self, v: &str, env: &Env) -> Result<Option<Search>> {
        let var = self.c.diagram.var(v)?;
        let mut search = Search::over(&var.graph());
        let fix = |n: &ElemId, h: &ElemId, search: &mut Search| -> bool {
            match search.fixed.get(n) {
                Some(prev) => prev == h,
                None => {
                    search.fixed.insert(n.clone(), h.clone());
                    true
                }
            }
        };
        if let Some(pin) = &var.pin {
            for (n, h) in pin {
                if !fix(n, h, &mut search) {
                    return Ok(None);
                }
            }
        }
        for d in self.c.diagram.morphisms_touching(v) {
            if d.from == d.to {
                continue;
            }
            if d.to == v {
                if let Some(at) = env.get(&d.from) {
                    for (a, b) in &d.map {
                        if let Some(h) = at.get(a) {
                            if !fix(b, h, &mut search) {
                                return Ok(None);
                            }
                        }
                    }
                    if self.c.diagram.vars[&d.from].is_anchor() {
                        let image: BTreeSet<ElemId> = at.values().cloned().collect();
                        let identified: BTreeSet<&ElemId> = d.map.values().collect();
                        for n in var.nodes.keys().filter(|n| !identified.contains(n)) {
                            search
                                .avoid_for
                                .entry(n.clone())
                                .or_default()
                                .extend(image.iter().cloned());
                        }
                    }
                }
            } else if let Some(at) = env.get(&d.to) {
                for (a, b) in &d.map {
                    if let Some(h) = at.get(b) {
                        if !fix(a, h, &mut search) {
                            return Ok(None);
                        }
                    }
                }
            }
        }
        Ok(Some(search))
    }

    fn anchor_candidates(&self, var: &Variable, host: &TypedGraph) -> Result<Vec<Candidate>> {
        let (p, post) = match &self.c.anchor {
            Anchor::Pre(p) => (p, false),
            Anchor::Post(p) => (p, true),
            Anchor::None => {
                return Err(Error::WrongShape(
                    "anchor variable in a graph constraint".into(),
                ))
            }
        };
        let mut out = Vec::new();
        for m in find_matches(p, host) {
            if var.pin.as_ref().is_some_and(|pin| pin != m.node_map()) {
                continue;
            }
            let Ok(step) = p.apply(host, &m) else {
                continue;
            };
            out.push(if post {
                Candidate {
                    placement: step.comatch(p),
                    host: Some(step.after),
                    pin: m.node_map().clone(),
                }
            } else {
                Candidate {
                    placement: m.node_map().clone(),
                    host: None,
                    pin: m.node_map().clone(),
                }
            });
        }
        Ok(out)
    }
}

/// `P(X, G)` (or `P(X, ~G)` when `complement`) at placement `at`.
pub(crate) fn included(var: &Variable, at: &NodeMap, host: &TypedGraph, complement: bool) -> bool {
    let edge = |(a, b): &(ElemId, ElemId)| host.has_edge(&at[a], &at[b]);
    let (present, absent) = if complement {
        (&var.nihil, &var.certain)
    } else {
        (&var.certain, &var.nihil)
    };
    present.iter().all(edge) && !absent.iter().any(edge)
}
