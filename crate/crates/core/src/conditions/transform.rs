//! Moving conditions across a rule: precondition to postcondition and back,
//! and delocalization of graph constraints.
//!
//! Every graph is first tied to the anchor: a graph without a morphism from
//! the anchor is split into one copy per way its nodes can meet the match.
//! On nodes identified with the left hand side, certainty evolves as
//! `C' = r | !e C` and nihil as `N' = e | !r N`; nodes the rule deletes are
//! dropped. Atoms that no match can satisfy become `false`, and graphs fully
//! covered by the anchor disappear.

use std::collections::{BTreeMap, BTreeSet};

use super::formula::{Atom, Formula, Pred};
use super::ops::normalize;
use super::{
    anchor_variable, Anchor, Condition, DiagramMorphism, Edge, Variable, POST_ANCHOR, PRE_ANCHOR,
};
use crate::error::{Error, Result};
use crate::matching::NodeMap;
use crate::matrix::ElemId;
use crate::production::Production;

/// Side of a rule a delocalized constraint is attached to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Pre,
    Post,
}

pub fn pre_to_post(c: &Condition) -> Result<Condition> {
    let Anchor::Pre(p) = &c.anchor else {
        return Err(Error::WrongShape("expected a precondition".into()));
    };
    advance(c, p)
}

/// Postcondition to precondition through the inverse rule.
pub fn post_to_pre(c: &Condition) -> Result<Condition> {
    let Anchor::Post(p) = &c.anchor else {
        return Err(Error::WrongShape("expected a postcondition".into()));
    };
    let inv = p.invert();
    let as_pre = reanchor(c, POST_ANCHOR, PRE_ANCHOR, Anchor::Pre(inv.clone()));
    let moved = advance(&as_pre, &inv)?;
    Ok(reanchor(
        &moved,
        POST_ANCHOR,
        PRE_ANCHOR,
        Anchor::Pre(p.clone()),
    ))
}

/// One round trip, pre to post to pre.
pub fn adapted_fixpoint(c: &Condition) -> Result<Condition> {
    post_to_pre(&pre_to_post(c)?)
}

/// Attach the graph constraint `gc`, meant to hold in the state before
/// `rules[state]`, to `rules[rule]` as a pre- or postcondition. The reachable
/// attachments are the two rules around the state, on either side.
pub fn delocalize(
    gc: &Condition,
    rules: &[Production],
    state: usize,
    rule: usize,
    stage: Stage,
) -> Result<Condition> {
    if gc.anchor != Anchor::None {
        return Err(Error::WrongShape(
            "delocalize expects a graph constraint".into(),
        ));
    }
    let get = |i: usize| {
        rules
            .get(i)
            .ok_or_else(|| Error::WrongShape(format!("no rule at position {i}")))
    };
    let pre = |i: usize| Condition::pre(get(i)?, gc.diagram.clone(), gc.formula.clone());
    let post = |i: usize| Condition::post(get(i)?, gc.diagram.clone(), gc.formula.clone());
    match (stage, rule) {
        (Stage::Pre, r) if r == state => pre(r),
        (Stage::Post, r) if r == state => pre_to_post(&pre(r)?),
        (Stage::Post, r) if r + 1 == state => post(r),
        (Stage::Pre, r) if r + 1 == state => post_to_pre(&post(r)?),
        _ => Err(Error::WrongShape(format!(
            "rule {rule} is not adjacent to state {state}"
        ))),
    }
}

fn reanchor(c: &Condition, from: &str, to: &str, anchor: Anchor) -> Condition {
    let f = |s: &str| {
        if s == from {
            to.to_owned()
        } else {
            s.to_owned()
        }
    };
    let mut diagram = c.diagram.rename_all(&f);
    diagram.vars.insert(to.to_owned(), anchor_variable(&anchor));
    Condition {
        diagram,
        formula: c
            .formula
            .rename_vars(&|s| (s == from).then(|| to.to_owned())),
        anchor,
    }
}

fn advance(c: &Condition, p: &Production) -> Result<Condition> {
    if c.diagram.vars.values().any(|v| v.pin.is_some()) {
        return Err(Error::WrongShape(
            "pinned graphs cannot be transformed".into(),
        ));
    }
    let mut c = normalize(c);
    let f = c.formula.clone();
    c.formula = to_host_form(&f, &mut c)?;
    let f = c.formula.clone();
    c.formula = split(&f, &mut c, &mut Vec::new())?;
    c.prune();

    let rule = RuleView::new(p);
    let mut evolved = BTreeMap::new();
    let mut contradictory = BTreeSet::new();
    let mut anchor_maps: BTreeMap<String, NodeMap> = BTreeMap::new();
    for (name, var) in c.diagram.vars.iter().filter(|(_, v)| !v.is_anchor()) {
        let iota: NodeMap = c
            .diagram
            .morphisms
            .iter()
            .filter(|d| d.from == PRE_ANCHOR && d.to == *name)
            .flat_map(|d| d.map.iter().map(|(l, v)| (v.clone(), l.clone())))
            .collect();
        let (next, bad) = rule.evolve(var, &iota);
        if bad {
            contradictory.insert(name.clone());
        }
        let kept: NodeMap = iota
            .iter()
            .filter(|(_, l)| !rule.deleted.contains(*l))
            .map(|(v, l)| (l.clone(), v.clone()))
            .collect();
        anchor_maps.insert(name.clone(), kept);
        evolved.insert(name.clone(), next);
    }

    let post_anchor = anchor_variable(&Anchor::Post(p.clone()));
    let mut diagram = c.diagram.clone();
    diagram.vars.remove(PRE_ANCHOR);
    diagram
        .vars
        .insert(POST_ANCHOR.to_owned(), post_anchor.clone());
    for (k, v) in &evolved {
        diagram.vars.insert(k.clone(), v.clone());
    }
    diagram.morphisms = c
        .diagram
        .morphisms
        .iter()
        .map(|d| {
            if d.from == PRE_ANCHOR {
                DiagramMorphism {
                    from: POST_ANCHOR.to_owned(),
                    to: d.to.clone(),
                    map: anchor_maps.get(&d.to).cloned().unwrap_or_default(),
                }
            } else {
                let alive = |var: &str, n: &ElemId| {
                    diagram
                        .vars
                        .get(var)
                        .is_some_and(|v| v.nodes.contains_key(n))
                };
                DiagramMorphism {
                    from: d.from.clone(),
                    to: d.to.clone(),
                    map: d
                        .map
                        .iter()
                        .filter(|(a, b)| alive(&d.from, a) && alive(&d.to, b))
                        .map(|(a, b)| (a.clone(), b.clone()))
                        .collect(),
                }
            }
        })
        .collect();

    let trivial: BTreeSet<String> = evolved
        .iter()
        .filter(|(name, var)| {
            let Some(map) = anchor_maps.get(*name) else {
                return false;
            };
            let back: NodeMap = map.iter().map(|(l, v)| (v.clone(), l.clone())).collect();
            let covered = |s: &BTreeSet<Edge>, within: &BTreeSet<Edge>| {
                s.iter()
                    .all(|(a, b)| within.contains(&(back[a].clone(), back[b].clone())))
            };
            !contradictory.contains(*name)
                && back.len() == var.nodes.len()
                && covered(&var.certain, &post_anchor.certain)
                && covered(&var.nihil, &post_anchor.nihil)
                && diagram
                    .morphisms
                    .iter()
                    .all(|d| (d.from != **name && d.to != **name) || d.from == POST_ANCHOR)
        })
        .map(|(k, _)| k.clone())
        .collect();

    let formula = c
        .formula
        .rename_vars(&|s| (s == PRE_ANCHOR).then(|| POST_ANCHOR.to_owned()));
    let formula = rewrite_atoms(&formula, &contradictory, &trivial).simplify();
    let mut out = Condition {
        diagram,
        formula,
        anchor: Anchor::Post(p.clone()),
    };
    out.prune();
    Ok(out)
}

/// Rewrite `Q` atoms and complement atoms into inclusions in the host:
/// `P(X, ~G)` becomes `P(X.n, G)` with `X.n` the swap of `X`.
fn to_host_form(f: &Formula, c: &mut Condition) -> Result<Formula> {
    let q_edges = |c: &Condition, v: &str| -> Result<()> {
        if c.diagram.var(v)?.edge_count() == 0 {
            return Err(Error::EdgelessQ(v.to_owned()));
        }
        Ok(())
    };
    Ok(match f {
        Formula::Atom(a) => match (a.pred, a.complement) {
            (Pred::P, false) => f.clone(),
            (Pred::P, true) => swapped(c, &a.var, false)?,
            (Pred::Q, false) => {
                q_edges(c, &a.var)?;
                swapped(c, &a.var, true)?
            }
            (Pred::Q, true) => {
                q_edges(c, &a.var)?;
                Formula::not(Formula::atom(a.var.clone()))
            }
        },
        Formula::Not(g) => match g.as_ref() {
            Formula::Atom(a) => match (a.pred, a.complement) {
                (Pred::P, false) => f.clone(),
                (Pred::P, true) => swapped(c, &a.var, true)?,
                (Pred::Q, false) => {
                    q_edges(c, &a.var)?;
                    swapped(c, &a.var, false)?
                }
                (Pred::Q, true) => {
                    q_edges(c, &a.var)?;
                    Formula::atom(a.var.clone())
                }
            },
            _ => {
                return Err(Error::WrongShape(
                    "negation above an atom after normalization".into(),
                ))
            }
        },
        Formula::And(gs) => Formula::And(
            gs.iter()
                .map(|g| to_host_form(g, c))
                .collect::<Result<_>>()?,
        ),
        Formula::Or(gs) => Formula::Or(
            gs.iter()
                .map(|g| to_host_form(g, c))
                .collect::<Result<_>>()?,
        ),
        Formula::Exists(v, b) => Formula::exists(v.clone(), to_host_form(b, c)?),
        Formula::Forall(v, b) => Formula::forall(v.clone(), to_host_form(b, c)?),
        _ => f.clone(),
    })
}

/// `exists X.n . P(X.n)` (negated inside when `negate`).
fn swapped(c: &mut Condition, v: &str, negate: bool) -> Result<Formula> {
    let var = c.diagram.var(v)?.clone();
    let name = format!("{v}.n");
    let identity: NodeMap = var.nodes.keys().map(|n| (n.clone(), n.clone())).collect();
    c.diagram.vars.insert(name.clone(), var.swapped());
    let via_anchor: Vec<DiagramMorphism> = c
        .diagram
        .morphisms
        .iter()
        .filter(|d| d.to == v && c.diagram.vars.get(&d.from).is_some_and(Variable::is_anchor))
        .map(|d| DiagramMorphism {
            to: name.clone(),
            ..d.clone()
        })
        .collect();
    c.diagram.morphisms.extend(via_anchor);
    c.diagram.morphisms.insert(DiagramMorphism {
        from: v.to_owned(),
        to: name.clone(),
        map: identity,
    });
    let atom = Formula::Atom(Atom::p(name.clone()));
    Ok(Formula::exists(
        name,
        if negate { Formula::not(atom) } else { atom },
    ))
}

/// Tie every graph to the anchor by enumerating how its free nodes meet the
/// anchor's nodes.
fn split(f: &Formula, c: &mut Condition, stack: &mut Vec<String>) -> Result<Formula> {
    Ok(match f {
        Formula::Exists(v, body) | Formula::Forall(v, body) => {
            let universal = matches!(f, Formula::Forall(..));
            let wrap = |name: String, b: Formula| {
                if universal {
                    Formula::forall(name, b)
                } else {
                    Formula::exists(name, b)
                }
            };
            let var = c.diagram.var(v)?.clone();
            if var.is_anchor() || c.diagram.is_anchored(v) {
                stack.push(v.clone());
                let inner = split(body, c, stack)?;
                stack.pop();
                return Ok(wrap(v.clone(), inner));
            }
            let variants = identifications(c, v, &var, stack);
            let mut parts = Vec::new();
            let several = variants.len() > 1;
            for (k, iota) in variants.into_iter().enumerate() {
                let (name, body) = if several {
                    let suffix = format!("'{}", k + 1);
                    let mut rename: BTreeMap<String, String> = BTreeMap::new();
                    rename.insert(v.clone(), format!("{v}{suffix}"));
                    for b in body.bound_vars() {
                        rename.insert(b.clone(), format!("{b}{suffix}"));
                    }
                    c.diagram.clone_vars(&rename);
                    (
                        rename[v].clone(),
                        body.rename_vars(&|x| rename.get(x).cloned()),
                    )
                } else {
                    (v.clone(), (**body).clone())
                };
                c.diagram.morphisms.insert(DiagramMorphism {
                    from: PRE_ANCHOR.to_owned(),
                    to: name.clone(),
                    map: iota.iter().map(|(x, l)| (l.clone(), x.clone())).collect(),
                });
                stack.push(name.clone());
                let inner = split(&body, c, stack)?;
                stack.pop();
                parts.push(wrap(name, inner));
            }
            if parts.len() == 1 {
                parts.pop().expect("one part")
            } else if universal {
                Formula::And(parts)
            } else {
                Formula::Or(parts)
            }
        }
        Formula::And(gs) => Formula::And(
            gs.iter()
                .map(|g| split(g, c, stack))
                .collect::<Result<_>>()?,
        ),
        Formula::Or(gs) => Formula::Or(
            gs.iter()
                .map(|g| split(g, c, stack))
                .collect::<Result<_>>()?,
        ),
        Formula::Not(g) => Formula::not(split(g, c, stack)?),
        _ => f.clone(),
    })
}

/// Partial injective maps from the nodes of `v` to anchor nodes that agree
/// with the morphisms between `v` and enclosing anchored graphs.
fn identifications(c: &Condition, v: &str, var: &Variable, stack: &[String]) -> Vec<NodeMap> {
    let anchor = &c.diagram.vars[PRE_ANCHOR];
    // forced[x] = Some(l): x sits on anchor node l; None: x avoids the anchor
    let mut forced: BTreeMap<ElemId, Option<ElemId>> = BTreeMap::new();
    let anchor_map = |w: &str| -> Option<NodeMap> {
        c.diagram
            .morphisms
            .iter()
            .find(|d| d.from == PRE_ANCHOR && d.to == w)
            .map(|d| d.map.iter().map(|(l, x)| (x.clone(), l.clone())).collect())
    };
    for w in stack.iter().filter(|w| w.as_str() != PRE_ANCHOR) {
        let Some(on_anchor) = anchor_map(w) else {
            continue;
        };
        for d in c
            .diagram
            .morphisms
            .iter()
            .filter(|d| (d.from == *w && d.to == v) || (d.from == v && d.to == *w))
        {
            for (a, b) in &d.map {
                let (mine, theirs) = if d.to == v { (b, a) } else { (a, b) };
                let want = on_anchor.get(theirs).cloned();
                if forced
                    .insert(mine.clone(), want.clone())
                    .is_some_and(|prev| prev != want)
                {
                    return Vec::new();
                }
            }
        }
    }
    let nodes: Vec<(&ElemId, _)> = var.nodes.iter().collect();
    let mut out = Vec::new();
    fn go(
        k: usize,
        nodes: &[(&ElemId, &crate::digraph::TypeSet)],
        anchor: &Variable,
        forced: &BTreeMap<ElemId, Option<ElemId>>,
        cur: &mut NodeMap,
        out: &mut Vec<NodeMap>,
    ) {
        if k == nodes.len() {
            out.push(cur.clone());
            return;
        }
        let (x, t) = nodes[k];
        let used: BTreeSet<ElemId> = cur.values().cloned().collect();
        let options: Vec<Option<ElemId>> = match forced.get(x) {
            Some(f) => vec![f.clone()],
            None => std::iter::once(None)
                .chain(
                    anchor
                        .nodes
                        .iter()
                        .filter(|(_, lt)| lt.intersects(t))
                        .map(|(l, _)| Some(l.clone())),
                )
                .collect(),
        };
        for o in options {
            match o {
                None => go(k + 1, nodes, anchor, forced, cur, out),
                Some(l) if !used.contains(&l) => {
                    cur.insert(x.clone(), l);
                    go(k + 1, nodes, anchor, forced, cur, out);
                    cur.remove(x);
                }
                Some(_) => {}
            }
        }
    }
    go(0, &nodes, anchor, &forced, &mut NodeMap::new(), &mut out);
    out
}

/// The parts of a rule the evolution of a graph depends on.
struct RuleView {
    lhs_edges: BTreeSet<Edge>,
    erase: BTreeSet<Edge>,
    restock: BTreeSet<Edge>,
    nihil: BTreeSet<Edge>,
    deleted: BTreeSet<ElemId>,
}

impl RuleView {
    fn new(p: &Production) -> RuleView {
        let erase: BTreeSet<Edge> = p.erase().edges.entries().into_iter().collect();
        let deleted: BTreeSet<ElemId> = p.deleted_nodes().into_iter().collect();
        let mut nihil: BTreeSet<Edge> = p.nihil().edge_list().into_iter().collect();
        // edges at a deleted node that the rule keeps would dangle; an inverse
        // rule's Q leaves these out although a created node has no others
        let lhs = p.lhs().node_ids();
        for n in &deleted {
            for x in &lhs {
                for e in [(n.clone(), x.clone()), (x.clone(), n.clone())] {
                    if !erase.contains(&e) {
                        nihil.insert(e);
                    }
                }
            }
        }
        RuleView {
            lhs_edges: p.lhs().edge_list().into_iter().collect(),
            erase,
            restock: p.restock().edges.entries().into_iter().collect(),
            nihil,
            deleted,
        }
    }

    /// State of the host pair `(a, b)` at any applicable match, when known.
    fn known(&self, a: Option<&ElemId>, b: Option<&ElemId>) -> Option<bool> {
        match (a, b) {
            (Some(x), Some(y)) => {
                let e = (x.clone(), y.clone());
                if self.lhs_edges.contains(&e) {
                    Some(true)
                } else if self.nihil.contains(&e) {
                    Some(false)
                } else {
                    None
                }
            }
            // an edge between a deleted node and the rest would dangle
            (Some(x), None) | (None, Some(x)) if self.deleted.contains(x) => Some(false),
            _ => None,
        }
    }

    /// Evolved graph, and whether its inclusion is impossible at any match.
    fn evolve(&self, var: &Variable, iota: &NodeMap) -> (Variable, bool) {
        let mut bad = false;
        for (set, want) in [(&var.certain, true), (&var.nihil, false)] {
            for (a, b) in set {
                if self
                    .known(iota.get(a), iota.get(b))
                    .is_some_and(|k| k != want)
                {
                    bad = true;
                }
            }
        }
        let gone = |x: &ElemId| iota.get(x).is_some_and(|l| self.deleted.contains(l));
        let kept: BTreeSet<&ElemId> = var.nodes.keys().filter(|x| !gone(x)).collect();
        let on_rule = |x: &ElemId| iota.contains_key(x) && !gone(x);
        let mut certain = BTreeSet::new();
        let mut nihil = BTreeSet::new();
        for (set, into_certain) in [(&var.certain, true), (&var.nihil, false)] {
            for (a, b) in set {
                if !kept.contains(a) || !kept.contains(b) {
                    continue;
                }
                if on_rule(a) && on_rule(b) {
                    let e = (iota[a].clone(), iota[b].clone());
                    // C' = r | !e C, N' = e | !r N
                    if into_certain && !self.erase.contains(&e) {
                        certain.insert((a.clone(), b.clone()));
                    }
                    if !into_certain && !self.restock.contains(&e) {
                        nihil.insert((a.clone(), b.clone()));
                    }
                } else if into_certain {
                    certain.insert((a.clone(), b.clone()));
                } else {
                    nihil.insert((a.clone(), b.clone()));
                }
            }
        }
        let on: Vec<&ElemId> = kept.iter().copied().filter(|x| on_rule(x)).collect();
        for a in &on {
            for b in &on {
                let e = (iota[*a].clone(), iota[*b].clone());
                if self.restock.contains(&e) {
                    certain.insert(((*a).clone(), (*b).clone()));
                }
                if self.erase.contains(&e) {
                    nihil.insert(((*a).clone(), (*b).clone()));
                }
            }
        }
        let next = Variable {
            nodes: var
                .nodes
                .iter()
                .filter(|(x, _)| kept.contains(x))
                .map(|(x, t)| (x.clone(), t.clone()))
                .collect(),
            certain,
            nihil,
            role: var.role,
            pin: None,
        };
        (next, bad)
    }
}

/// Inclusions of impossible graphs become `false`, of covered graphs `true`;
/// covered graphs lose their quantifier.
fn rewrite_atoms(
    f: &Formula,
    impossible: &BTreeSet<String>,
    covered: &BTreeSet<String>,
) -> Formula {
    match f {
        Formula::Atom(a) if a.pred == Pred::P && !a.complement => {
            if impossible.contains(&a.var) {
                Formula::False
            } else if covered.contains(&a.var) {
                Formula::True
            } else {
                f.clone()
            }
        }
        Formula::Not(g) => Formula::not(rewrite_atoms(g, impossible, covered)),
        Formula::And(gs) => Formula::And(
            gs.iter()
                .map(|g| rewrite_atoms(g, impossible, covered))
                .collect(),
        ),
        Formula::Or(gs) => Formula::Or(
            gs.iter()
                .map(|g| rewrite_atoms(g, impossible, covered))
                .collect(),
        ),
        Formula::Exists(v, b) | Formula::Forall(v, b) => {
            let inner = rewrite_atoms(b, impossible, covered);
            if covered.contains(v) {
                inner
            } else if matches!(f, Formula::Exists(..)) {
                Formula::exists(v.clone(), inner)
            } else {
                Formula::forall(v.clone(), inner)
            }
        }
        _ => f.clone(),
    }
}
