//! Closure, decomposition and NAC operators, and compilation of conditions
//! into sets of completed sequences.

use std::collections::{BTreeMap, BTreeSet};

use super::eval::{Env, Evaluator};
use super::formula::{Atom, Formula, Pred};
use super::{Anchor, Condition, DiagramMorphism, Variable};
use crate::digraph::TypedGraph;
use crate::error::{Error, Result};
use crate::matching::{Morphism, NodeMap};
use crate::matrix::ElemId;
use crate::production::Production;
use crate::sequence::{CompletedSequence, Sharing};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompileOptions {
    /// Maximum number of DNF branches.
    pub branch_cap: usize,
    /// Maximum number of replicas a single closure step may create.
    pub budget: Option<usize>,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            branch_cap: 4096,
            budget: None,
        }
    }
}

/// One disjunct of a compiled condition with its sequence.
#[derive(Clone, Debug)]
pub struct Branch {
    pub vars: BTreeSet<String>,
    pub literals: BTreeSet<Atom>,
    pub sequence: CompletedSequence,
}

/// Negation normal form with every variable bound once.
pub(crate) fn normalize(c: &Condition) -> Condition {
    let mut out = c.clone();
    let nnf = c.formula.nnf();
    out.formula = uniquify(&nnf, &mut BTreeSet::new(), &mut out);
    out.prune();
    out
}

fn uniquify(f: &Formula, seen: &mut BTreeSet<String>, c: &mut Condition) -> Formula {
    match f {
        Formula::Exists(v, body) | Formula::Forall(v, body) => {
            let (name, body) = if seen.contains(v) {
                let fresh = (1..)
                    .map(|k| format!("{v}'{k}"))
                    .find(|n| !seen.contains(n) && !c.diagram.vars.contains_key(n))
                    .expect("unbounded");
                c.diagram
                    .clone_vars(&BTreeMap::from([(v.clone(), fresh.clone())]));
                let renamed = body.rename_vars(&|x| (x == v).then(|| fresh.clone()));
                (fresh, renamed)
            } else {
                (v.clone(), (**body).clone())
            };
            seen.insert(name.clone());
            let inner = uniquify(&body, seen, c);
            if matches!(f, Formula::Exists(..)) {
                Formula::exists(name, inner)
            } else {
                Formula::forall(name, inner)
            }
        }
        Formula::And(gs) => Formula::And(gs.iter().map(|g| uniquify(g, seen, c)).collect()),
        Formula::Or(gs) => Formula::Or(gs.iter().map(|g| uniquify(g, seen, c)).collect()),
        Formula::Not(g) => Formula::not(uniquify(g, seen, c)),
        Formula::Implies(a, b) => Formula::implies(uniquify(a, seen, c), uniquify(b, seen, c)),
        _ => f.clone(),
    }
}

/// Enclosing binders of every bound variable.
pub(crate) fn ancestors(f: &Formula) -> BTreeMap<String, BTreeSet<String>> {
    fn go(f: &Formula, stack: &mut Vec<String>, out: &mut BTreeMap<String, BTreeSet<String>>) {
        match f {
            Formula::Exists(v, b) | Formula::Forall(v, b) => {
                out.entry(v.clone())
                    .or_default()
                    .extend(stack.iter().cloned());
                stack.push(v.clone());
                go(b, stack, out);
                stack.pop();
            }
            Formula::And(gs) | Formula::Or(gs) => gs.iter().for_each(|g| go(g, stack, out)),
            Formula::Not(g) => go(g, stack, out),
            Formula::Implies(a, b) => {
                go(a, stack, out);
                go(b, stack, out);
            }
            _ => {}
        }
    }
    let mut out = BTreeMap::new();
    go(f, &mut Vec::new(), &mut out);
    out
}

fn related(c: &Condition, a: &str, b: &str) -> bool {
    c.diagram
        .morphisms
        .iter()
        .any(|d| (d.from == a && d.to == b) || (d.from == b && d.to == a))
}

/// Closure: every universally quantified graph becomes a conjunction of
/// existential replicas, one per placement in `host`, each pinned to its
/// placement. Existential graphs the placements depend on (those related by
/// a morphism, and the anchor of a postcondition) are first replaced by a
/// disjunction over their own placements.
pub fn closure(
    c: &Condition,
    host: Option<&TypedGraph>,
    opts: &CompileOptions,
) -> Result<Condition> {
    let c = normalize(c);
    let mut has_forall = false;
    c.formula
        .walk(&mut |f| has_forall |= matches!(f, Formula::Forall(..)));
    if !has_forall {
        return Ok(c);
    }
    let host = host.ok_or(Error::UnboundedClosure)?;
    let anc = ancestors(&c.formula);
    let mut needed: BTreeSet<String> = BTreeSet::new();
    c.formula.walk(&mut |f| {
        if let Formula::Forall(v, _) = f {
            needed.insert(v.clone());
        }
    });
    loop {
        let mut more = BTreeSet::new();
        for v in &needed {
            for a in anc.get(v).into_iter().flatten() {
                let anchor = c.diagram.vars.get(a).is_some_and(Variable::is_anchor);
                if !needed.contains(a) && (related(&c, a, v) || (anchor && c.is_post())) {
                    more.insert(a.clone());
                }
            }
        }
        if more.is_empty() {
            break;
        }
        needed.extend(more);
    }
    let mut closer = Closer {
        c: c.clone(),
        needed,
        budget: opts.budget,
    };
    let formula = closer.close(&c.formula, &mut Env::new(), host)?;
    let mut out = closer.c;
    out.formula = formula;
    out.prune();
    Ok(out)
}

struct Closer {
    c: Condition,
    needed: BTreeSet<String>,
    budget: Option<usize>,
}

impl Closer {
    fn close(&mut self, f: &Formula, env: &mut Env, host: &TypedGraph) -> Result<Formula> {
        Ok(match f {
            Formula::Exists(v, body) => {
                let pinned = self.c.diagram.var(v)?.pin.is_some();
                if !pinned && !self.needed.contains(v) {
                    return Ok(Formula::exists(v.clone(), self.close(body, env, host)?));
                }
                let cands = Evaluator { c: &self.c }.candidates(v, env, host)?;
                if pinned {
                    let Some(cand) = cands.into_iter().next() else {
                        return Ok(Formula::False);
                    };
                    env.insert(v.clone(), cand.placement);
                    let inner = self.close(body, env, cand.host.as_ref().unwrap_or(host))?;
                    env.remove(v);
                    return Ok(Formula::exists(v.clone(), inner));
                }
                self.check_budget(cands.len())?;
                let mut parts = Vec::new();
                for (k, cand) in cands.into_iter().enumerate() {
                    let (name, body) =
                        self.replicate(v, body, &format!("@{}", k + 1), cand.pin.clone());
                    env.insert(name.clone(), cand.placement);
                    let inner = self.close(&body, env, cand.host.as_ref().unwrap_or(host))?;
                    env.remove(&name);
                    parts.push(Formula::exists(name, inner));
                }
                Formula::Or(parts)
            }
            Formula::Forall(v, body) => {
                let cands = Evaluator { c: &self.c }.candidates(v, env, host)?;
                self.check_budget(cands.len())?;
                let mut parts = Vec::new();
                for (i, cand) in cands.into_iter().enumerate() {
                    let (name, body) =
                        self.replicate(v, body, &format!("#{}", i + 1), cand.pin.clone());
                    env.insert(name.clone(), cand.placement);
                    let inner = self.close(&body, env, cand.host.as_ref().unwrap_or(host))?;
                    env.remove(&name);
                    parts.push(Formula::exists(name, inner));
                }
                Formula::And(parts)
            }
            Formula::And(gs) => Formula::And(
                gs.iter()
                    .map(|g| self.close(g, env, host))
                    .collect::<Result<_>>()?,
            ),
            Formula::Or(gs) => Formula::Or(
                gs.iter()
                    .map(|g| self.close(g, env, host))
                    .collect::<Result<_>>()?,
            ),
            Formula::Not(g) => Formula::not(self.close(g, env, host)?),
            Formula::Implies(a, b) => {
                Formula::implies(self.close(a, env, host)?, self.close(b, env, host)?)
            }
            _ => f.clone(),
        })
    }

    fn check_budget(&self, n: usize) -> Result<()> {
        match self.budget {
            Some(b) if n > b => Err(Error::UnboundedClosure),
            _ => Ok(()),
        }
    }

    /// Copy `v` and every graph bound in `body` with `suffix`; pin the copy of `v`.
    fn replicate(
        &mut self,
        v: &str,
        body: &Formula,
        suffix: &str,
        pin: NodeMap,
    ) -> (String, Formula) {
        let mut rename: BTreeMap<String, String> = BTreeMap::new();
        rename.insert(v.to_owned(), format!("{v}{suffix}"));
        for b in body.bound_vars() {
            rename.insert(b.clone(), format!("{b}{suffix}"));
        }
        self.c.diagram.clone_vars(&rename);
        let name = rename[v].clone();
        self.c.diagram.vars.get_mut(&name).expect("cloned").pin = Some(pin);
        let body = body.rename_vars(&|x| rename.get(x).cloned());
        (name, body)
    }
}

/// Decomposition: negative inclusions and overlap atoms become disjunctions
/// over single-edge graphs `X.ej`, one per certainty or nihil edge of `X`.
pub fn decompose(c: &Condition) -> Result<Condition> {
    let mut out = normalize(c);
    let formula = out.formula.clone();
    out.formula = decompose_formula(&formula, &mut out)?;
    let re = normalize(&out);
    Ok(re)
}

fn decompose_formula(f: &Formula, c: &mut Condition) -> Result<Formula> {
    Ok(match f {
        Formula::Atom(a) if a.pred == Pred::Q => {
            edges_or_fail(c, &a.var)?;
            // Q(X,G) = !P(X,~G) and Q(X,~G) = !P(X,G)
            split_negated(c, &a.var, !a.complement)?
        }
        Formula::Not(g) => match g.as_ref() {
            Formula::Atom(a) if a.pred == Pred::Q => {
                edges_or_fail(c, &a.var)?;
                Formula::Atom(Atom::new(Pred::P, a.var.clone(), !a.complement))
            }
            Formula::Atom(a) => split_negated(c, &a.var, a.complement)?,
            _ => {
                return Err(Error::WrongShape(
                    "negation above an atom after normalization".into(),
                ))
            }
        },
        Formula::And(gs) => Formula::And(
            gs.iter()
                .map(|g| decompose_formula(g, c))
                .collect::<Result<_>>()?,
        ),
        Formula::Or(gs) => Formula::Or(
            gs.iter()
                .map(|g| decompose_formula(g, c))
                .collect::<Result<_>>()?,
        ),
        Formula::Exists(v, b) => Formula::exists(v.clone(), decompose_formula(b, c)?),
        Formula::Forall(v, b) => Formula::forall(v.clone(), decompose_formula(b, c)?),
        _ => f.clone(),
    })
}

fn edges_or_fail(c: &Condition, v: &str) -> Result<()> {
    if c.diagram.var(v)?.edge_count() == 0 {
        return Err(Error::EdgelessQ(v.to_owned()));
    }
    Ok(())
}

/// `!P(X, G)` (or `!P(X, ~G)` when `complement`) as a disjunction.
fn split_negated(c: &mut Condition, v: &str, complement: bool) -> Result<Formula> {
    let var = c.diagram.var(v)?.clone();
    let edges: Vec<((ElemId, ElemId), bool)> = var
        .certain
        .iter()
        .map(|e| (e.clone(), true))
        .chain(var.nihil.iter().map(|e| (e.clone(), false)))
        .collect();
    let mut parts = Vec::new();
    for (j, ((a, b), certain)) in edges.into_iter().enumerate() {
        let name = format!("{v}.e{}", j + 1);
        let nodes: BTreeMap<ElemId, _> = [&a, &b]
            .into_iter()
            .map(|n| (n.clone(), var.nodes[n].clone()))
            .collect();
        let single = Variable {
            nodes: nodes.clone(),
            certain: BTreeSet::from([(a.clone(), b.clone())]),
            nihil: BTreeSet::new(),
            role: super::Role::Plain,
            pin: None,
        };
        c.diagram.vars.insert(name.clone(), single);
        c.diagram.morphisms.insert(DiagramMorphism {
            from: v.to_owned(),
            to: name.clone(),
            map: nodes.keys().map(|n| (n.clone(), n.clone())).collect(),
        });
        // a missing certainty edge is a present complement edge and vice versa
        let atom_complement = if certain { !complement } else { complement };
        parts.push(Formula::exists(
            name.clone(),
            Formula::Atom(Atom::new(Pred::P, name, atom_complement)),
        ));
    }
    Ok(Formula::Or(parts))
}

/// NAC operator: decomposition after closure.
pub fn nac(c: &Condition, host: Option<&TypedGraph>, opts: &CompileOptions) -> Result<Condition> {
    decompose(&closure(c, host, opts)?)
}

#[derive(Clone, Debug, Default)]
struct Disjunct {
    vars: BTreeSet<String>,
    literals: BTreeSet<Atom>,
}

fn dnf(f: &Formula, cap: usize) -> Result<Vec<Disjunct>> {
    let check = |v: Vec<Disjunct>| {
        if v.len() > cap {
            Err(Error::BranchCapExceeded(cap))
        } else {
            Ok(v)
        }
    };
    match f {
        Formula::True => Ok(vec![Disjunct::default()]),
        Formula::False => Ok(Vec::new()),
        Formula::Atom(a) if a.pred == Pred::P => Ok(vec![Disjunct {
            vars: BTreeSet::new(),
            literals: BTreeSet::from([a.clone()]),
        }]),
        Formula::Exists(v, b) => Ok(dnf(b, cap)?
            .into_iter()
            .map(|mut d| {
                d.vars.insert(v.clone());
                d
            })
            .collect()),
        Formula::Or(gs) => {
            let mut out = Vec::new();
            for g in gs {
                out.extend(dnf(g, cap)?);
                out = check(out)?;
            }
            Ok(out)
        }
        Formula::And(gs) => {
            let mut acc = vec![Disjunct::default()];
            for g in gs {
                let part = dnf(g, cap)?;
                let mut next = Vec::new();
                for a in &acc {
                    for b in &part {
                        next.push(Disjunct {
                            vars: a.vars.union(&b.vars).cloned().collect(),
                            literals: a.literals.union(&b.literals).cloned().collect(),
                        });
                    }
                    if next.len() > cap {
                        return Err(Error::BranchCapExceeded(cap));
                    }
                }
                acc = next;
            }
            Ok(acc)
        }
        other => Err(Error::WrongShape(format!(
            "unexpected {other} after normalization"
        ))),
    }
}

/// Compile `c` into one sequence per satisfiable disjunct: `c` holds in
/// `host` exactly when one of the sequences is applicable to it. The host is
/// needed only when the formula has universal quantifiers.
pub fn compile(
    c: &Condition,
    host: Option<&TypedGraph>,
    opts: &CompileOptions,
) -> Result<Vec<Branch>> {
    let normal = nac(c, host, opts)?;
    let anc = ancestors(&normal.formula);
    let mut out = Vec::new();
    for d in dnf(&normal.formula, opts.branch_cap)? {
        if let Some(seq) = build_sequence(&normal, &d, &anc, host)? {
            out.push(Branch {
                vars: d.vars,
                literals: d.literals,
                sequence: seq,
            });
        }
    }
    Ok(out)
}

/// Global node names, typing and rule list of one disjunct. `None` when the
/// disjunct is contradictory on its face.
fn build_sequence(
    c: &Condition,
    d: &Disjunct,
    anc: &BTreeMap<String, BTreeSet<String>>,
    host: Option<&TypedGraph>,
) -> Result<Option<CompletedSequence>> {
    let mut sub = c.diagram.clone();
    sub.retain(&d.vars);
    let in_scope = |m: &DiagramMorphism| {
        anc.get(&m.to).is_some_and(|a| a.contains(&m.from))
            || anc.get(&m.from).is_some_and(|a| a.contains(&m.to))
    };
    if sub.merged_nodes(Some(&in_scope)).is_some() {
        return Ok(None);
    }
    let classes = sub.classes(Some(&in_scope));
    let global = |var: &str, n: &ElemId| -> ElemId {
        let (rv, rn) = &classes[&(var.to_owned(), n.clone())];
        if sub.vars[rv].is_anchor() {
            rn.clone()
        } else {
            ElemId::new(format!("{rv}.{rn}"))
        }
    };
    let anchors: Vec<&String> = sub.anchors().collect();
    if anchors.len() > 1 {
        return Err(Error::WrongShape(
            "several anchor copies in one disjunct".into(),
        ));
    }
    let anchor = anchors.first().map(|a| (a.as_str(), &sub.vars[*a]));
    let p = c.production();
    if p.is_some() != anchor.is_some() {
        return Ok(None);
    }

    let mut pins = NodeMap::new();
    let mut pin = |g: ElemId, h: ElemId| -> bool {
        match pins.get(&g) {
            Some(prev) => *prev == h,
            None => {
                pins.insert(g, h);
                true
            }
        }
    };
    if let (Some((_, a)), Some(p)) = (anchor, p) {
        if let Some(m) = &a.pin {
            for (n, h) in m {
                if !pin(n.clone(), h.clone()) {
                    return Ok(None);
                }
            }
            if c.is_post() {
                let host = host.ok_or(Error::UnboundedClosure)?;
                let morphism = Morphism::induced(m.clone(), p.lhs(), host);
                let Ok(step) = p.apply(host, &morphism) else {
                    return Ok(None);
                };
                for (n, h) in step.created {
                    if !pin(n, h) {
                        return Ok(None);
                    }
                }
            }
        }
    }
    for (name, var) in sub.vars.iter().filter(|(_, v)| !v.is_anchor()) {
        if let Some(m) = &var.pin {
            for (n, h) in m {
                if !pin(global(name, n), h.clone()) {
                    return Ok(None);
                }
            }
        }
    }

    let rename = |name: &str, var: &Variable| -> NodeMap {
        var.nodes
            .keys()
            .map(|n| (n.clone(), global(name, n)))
            .collect()
    };
    let anchor_edges =
        |set: &dyn Fn(&Variable) -> &BTreeSet<(ElemId, ElemId)>| -> BTreeSet<(ElemId, ElemId)> {
            anchor.map(|(_, a)| set(a).clone()).unwrap_or_default()
        };
    let anchor_certain = anchor_edges(&|v: &Variable| &v.certain);
    let anchor_nihil = anchor_edges(&|v: &Variable| &v.nihil);
    let anchor_nodes: BTreeSet<ElemId> = anchor
        .map(|(_, a)| a.nodes.keys().cloned().collect())
        .unwrap_or_default();

    let mut literal_rules = Vec::new();
    let mut covered: Vec<BTreeSet<ElemId>> = Vec::new();
    if let Some(p) = p {
        covered.push(p.universe().ids().iter().cloned().collect());
    }
    for lit in &d.literals {
        let var = sub.var(&lit.var)?;
        let map = rename(&lit.var, var);
        let mapped = |s: &BTreeSet<(ElemId, ElemId)>| -> BTreeSet<(ElemId, ElemId)> {
            s.iter()
                .map(|(a, b)| (map[a].clone(), map[b].clone()))
                .collect()
        };
        let (need, forbid) = if lit.complement {
            (mapped(&var.nihil), mapped(&var.certain))
        } else {
            (mapped(&var.certain), mapped(&var.nihil))
        };
        let nodes: BTreeSet<ElemId> = map.values().cloned().collect();
        if nodes.is_subset(&anchor_nodes)
            && need.is_subset(&anchor_certain)
            && forbid.is_subset(&anchor_nihil)
        {
            continue;
        }
        let name = if lit.complement {
            format!("id~_{}", lit.var)
        } else {
            format!("id_{}", lit.var)
        };
        literal_rules.push(identity_rule(&name, var, &map, &need, &forbid)?);
        covered.push(nodes);
    }
    let mut existence_rules = Vec::new();
    for (name, var) in sub.vars.iter().filter(|(_, v)| !v.is_anchor()) {
        let map = rename(name, var);
        let nodes: BTreeSet<ElemId> = map.values().cloned().collect();
        if nodes.iter().all(|g| pins.contains_key(g)) || covered.iter().any(|c| nodes.is_subset(c))
        {
            continue;
        }
        existence_rules.push(identity_rule(
            &format!("ex_{name}"),
            var,
            &map,
            &BTreeSet::new(),
            &BTreeSet::new(),
        )?);
    }

    let mut apart = BTreeSet::new();
    if let Some((a, _)) = anchor {
        for dm in sub.morphisms.iter().filter(|m| m.from == a) {
            let var = &sub.vars[&dm.to];
            let identified: BTreeSet<&ElemId> = dm.map.values().collect();
            for n in var.nodes.keys().filter(|n| !identified.contains(n)) {
                let g = global(&dm.to, n);
                for l in &anchor_nodes {
                    if &g == l {
                        return Ok(None);
                    }
                    apart.insert((g.clone(), l.clone()));
                }
            }
        }
    }

    let mut rules = Vec::new();
    match &c.anchor {
        Anchor::Pre(p) => {
            rules.extend(literal_rules);
            rules.extend(existence_rules);
            rules.push(p.clone());
        }
        Anchor::Post(p) => {
            rules.push(p.clone());
            rules.extend(literal_rules);
            rules.extend(existence_rules);
        }
        Anchor::None => {
            rules.extend(literal_rules);
            rules.extend(existence_rules);
        }
    }
    let seq = match CompletedSequence::new(rules) {
        Ok(s) => s,
        Err(Error::TypeClash(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    Ok(Some(
        seq.with_sharing(Sharing::Open { apart }).with_pins(pins),
    ))
}

fn identity_rule(
    name: &str,
    var: &Variable,
    map: &NodeMap,
    need: &BTreeSet<(ElemId, ElemId)>,
    forbid: &BTreeSet<(ElemId, ElemId)>,
) -> Result<Production> {
    let mut b = TypedGraph::builder();
    for (n, t) in &var.nodes {
        b = b.typed_node(map[n].clone(), t.clone());
    }
    for (x, y) in need {
        b = b.edge(x.clone(), y.clone());
    }
    let forbid: Vec<(ElemId, ElemId)> = forbid.iter().cloned().collect();
    Production::identity(name, &b.build()?, &forbid)
}

/// `∃A[A]` as a single sequence: `id_A` before the rule for preconditions,
/// after it for postconditions.
pub fn match_op(c: &Condition) -> Result<CompletedSequence> {
    let shape_ok = match &c.body() {
        Formula::Exists(v, b) => {
            matches!(b.as_ref(), Formula::Atom(a) if a.var == *v && a.pred == Pred::P && !a.complement)
        }
        _ => false,
    };
    if !shape_ok {
        return Err(Error::WrongShape(format!(
            "expected exists A . A, found {}",
            c.body()
        )));
    }
    let mut branches = compile(c, None, &CompileOptions::default())?;
    match branches.len() {
        1 => Ok(branches.pop().expect("one branch").sequence),
        _ => Err(Error::WrongShape(
            "identifications make the match condition contradictory".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::super::{satisfies, Diagram};
    use super::*;
    use crate::sequence::applicable;

    fn conv_rule() -> Production {
        // a machine takes a piece from a conveyor
        let l = TypedGraph::builder()
            .node("m", "Mach")
            .node("c", "Conv")
            .node("k", "Piece")
            .edge("k", "c")
            .edge("c", "m")
            .build()
            .unwrap();
        let r = TypedGraph::builder()
            .node("m", "Mach")
            .node("c", "Conv")
            .edge("c", "m")
            .edge("m", "m")
            .build()
            .unwrap();
        Production::from_static("consume", &l, &r, &NodeMap::new()).unwrap()
    }

    #[test]
    fn match_operator_places_identity_before_or_after() {
        let p = conv_rule();
        let a = TypedGraph::builder()
            .node("o", "Oper")
            .node("m", "Mach")
            .edge("o", "m")
            .build()
            .unwrap();
        let d = Diagram::new()
            .with_graph("A", &a)
            .with_morphism("L", "A", [("m", "m")]);
        let pre = Condition::pre(&p, d.clone(), Formula::parse("exists A . A").unwrap()).unwrap();
        let s = match_op(&pre).unwrap();
        assert_eq!(s.names(), vec!["id_A", "consume"]);
        let d = Diagram::new()
            .with_graph("A", &a)
            .with_morphism("R", "A", [("m", "m")]);
        let post = Condition::post(&p, d, Formula::parse("exists A . A").unwrap()).unwrap();
        assert_eq!(match_op(&post).unwrap().names(), vec!["consume", "id_A"]);
    }

    #[test]
    fn matching_the_left_hand_side_is_redundant() {
        let p = conv_rule();
        let d = Diagram::new()
            .with_graph("A", &p.lhs().compact())
            .with_morphism("L", "A", [("m", "m"), ("c", "c"), ("k", "k")]);
        let c = Condition::pre(&p, d, Formula::parse("exists A . A").unwrap()).unwrap();
        assert_eq!(match_op(&c).unwrap().names(), vec!["consume"]);
    }

    #[test]
    fn closure_without_candidates_is_true() {
        let a = TypedGraph::builder().node("x", "Oper").build().unwrap();
        let c = Condition::constraint(
            Diagram::new().with_graph("A", &a),
            Formula::parse("forall A . !A").unwrap(),
        )
        .unwrap();
        let host = TypedGraph::builder().node("m", "Mach").build().unwrap();
        let closed = closure(&c, Some(&host), &CompileOptions::default()).unwrap();
        assert_eq!(closed.formula, Formula::And(vec![]));
        assert!(satisfies(&host, &closed).unwrap());
        assert!(matches!(
            closure(&c, None, &CompileOptions::default()),
            Err(Error::UnboundedClosure)
        ));
    }

    #[test]
    fn outer_existential_stays_single_per_disjunct() {
        // exists B forall A with B -> A: two placements of A around one B
        let b = TypedGraph::builder().node("m", "Mach").build().unwrap();
        let a = TypedGraph::builder()
            .node("m", "Mach")
            .node("c", "Conv")
            .edge("m", "c")
            .build()
            .unwrap();
        let d = Diagram::new()
            .with_graph("B", &b)
            .with_graph("A", &a)
            .with_morphism("B", "A", [("m", "m")]);
        let c =
            Condition::constraint(d, Formula::parse("exists B . forall A . A").unwrap()).unwrap();
        let host = TypedGraph::builder()
            .node("m", "Mach")
            .node("c1", "Conv")
            .node("c2", "Conv")
            .edge("m", "c1")
            .edge("m", "c2")
            .build()
            .unwrap();
        let closed = closure(&c, Some(&host), &CompileOptions::default()).unwrap();
        let bs: Vec<_> = closed
            .diagram
            .vars
            .keys()
            .filter(|k| k.starts_with('B'))
            .collect();
        assert_eq!(bs, vec!["B@1"]);
        let targets: BTreeSet<_> = closed
            .diagram
            .morphisms
            .iter()
            .filter(|m| m.from == "B@1")
            .map(|m| m.to.clone())
            .collect();
        assert_eq!(
            targets,
            BTreeSet::from(["A@1#1".to_owned(), "A@1#2".to_owned()])
        );
        assert!(satisfies(&host, &closed).unwrap());
    }

    #[test]
    fn decomposition_has_one_branch_per_edge() {
        let a = TypedGraph::builder()
            .node("x", "T")
            .node("y", "T")
            .edge("x", "y")
            .edge("y", "x")
            .edge("x", "x")
            .build()
            .unwrap();
        let c = Condition::constraint(
            Diagram::new().with_graph("A", &a),
            Formula::parse("exists A . Q(A)").unwrap(),
        )
        .unwrap();
        let dec = decompose(&c).unwrap();
        let Formula::Exists(_, body) = &dec.formula else {
            panic!()
        };
        let Formula::Or(parts) = body.as_ref() else {
            panic!("{body}")
        };
        assert_eq!(parts.len(), 3);
        let single = TypedGraph::builder()
            .node("x", "T")
            .edge("x", "x")
            .build()
            .unwrap();
        let dec1 = decompose(
            &Condition::constraint(
                Diagram::new().with_graph("A", &single),
                Formula::parse("exists A . Q(A)").unwrap(),
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(
            compile(&dec1, None, &CompileOptions::default())
                .unwrap()
                .len(),
            1
        );
    }

    #[test]
    fn nac_product_of_replicas_and_edges() {
        // two placements of a two-edge graph: 2 x 2 sequences
        let a = TypedGraph::builder()
            .node("x", "T")
            .node("y", "U")
            .edge("x", "y")
            .edge("y", "x")
            .build()
            .unwrap();
        let c = Condition::constraint(
            Diagram::new().with_graph("A", &a),
            Formula::parse("!exists A . A").unwrap(),
        )
        .unwrap();
        let host = TypedGraph::builder()
            .node("1", "T")
            .node("2", "T")
            .node("3", "U")
            .edge("1", "3")
            .build()
            .unwrap();
        let branches = compile(&c, Some(&host), &CompileOptions::default()).unwrap();
        assert_eq!(branches.len(), 4);
        let holds = satisfies(&host, &c).unwrap();
        assert!(holds);
        assert_eq!(
            branches.iter().any(|b| applicable(&b.sequence, &host)),
            holds
        );
    }

    #[test]
    fn branch_cap_is_enforced() {
        let a = TypedGraph::builder()
            .node("x", "T")
            .node("y", "T")
            .edge("x", "y")
            .build()
            .unwrap();
        let c = Condition::constraint(
            Diagram::new().with_graph("A", &a),
            Formula::parse("forall A . !A").unwrap(),
        )
        .unwrap();
        let host = TypedGraph::builder()
            .node("1", "T")
            .node("2", "T")
            .node("3", "T")
            .build()
            .unwrap();
        let opts = CompileOptions {
            branch_cap: 0,
            budget: None,
        };
        assert_eq!(
            compile(&c, Some(&host), &opts).unwrap_err(),
            Error::BranchCapExceeded(0)
        );
        let opts = CompileOptions {
            branch_cap: 10,
            budget: Some(2),
        };
        assert_eq!(
            compile(&c, Some(&host), &opts).unwrap_err(),
            Error::UnboundedClosure
        );
    }
}
