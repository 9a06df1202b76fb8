//! Graph constraints and application conditions.
//!
//! A condition is a diagram of graph variables plus a quantified formula.
//! Each variable carries a certainty part (nodes and edges that must be
//! present) and a nihil part (edges that must be absent). Application
//! conditions add an anchor variable: `L` with nihil `K` for preconditions,
//! `R` with nihil `Q` for postconditions. The anchor is quantified outermost
//! and ranges over the applicable matches of the rule.
//!
//! A variable with a morphism from the anchor is *anchored*: its nodes that
//! the morphism does not identify with anchor nodes must lie outside the
//! image of the match.

mod check;
mod eval;
pub mod formula;
mod ops;
mod transform;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::digraph::{TypeSet, TypedGraph};
use crate::error::{Error, Result};
use crate::matching::NodeMap;
use crate::matrix::ElemId;
use crate::production::Production;

pub use check::{check_condition, ConditionReport};
pub use eval::{satisfies, satisfies_at};
pub use formula::{Atom, Formula, Pred};
pub use ops::{closure, compile, decompose, match_op, nac, Branch, CompileOptions};
pub use transform::{adapted_fixpoint, delocalize, post_to_pre, pre_to_post, Stage};

pub type Edge = (ElemId, ElemId);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Plain,
    Anchor,
}

/// A graph variable: typed nodes, certainty edges and nihil edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Variable {
    pub nodes: BTreeMap<ElemId, TypeSet>,
    pub certain: BTreeSet<Edge>,
    pub nihil: BTreeSet<Edge>,
    pub role: Role,
    /// Fixed placement in the host, set by closure.
    pub pin: Option<NodeMap>,
}

impl Variable {
    /// Present nodes and edges of `g`; nihil part empty.
    pub fn from_graph(g: &TypedGraph) -> Variable {
        Variable {
            nodes: g
                .node_ids()
                .into_iter()
                .map(|n| {
                    let t = g.types_of(&n).expect("typed").clone();
                    (n, t)
                })
                .collect(),
            certain: g.edge_list().into_iter().collect(),
            nihil: BTreeSet::new(),
            role: Role::Plain,
            pin: None,
        }
    }

    pub fn with_nihil<I, A, B>(mut self, edges: I) -> Result<Variable>
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<ElemId>,
        B: Into<ElemId>,
    {
        for (a, b) in edges {
            let e = (a.into(), b.into());
            for n in [&e.0, &e.1] {
                if !self.nodes.contains_key(n) {
                    return Err(Error::UnknownElement(n.clone()));
                }
            }
            self.nihil.insert(e);
        }
        Ok(self)
    }

    pub(crate) fn anchor(mut self) -> Variable {
        self.role = Role::Anchor;
        self
    }

    pub fn is_anchor(&self) -> bool {
        self.role == Role::Anchor
    }

    /// Certainty graph: the nodes with the certainty edges.
    pub fn graph(&self) -> TypedGraph {
        self.graph_with(&self.certain)
    }

    pub(crate) fn graph_with(&self, edges: &BTreeSet<Edge>) -> TypedGraph {
        let mut b = TypedGraph::builder();
        for (n, t) in &self.nodes {
            b = b.typed_node(n.clone(), t.clone());
        }
        for (x, y) in edges {
            b = b.edge(x.clone(), y.clone());
        }
        b.build().expect("variable edges stay on its nodes")
    }

    /// Swap certainty and nihil: `P(X, ~G)` is `P(X', G)` for the swapped `X'`.
    pub(crate) fn swapped(&self) -> Variable {
        Variable {
            certain: self.nihil.clone(),
            nihil: self.certain.clone(),
            role: Role::Plain,
            pin: None,
            ..self.clone()
        }
    }

    pub(crate) fn edge_count(&self) -> usize {
        self.certain.len() + self.nihil.len()
    }
}

/// Partial injective node map between two variables of a diagram.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiagramMorphism {
    pub from: String,
    pub to: String,
    pub map: NodeMap,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Diagram {
    pub vars: BTreeMap<String, Variable>,
    pub morphisms: BTreeSet<DiagramMorphism>,
}

impl Diagram {
    pub fn new() -> Diagram {
        Diagram::default()
    }

    pub fn with_var(mut self, name: impl Into<String>, var: Variable) -> Diagram {
        self.vars.insert(name.into(), var);
        self
    }

    pub fn with_graph(self, name: impl Into<String>, g: &TypedGraph) -> Diagram {
        self.with_var(name, Variable::from_graph(g))
    }

    /// Add a morphism given as `(from node, to node)` pairs.
    pub fn with_morphism<I, A, B>(mut self, from: &str, to: &str, pairs: I) -> Diagram
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<ElemId>,
        B: Into<ElemId>,
    {
        self.morphisms.insert(DiagramMorphism {
            from: from.to_owned(),
            to: to.to_owned(),
            map: pairs
                .into_iter()
                .map(|(a, b)| (a.into(), b.into()))
                .collect(),
        });
        self
    }

    pub fn var(&self, name: &str) -> Result<&Variable> {
        self.vars
            .get(name)
            .ok_or_else(|| Error::UnboundVariable(name.to_owned()))
    }

    pub fn anchors(&self) -> impl Iterator<Item = &String> {
        self.vars
            .iter()
            .filter(|(_, v)| v.is_anchor())
            .map(|(k, _)| k)
    }

    pub fn morphisms_touching<'a>(
        &'a self,
        name: &'a str,
    ) -> impl Iterator<Item = &'a DiagramMorphism> {
        self.morphisms
            .iter()
            .filter(move |d| d.from == name || d.to == name)
    }

    /// Some anchor has a morphism into `name`.
    pub fn is_anchored(&self, name: &str) -> bool {
        self.morphisms
            .iter()
            .any(|d| d.to == name && self.vars.get(&d.from).is_some_and(Variable::is_anchor))
    }

    /// Check morphisms, add composites relating at least one node, and reject
    /// diagrams whose morphisms identify two nodes of the same variable.
    pub fn validate(&mut self) -> Result<()> {
        let bad = |s: String| Err(Error::IllDefinedDiagram(s));
        for d in &self.morphisms {
            let (Some(a), Some(b)) = (self.vars.get(&d.from), self.vars.get(&d.to)) else {
                return bad(format!(
                    "morphism {}->{} names an unknown graph",
                    d.from, d.to
                ));
            };
            if b.is_anchor() {
                return bad(format!(
                    "morphism {}->{} has the anchor as codomain",
                    d.from, d.to
                ));
            }
            let mut seen = BTreeSet::new();
            for (x, y) in &d.map {
                let (Some(tx), Some(ty)) = (a.nodes.get(x), b.nodes.get(y)) else {
                    return bad(format!(
                        "morphism {}->{} maps unknown node {x}",
                        d.from, d.to
                    ));
                };
                if !tx.intersects(ty) {
                    return Err(Error::TypeClash(x.clone()));
                }
                if !seen.insert(y) {
                    return bad(format!("morphism {}->{} is not injective", d.from, d.to));
                }
            }
        }
        // compose until no new pairs appear
        loop {
            let mut by_pair: BTreeMap<(String, String), NodeMap> = BTreeMap::new();
            for d in &self.morphisms {
                by_pair
                    .entry((d.from.clone(), d.to.clone()))
                    .or_default()
                    .extend(d.map.clone());
            }
            let mut grown = false;
            let pairs: Vec<_> = by_pair
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            for ((x, y), f) in &pairs {
                for ((y2, z), g) in &pairs {
                    if y != y2 || x == z {
                        continue;
                    }
                    let comp: NodeMap = f
                        .iter()
                        .filter_map(|(a, b)| g.get(b).map(|c| (a.clone(), c.clone())))
                        .collect();
                    if comp.is_empty() {
                        continue;
                    }
                    let entry = by_pair.entry((x.clone(), z.clone())).or_default();
                    for (a, c) in comp {
                        match entry.get(&a) {
                            Some(prev) if *prev != c => {
                                return bad(format!(
                                    "morphisms into {z} do not commute on {x}.{a}"
                                ));
                            }
                            Some(_) => {}
                            None => {
                                entry.insert(a, c);
                                grown = true;
                            }
                        }
                    }
                }
            }
            self.morphisms = by_pair
                .into_iter()
                .map(|((from, to), map)| DiagramMorphism { from, to, map })
                .collect();
            if !grown {
                break;
            }
        }
        if let Some((var, a, b)) = self.merged_nodes(None) {
            return bad(format!("morphisms identify {var}.{a} with {var}.{b}"));
        }
        Ok(())
    }

    /// Union-find over `var.node` along morphisms (optionally only those
    /// accepted by `keep`). Returns a pair of nodes of one variable that end
    /// up identified, if any.
    pub(crate) fn merged_nodes(
        &self,
        keep: Option<&dyn Fn(&DiagramMorphism) -> bool>,
    ) -> Option<(String, ElemId, ElemId)> {
        let classes = self.classes(keep);
        let mut seen: BTreeMap<(&String, &(String, ElemId)), ElemId> = BTreeMap::new();
        for ((var, node), root) in &classes {
            if let Some(prev) = seen.insert((var, root), node.clone()) {
                return Some((var.clone(), prev, node.clone()));
            }
        }
        None
    }

    /// Representative `(var, node)` of every node's class.
    pub(crate) fn classes(
        &self,
        keep: Option<&dyn Fn(&DiagramMorphism) -> bool>,
    ) -> BTreeMap<(String, ElemId), (String, ElemId)> {
        let mut parent: BTreeMap<(String, ElemId), (String, ElemId)> = BTreeMap::new();
        for (v, var) in &self.vars {
            for n in var.nodes.keys() {
                parent.insert((v.clone(), n.clone()), (v.clone(), n.clone()));
            }
        }
        fn find(
            parent: &mut BTreeMap<(String, ElemId), (String, ElemId)>,
            x: &(String, ElemId),
        ) -> (String, ElemId) {
            let mut cur = x.clone();
            loop {
                let p = parent[&cur].clone();
                if p == cur {
                    return cur;
                }
                cur = p;
            }
        }
        for d in &self.morphisms {
            if keep.is_some_and(|k| !k(d)) {
                continue;
            }
            for (a, b) in &d.map {
                let x = (d.from.clone(), a.clone());
                let y = (d.to.clone(), b.clone());
                if !parent.contains_key(&x) || !parent.contains_key(&y) {
                    continue;
                }
                let (rx, ry) = (find(&mut parent, &x), find(&mut parent, &y));
                if rx != ry {
                    // anchors win, then the smaller name
                    let anchor =
                        |r: &(String, ElemId)| self.vars.get(&r.0).is_some_and(Variable::is_anchor);
                    let (root, child) = match (anchor(&rx), anchor(&ry)) {
                        (true, false) => (rx, ry),
                        (false, true) => (ry, rx),
                        _ if rx <= ry => (rx, ry),
                        _ => (ry, rx),
                    };
                    parent.insert(child, root);
                }
            }
        }
        let keys: Vec<_> = parent.keys().cloned().collect();
        keys.into_iter()
            .map(|k| {
                let r = find(&mut parent, &k);
                (k, r)
            })
            .collect()
    }

    /// Copy the variables in `names` under `rename`, with every morphism that
    /// touches them.
    pub(crate) fn clone_vars(&mut self, rename: &BTreeMap<String, String>) {
        for (old, new) in rename {
            if let Some(v) = self.vars.get(old).cloned() {
                self.vars.insert(new.clone(), v);
            }
        }
        let copies: Vec<DiagramMorphism> = self
            .morphisms
            .iter()
            .filter(|d| rename.contains_key(&d.from) || rename.contains_key(&d.to))
            .map(|d| DiagramMorphism {
                from: rename.get(&d.from).unwrap_or(&d.from).clone(),
                to: rename.get(&d.to).unwrap_or(&d.to).clone(),
                map: d.map.clone(),
            })
            .collect();
        self.morphisms.extend(copies);
    }

    /// Drop variables outside `keep` and their morphisms.
    pub(crate) fn retain(&mut self, keep: &BTreeSet<String>) {
        self.vars.retain(|k, _| keep.contains(k));
        self.morphisms
            .retain(|d| keep.contains(&d.from) && keep.contains(&d.to));
    }

    pub(crate) fn rename_all(&self, f: &dyn Fn(&str) -> String) -> Diagram {
        Diagram {
            vars: self.vars.iter().map(|(k, v)| (f(k), v.clone())).collect(),
            morphisms: self
                .morphisms
                .iter()
                .map(|d| DiagramMorphism {
                    from: f(&d.from),
                    to: f(&d.to),
                    map: d.map.clone(),
                })
                .collect(),
        }
    }
}

/// Where a condition is evaluated.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Anchor {
    /// A graph constraint on a state.
    None,
    /// Precondition: evaluated in the host before the rule.
    Pre(Production),
    /// Postcondition: evaluated in the result, at the comatch.
    Post(Production),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condition {
    pub diagram: Diagram,
    pub formula: Formula,
    pub anchor: Anchor,
}

/// Name of the anchor variable of a precondition.
pub const PRE_ANCHOR: &str = "L";
/// Name of the anchor variable of a postcondition.
pub const POST_ANCHOR: &str = "R";

impl Condition {
    /// A graph constraint.
    pub fn constraint(diagram: Diagram, formula: Formula) -> Result<Condition> {
        let mut c = Condition {
            diagram,
            formula,
            anchor: Anchor::None,
        };
        c.validate()?;
        Ok(c)
    }

    /// Precondition of `p`. Morphisms from `L` relate diagram graphs to the
    /// left hand side; `L` itself and its nihil part `K` are added here.
    pub fn pre(p: &Production, diagram: Diagram, formula: Formula) -> Result<Condition> {
        Condition::anchored(Anchor::Pre(p.clone()), diagram, formula)
    }

    /// Postcondition of `p`; morphisms from `R` relate graphs to the right
    /// hand side, whose nihil part is `Q`.
    pub fn post(p: &Production, diagram: Diagram, formula: Formula) -> Result<Condition> {
        Condition::anchored(Anchor::Post(p.clone()), diagram, formula)
    }

    fn anchored(anchor: Anchor, mut diagram: Diagram, formula: Formula) -> Result<Condition> {
        let name = match &anchor {
            Anchor::Pre(_) => PRE_ANCHOR,
            Anchor::Post(_) => POST_ANCHOR,
            Anchor::None => unreachable!("anchored conditions only"),
        };
        for reserved in [PRE_ANCHOR, POST_ANCHOR] {
            if diagram.vars.contains_key(reserved) {
                return Err(Error::IllDefinedDiagram(format!(
                    "{reserved} is reserved for the anchor"
                )));
            }
        }
        let var = anchor_variable(&anchor);
        diagram.vars.insert(name.to_owned(), var);
        let formula = Formula::exists(name, Formula::And(vec![Formula::atom(name), formula]));
        let mut c = Condition {
            diagram,
            formula,
            anchor,
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&mut self) -> Result<()> {
        if let Some(v) = self.formula.free_vars().into_iter().next() {
            return Err(Error::UnboundVariable(v));
        }
        for v in self.formula.bound_vars() {
            self.diagram.var(&v)?;
        }
        self.diagram.validate()
    }

    pub fn production(&self) -> Option<&Production> {
        match &self.anchor {
            Anchor::None => None,
            Anchor::Pre(p) | Anchor::Post(p) => Some(p),
        }
    }

    pub fn is_pre(&self) -> bool {
        matches!(self.anchor, Anchor::Pre(_))
    }

    pub fn is_post(&self) -> bool {
        matches!(self.anchor, Anchor::Post(_))
    }

    /// Body below the anchor quantifier and its `L` (or `R`) conjunct.
    pub fn body(&self) -> Formula {
        match (&self.anchor, &self.formula) {
            (Anchor::None, f) => f.clone(),
            (_, Formula::Exists(_, b)) => match b.as_ref() {
                Formula::And(parts) if parts.len() == 2 => parts[1].clone(),
                Formula::And(parts) if parts.len() > 2 => Formula::And(parts[1..].to_vec()),
                other => other.clone(),
            },
            (_, f) => f.clone(),
        }
    }

    /// Pin every anchor variable to the match `m` (rule ids to host ids).
    pub fn pinned_at(&self, m: &NodeMap) -> Condition {
        let mut c = self.clone();
        let lhs = self
            .production()
            .map(|p| p.lhs().node_ids())
            .unwrap_or_default();
        let m: NodeMap = m
            .iter()
            .filter(|(k, _)| lhs.contains(k))
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        for v in c.diagram.vars.values_mut().filter(|v| v.is_anchor()) {
            v.pin = Some(m.clone());
        }
        c
    }

    /// Drop diagram graphs the formula no longer binds.
    pub(crate) fn prune(&mut self) {
        let keep: BTreeSet<String> = self.formula.bound_vars().into_iter().collect();
        self.diagram.retain(&keep);
    }

    /// Rename variables to a canonical form: generated suffixes (`#i`, `@k`,
    /// `'k`, `.ej`, `.n`) are sorted so that operators applied in different
    /// orders give comparable names.
    pub fn canonical(&self) -> Condition {
        let f = |s: &str| canonical_name(s);
        Condition {
            diagram: self.diagram.rename_all(&f),
            formula: self.formula.rename_vars(&|s| Some(canonical_name(s))),
            anchor: self.anchor.clone(),
        }
    }
}

pub(crate) fn anchor_variable(anchor: &Anchor) -> Variable {
    match anchor {
        Anchor::Pre(p) => {
            let lhs = p.lhs();
            let k = p.nihil();
            let nodes = lhs.node_ids();
            let nihil = k
                .edge_list()
                .into_iter()
                .filter(|(a, b)| nodes.contains(a) && nodes.contains(b))
                .collect();
            Variable {
                nihil,
                ..Variable::from_graph(&lhs.compact())
            }
            .anchor()
        }
        Anchor::Post(p) => {
            let inv = p.invert();
            anchor_variable(&Anchor::Pre(inv))
        }
        Anchor::None => unreachable!("no anchor"),
    }
}

fn split_tags(name: &str) -> (&str, Vec<&str>) {
    // a tag is #digits, @digits, 'digits, .e digits or .n
    fn tag_len(s: &str) -> Option<usize> {
        let b = s.as_bytes();
        let digits = |from: usize| b[from..].iter().take_while(|c| c.is_ascii_digit()).count();
        match b.first()? {
            b'#' | b'@' | b'\'' => {
                let d = digits(1);
                (d > 0).then_some(1 + d)
            }
            b'.' if b.get(1) == Some(&b'e') => {
                let d = digits(2);
                (d > 0).then_some(2 + d)
            }
            b'.' if b.get(1) == Some(&b'n') => Some(2),
            _ => None,
        }
    }
    fn all_tags(s: &str) -> Option<Vec<&str>> {
        let mut out = Vec::new();
        let mut rest = s;
        while !rest.is_empty() {
            let n = tag_len(rest)?;
            // `.n` and `.e1` must not run into further identifier characters
            out.push(&rest[..n]);
            rest = &rest[n..];
        }
        Some(out)
    }
    for (i, _) in name.char_indices().skip(1) {
        if let Some(tags) = all_tags(&name[i..]) {
            return (&name[..i], tags);
        }
    }
    (name, Vec::new())
}

pub(crate) fn canonical_name(name: &str) -> String {
    let (base, mut tags) = split_tags(name);
    tags.sort();
    let mut out = base.to_owned();
    for t in tags {
        out.push_str(t);
    }
    out
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let nodes: Vec<String> = self.nodes.iter().map(|(n, t)| format!("{n}:{t}")).collect();
        let edges = |s: &BTreeSet<Edge>| {
            s.iter()
                .map(|(a, b)| format!("{a}->{b}"))
                .collect::<Vec<_>>()
                .join(" ")
        };
        write!(
            f,
            "[{}] C{{{}}} N{{{}}}",
            nodes.join(" "),
            edges(&self.certain),
            edges(&self.nihil)
        )?;
        if let Some(pin) = &self.pin {
            let p: Vec<String> = pin.iter().map(|(a, b)| format!("{a}={b}")).collect();
            write!(f, " pin{{{}}}", p.join(" "))?;
        }
        Ok(())
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.anchor {
            Anchor::None => writeln!(f, "constraint")?,
            Anchor::Pre(p) => writeln!(f, "precondition of {}", p.name())?,
            Anchor::Post(p) => writeln!(f, "postcondition of {}", p.name())?,
        }
        for (k, v) in &self.diagram.vars {
            writeln!(f, "  {k} = {v}")?;
        }
        for d in &self.diagram.morphisms {
            let m: Vec<String> = d.map.iter().map(|(a, b)| format!("{a}->{b}")).collect();
            writeln!(f, "  {} -> {} : {{{}}}", d.from, d.to, m.join(", "))?;
        }
        write!(f, "  {}", self.formula)
    }
}
