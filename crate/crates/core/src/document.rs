//! Grammar documents: types, graphs, rules, conditions, sequences and
//! multidigraphs in one TOML file.
//!
//! ```toml
//! types = ["Mach", "Oper"]
//!
//! [graphs.plant]
//! nodes = [{ id = "m", type = "Mach" }, { id = "o", type = "Oper" }]
//! edges = [["o", "m"]]
//!
//! [rules.busy.lhs]
//! nodes = [{ id = "m", type = "Mach" }]
//! [rules.busy.rhs]
//! nodes = [{ id = "m", type = "Mach" }]
//! edges = [["m", "m"]]
//!
//! [conditions.idle]
//! rule = "busy"
//! stage = "pre"
//! formula = "exists A . !A"
//! graphs.A = { nodes = [{ id = "m", type = "Mach" }], edges = [["m", "m"]] }
//! morphisms = [{ from = "L", to = "A", map = [["m", "m"]] }]
//! ```
//!
//! A node type `A|B` is the type set `{A, B}`. Sequences list rules in
//! application order; `identify` groups `[rule index, local id]` pairs that
//! denote one node.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::conditions::{Anchor, Condition, Diagram, DiagramMorphism, Formula, Stage, Variable};
use crate::digraph::{TypeSet, TypedGraph};
use crate::error::{Error, Result};
use crate::matching::NodeMap;
use crate::matrix::ElemId;
use crate::multigraph::{MultiGraph, MultiRule, MULTINODE};
use crate::production::Production;
use crate::sequence::CompletedSequence;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    id: String,
    #[serde(rename = "type")]
    ty: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphDoc {
    #[serde(default)]
    nodes: Vec<NodeDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    edges: Vec<(String, String)>,
    /// Nihil edges: forbidden in rules, required absent in conditions.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    forbid: Vec<(String, String)>,
    /// Graphs used only as patterns may have dangling edges.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    constraint: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDoc {
    lhs: GraphDoc,
    rhs: GraphDoc,
    /// `[rhs id, lhs id]` pairs naming one preserved node.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    identify: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MorphismDoc {
    from: String,
    to: String,
    map: Vec<(String, String)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum StageDoc {
    Pre,
    Post,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConditionDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rule: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stage: Option<StageDoc>,
    formula: String,
    #[serde(default)]
    graphs: BTreeMap<String, GraphDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    morphisms: Vec<MorphismDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SequenceDoc {
    rules: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    identify: Vec<Vec<(usize, String)>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiEdgeDoc {
    id: String,
    source: String,
    target: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiGraphDoc {
    #[serde(default)]
    nodes: Vec<NodeDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    edges: Vec<MultiEdgeDoc>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MultiRuleDoc {
    lhs: MultiGraphDoc,
    rhs: MultiGraphDoc,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Raw {
    #[serde(default)]
    types: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    graphs: BTreeMap<String, GraphDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    rules: BTreeMap<String, RuleDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    conditions: BTreeMap<String, ConditionDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    sequences: BTreeMap<String, SequenceDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    multigraphs: BTreeMap<String, MultiGraphDoc>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    multirules: BTreeMap<String, MultiRuleDoc>,
}

/// A named graph; `constraint` graphs may have dangling edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphEntry {
    pub graph: TypedGraph,
    pub constraint: bool,
}

/// Rule names in application order and identification groups.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceEntry {
    pub rules: Vec<String>,
    pub identify: Vec<Vec<(usize, ElemId)>>,
}

/// A condition and, for application conditions, the name of its rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionEntry {
    pub condition: Condition,
    pub rule: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GrammarDocument {
    pub types: Vec<String>,
    pub graphs: BTreeMap<String, GraphEntry>,
    pub rules: BTreeMap<String, Production>,
    pub conditions: BTreeMap<String, ConditionEntry>,
    pub sequences: BTreeMap<String, SequenceEntry>,
    pub multigraphs: BTreeMap<String, MultiGraph>,
    pub multirules: BTreeMap<String, MultiRule>,
}

fn doc_err(msg: impl Into<String>) -> Error {
    Error::Document(msg.into())
}

fn type_set(s: &str) -> Result<TypeSet> {
    TypeSet::new(s.split('|').map(str::trim).filter(|t| !t.is_empty()))
}

fn type_string(t: &TypeSet) -> String {
    t.types().collect::<Vec<_>>().join("|")
}

fn graph_from(doc: &GraphDoc, what: &str) -> Result<TypedGraph> {
    let mut b = TypedGraph::builder();
    for n in &doc.nodes {
        b = b.typed_node(n.id.as_str(), type_set(&n.ty)?);
    }
    for (x, y) in &doc.edges {
        b = b.edge(x.as_str(), y.as_str());
    }
    let g = b.build().map_err(|e| doc_err(format!("{what}: {e}")))?;
    if !doc.constraint && !g.compatible() {
        return Err(doc_err(format!("{what} has dangling edges")));
    }
    Ok(g)
}

fn pairs(edges: &[(ElemId, ElemId)]) -> Vec<(String, String)> {
    edges
        .iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

fn graph_doc(g: &TypedGraph, forbid: Vec<(String, String)>, constraint: bool) -> GraphDoc {
    GraphDoc {
        nodes: g
            .node_ids()
            .iter()
            .map(|n| NodeDoc {
                id: n.to_string(),
                ty: type_string(g.types_of(n).expect("typed")),
            })
            .collect(),
        edges: pairs(&g.edge_list()),
        forbid,
        constraint,
    }
}

fn multigraph_from(doc: &MultiGraphDoc) -> Result<MultiGraph> {
    let mut m = MultiGraph::new();
    for n in &doc.nodes {
        m.add_node(n.id.as_str(), type_set(&n.ty)?)?;
    }
    for e in &doc.edges {
        m.add_named_edge(
            e.id.as_str(),
            &ElemId::new(&e.source),
            &ElemId::new(&e.target),
        )?;
    }
    Ok(m)
}

fn multigraph_doc(m: &MultiGraph) -> MultiGraphDoc {
    MultiGraphDoc {
        nodes: m
            .nodes()
            .iter()
            .map(|(id, t)| NodeDoc {
                id: id.to_string(),
                ty: type_string(t),
            })
            .collect(),
        edges: m
            .edges()
            .iter()
            .map(|(id, (s, t))| MultiEdgeDoc {
                id: id.to_string(),
                source: s.to_string(),
                target: t.to_string(),
            })
            .collect(),
    }
}

impl GrammarDocument {
    pub fn parse(text: &str) -> Result<GrammarDocument> {
        let raw: Raw = toml::from_str(text).map_err(|e| doc_err(e.to_string()))?;
        GrammarDocument::from_raw(&raw)
    }

    pub fn load(path: &Path) -> Result<GrammarDocument> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| doc_err(format!("{}: {e}", path.display())))?;
        GrammarDocument::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_raw()).expect("documents serialize")
    }

    fn from_raw(raw: &Raw) -> Result<GrammarDocument> {
        let mut seen = BTreeSet::new();
        let names = raw
            .graphs
            .keys()
            .chain(raw.rules.keys())
            .chain(raw.conditions.keys())
            .chain(raw.sequences.keys())
            .chain(raw.multigraphs.keys())
            .chain(raw.multirules.keys());
        for n in names {
            if !seen.insert(n) {
                return Err(doc_err(format!("name {n} is used twice")));
            }
        }
        let declared: BTreeSet<&str> = raw.types.iter().map(String::as_str).collect();
        let check_types = |ty: &str, what: &str| -> Result<()> {
            for t in ty.split('|').map(str::trim) {
                if t != MULTINODE && !declared.contains(t) {
                    return Err(doc_err(format!("{what} uses undeclared type {t}")));
                }
            }
            Ok(())
        };
        let all_graphs =
            raw.graphs
                .iter()
                .map(|(k, g)| (k.clone(), g))
                .chain(raw.rules.iter().flat_map(|(k, r)| {
                    [(format!("{k}.lhs"), &r.lhs), (format!("{k}.rhs"), &r.rhs)]
                }))
                .chain(
                    raw.conditions.iter().flat_map(|(k, c)| {
                        c.graphs.iter().map(move |(v, g)| (format!("{k}.{v}"), g))
                    }),
                );
        for (what, g) in all_graphs {
            for n in &g.nodes {
                check_types(&n.ty, &what)?;
            }
        }
        for (k, m) in raw.multigraphs.iter().chain(
            raw.multirules
                .iter()
                .flat_map(|(k, r)| [(k, &r.lhs), (k, &r.rhs)]),
        ) {
            for n in &m.nodes {
                check_types(&n.ty, k)?;
            }
        }

        let mut doc = GrammarDocument {
            types: raw.types.clone(),
            ..GrammarDocument::default()
        };
        for (name, g) in &raw.graphs {
            let graph = graph_from(g, name)?;
            if !g.forbid.is_empty() {
                return Err(doc_err(format!(
                    "graph {name}: forbid edges belong to rules and conditions"
                )));
            }
            doc.graphs.insert(
                name.clone(),
                GraphEntry {
                    graph,
                    constraint: g.constraint,
                },
            );
        }
        for (name, r) in &raw.rules {
            let lhs = graph_from(&r.lhs, &format!("{name}.lhs"))?;
            let rhs = graph_from(&r.rhs, &format!("{name}.rhs"))?;
            let ident: NodeMap = r
                .identify
                .iter()
                .map(|(a, b)| (ElemId::new(a), ElemId::new(b)))
                .collect();
            let forbid: Vec<(ElemId, ElemId)> = r
                .lhs
                .forbid
                .iter()
                .map(|(a, b)| (ElemId::new(a), ElemId::new(b)))
                .collect();
            if !r.rhs.forbid.is_empty() {
                return Err(doc_err(format!(
                    "rule {name}: forbidden edges go on the left hand side"
                )));
            }
            let p = Production::with_nihil(name.clone(), &lhs, &rhs, &ident, Some(&forbid))
                .map_err(|e| doc_err(format!("rule {name}: {e}")))?;
            doc.rules.insert(name.clone(), p);
        }
        for (name, c) in &raw.conditions {
            let condition = doc.condition_from(name, c)?;
            doc.conditions.insert(
                name.clone(),
                ConditionEntry {
                    condition,
                    rule: c.rule.clone(),
                },
            );
        }
        for (name, s) in &raw.sequences {
            for r in &s.rules {
                if !doc.rules.contains_key(r) {
                    return Err(doc_err(format!("sequence {name}: unknown rule {r}")));
                }
            }
            let entry = SequenceEntry {
                rules: s.rules.clone(),
                identify: s
                    .identify
                    .iter()
                    .map(|g| g.iter().map(|(i, n)| (*i, ElemId::new(n))).collect())
                    .collect(),
            };
            doc.sequences.insert(name.clone(), entry);
            doc.sequence(name)
                .map_err(|e| doc_err(format!("sequence {name}: {e}")))?;
        }
        for (name, m) in &raw.multigraphs {
            doc.multigraphs.insert(name.clone(), multigraph_from(m)?);
        }
        for (name, r) in &raw.multirules {
            doc.multirules.insert(
                name.clone(),
                MultiRule {
                    name: name.clone(),
                    lhs: multigraph_from(&r.lhs)?,
                    rhs: multigraph_from(&r.rhs)?,
                },
            );
        }
        Ok(doc)
    }

    fn condition_from(&self, name: &str, c: &ConditionDoc) -> Result<Condition> {
        let ctx = |e: Error| doc_err(format!("condition {name}: {e}"));
        let mut d = Diagram::new();
        for (v, g) in &c.graphs {
            let graph = graph_from(
                &GraphDoc {
                    constraint: true,
                    ..g.clone()
                },
                &format!("{name}.{v}"),
            )?;
            let var = Variable::from_graph(&graph)
                .with_nihil(g.forbid.iter().map(|(a, b)| (a.as_str(), b.as_str())))
                .map_err(ctx)?;
            d = d.with_var(v.clone(), var);
        }
        for m in &c.morphisms {
            d = d.with_morphism(
                &m.from,
                &m.to,
                m.map.iter().map(|(a, b)| (a.as_str(), b.as_str())),
            );
        }
        let f = Formula::parse(&c.formula).map_err(ctx)?;
        match (&c.rule, c.stage) {
            (None, None) => Condition::constraint(d, f),
            (Some(r), stage) => {
                let p = self
                    .rules
                    .get(r)
                    .ok_or_else(|| doc_err(format!("condition {name}: unknown rule {r}")))?;
                if stage == Some(StageDoc::Post) {
                    Condition::post(p, d, f)
                } else {
                    Condition::pre(p, d, f)
                }
            }
            (None, Some(_)) => {
                return Err(doc_err(format!("condition {name}: a stage needs a rule")))
            }
        }
        .map_err(ctx)
    }

    fn to_raw(&self) -> Raw {
        let mut raw = Raw {
            types: self.types.clone(),
            ..Raw::default()
        };
        for (name, g) in &self.graphs {
            raw.graphs
                .insert(name.clone(), graph_doc(&g.graph, Vec::new(), g.constraint));
        }
        for (name, p) in &self.rules {
            let derived = Production::from_static(name.clone(), p.lhs(), p.rhs(), &NodeMap::new())
                .expect("valid rule");
            let lhs_nodes = p.lhs().node_ids();
            let extra: Vec<(ElemId, ElemId)> = p
                .nihil()
                .edge_list()
                .into_iter()
                .filter(|(a, b)| {
                    !derived.nihil().has_edge(a, b)
                        && lhs_nodes.contains(a)
                        && lhs_nodes.contains(b)
                })
                .collect();
            raw.rules.insert(
                name.clone(),
                RuleDoc {
                    lhs: graph_doc(&p.lhs().compact(), pairs(&extra), false),
                    rhs: graph_doc(&p.rhs().compact(), Vec::new(), false),
                    identify: Vec::new(),
                },
            );
        }
        for (name, entry) in &self.conditions {
            let c = &entry.condition;
            let stage = match c.anchor {
                Anchor::None => None,
                Anchor::Pre(_) => Some(StageDoc::Pre),
                Anchor::Post(_) => Some(StageDoc::Post),
            };
            let graphs = c
                .diagram
                .vars
                .iter()
                .filter(|(_, v)| !v.is_anchor())
                .map(|(k, v)| {
                    let certain: Vec<_> = v.certain.iter().cloned().collect();
                    let nihil: Vec<_> = v.nihil.iter().cloned().collect();
                    let mut g = graph_doc(&v.graph(), pairs(&nihil), false);
                    g.edges = pairs(&certain);
                    (k.clone(), g)
                })
                .collect();
            let morphisms = c
                .diagram
                .morphisms
                .iter()
                .map(|DiagramMorphism { from, to, map }| MorphismDoc {
                    from: from.clone(),
                    to: to.clone(),
                    map: map
                        .iter()
                        .map(|(a, b)| (a.to_string(), b.to_string()))
                        .collect(),
                })
                .collect();
            raw.conditions.insert(
                name.clone(),
                ConditionDoc {
                    rule: entry.rule.clone(),
                    stage,
                    formula: c.body().to_string(),
                    graphs,
                    morphisms,
                },
            );
        }
        for (name, s) in &self.sequences {
            raw.sequences.insert(
                name.clone(),
                SequenceDoc {
                    rules: s.rules.clone(),
                    identify: s
                        .identify
                        .iter()
                        .map(|g| g.iter().map(|(i, n)| (*i, n.to_string())).collect())
                        .collect(),
                },
            );
        }
        for (name, m) in &self.multigraphs {
            raw.multigraphs.insert(name.clone(), multigraph_doc(m));
        }
        for (name, r) in &self.multirules {
            raw.multirules.insert(
                name.clone(),
                MultiRuleDoc {
                    lhs: multigraph_doc(&r.lhs),
                    rhs: multigraph_doc(&r.rhs),
                },
            );
        }
        raw
    }

    pub fn graph(&self, name: &str) -> Result<&TypedGraph> {
        self.graphs
            .get(name)
            .map(|g| &g.graph)
            .ok_or_else(|| doc_err(format!("no graph named {name}")))
    }

    pub fn rule(&self, name: &str) -> Result<&Production> {
        self.rules
            .get(name)
            .ok_or_else(|| doc_err(format!("no rule named {name}")))
    }

    pub fn condition(&self, name: &str) -> Result<&Condition> {
        self.conditions
            .get(name)
            .map(|c| &c.condition)
            .ok_or_else(|| doc_err(format!("no condition named {name}")))
    }

    pub fn sequence(&self, name: &str) -> Result<CompletedSequence> {
        let s = self
            .sequences
            .get(name)
            .ok_or_else(|| doc_err(format!("no sequence named {name}")))?;
        let rules: Vec<Production> = s
            .rules
            .iter()
            .map(|r| self.rule(r).cloned())
            .collect::<Result<_>>()?;
        CompletedSequence::identified(&rules, &s.identify)
    }

    /// Rules of a sequence in application order.
    pub fn sequence_rules(&self, name: &str) -> Result<Vec<Production>> {
        let s = self
            .sequences
            .get(name)
            .ok_or_else(|| doc_err(format!("no sequence named {name}")))?;
        s.rules.iter().map(|r| self.rule(r).cloned()).collect()
    }

    pub fn multigraph(&self, name: &str) -> Result<&MultiGraph> {
        self.multigraphs
            .get(name)
            .ok_or_else(|| doc_err(format!("no multigraph named {name}")))
    }

    pub fn multirule(&self, name: &str) -> Result<&MultiRule> {
        self.multirules
            .get(name)
            .ok_or_else(|| doc_err(format!("no multidigraph rule named {name}")))
    }

    /// Stage of a named application condition.
    pub fn stage_of(&self, name: &str) -> Result<Option<Stage>> {
        Ok(match self.condition(name)?.anchor {
            Anchor::None => None,
            Anchor::Pre(_) => Some(Stage::Pre),
            Anchor::Post(_) => Some(Stage::Post),
        })
    }
}
