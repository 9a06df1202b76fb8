//! Consistency, coherence and compatibility of a condition on a host.

use std::collections::BTreeSet;

use super::ops::{compile, CompileOptions};
use super::Condition;
use crate::digraph::TypedGraph;
use crate::error::{Error, Result};
use crate::matching::NodeMap;
use crate::matrix::ElemId;
use crate::sequence::{applicable, CompletedSequence, ConflictKind, Sharing};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConditionReport {
    /// Some compiled sequence is applicable to the host.
    pub consistent: bool,
    /// Some sequence, with its free nodes placed in the host, has no rule
    /// that removes what a later rule needs or adds what it forbids.
    pub coherent: bool,
    /// Some such placement leaves no dangling edge and adds no edge twice.
    pub compatible: bool,
    pub sequences: usize,
}

/// Placements tried per sequence before giving up on finding a witness.
const COMPLETION_BUDGET: usize = 20_000;

pub fn check_condition(
    c: &Condition,
    host: &TypedGraph,
    opts: &CompileOptions,
) -> Result<ConditionReport> {
    let branches = compile(c, Some(host), opts)?;
    let mut report = ConditionReport {
        consistent: false,
        coherent: false,
        compatible: false,
        sequences: branches.len(),
    };
    for b in &branches {
        report.consistent |= applicable(&b.sequence, host);
        if report.coherent && report.compatible {
            continue;
        }
        let (coh, comp) = completions(&b.sequence, host)?;
        report.coherent |= coh;
        report.compatible |= comp;
    }
    Ok(report)
}

/// Analyze the sequence under every placement of its free nodes into the
/// host (created nodes stay symbolic) and report whether some placement is
/// coherent and whether some placement is compatible.
fn completions(s: &CompletedSequence, host: &TypedGraph) -> Result<(bool, bool)> {
    let created: BTreeSet<ElemId> = s.rules().iter().flat_map(|r| r.added_nodes()).collect();
    let free: Vec<ElemId> = s
        .universe()
        .ids()
        .iter()
        .filter(|g| !created.contains(*g) && !s.pins().contains_key(*g))
        .cloned()
        .collect();
    let apart: BTreeSet<(ElemId, ElemId)> = match s.sharing() {
        Sharing::Open { apart } => apart.clone(),
        Sharing::Explicit => BTreeSet::new(),
    };
    let mut state = Walk {
        s,
        host,
        free,
        apart,
        budget: COMPLETION_BUDGET,
        coherent: false,
        compatible: false,
    };
    let mut sigma = s.pins().clone();
    state.step(0, &mut sigma)?;
    Ok((state.coherent, state.compatible))
}

struct Walk<'a> {
    s: &'a CompletedSequence,
    host: &'a TypedGraph,
    free: Vec<ElemId>,
    apart: BTreeSet<(ElemId, ElemId)>,
    budget: usize,
    coherent: bool,
    compatible: bool,
}

impl Walk<'_> {
    fn step(&mut self, k: usize, sigma: &mut NodeMap) -> Result<()> {
        if self.budget == 0 || (self.coherent && self.compatible) {
            return Ok(());
        }
        if k == self.free.len() {
            self.budget -= 1;
            return self.analyze(sigma);
        }
        let g = self.free[k].clone();
        let ty = self.s.typing()[&g].clone();
        for h in self.host.node_ids() {
            if !self.host.types_of(&h).is_some_and(|t| t.intersects(&ty)) {
                continue;
            }
            sigma.insert(g.clone(), h);
            if self.admissible(sigma) {
                self.step(k + 1, sigma)?;
            }
            sigma.remove(&g);
        }
        Ok(())
    }

    /// No rule sees two of its nodes merged and apart pairs stay apart.
    fn admissible(&self, sigma: &NodeMap) -> bool {
        let image = |g: &ElemId| sigma.get(g).cloned().unwrap_or_else(|| g.clone());
        for r in self.s.rules() {
            let mut seen = BTreeSet::new();
            for n in r.universe().ids() {
                if sigma.contains_key(n) && !seen.insert(image(n)) {
                    return false;
                }
            }
        }
        self.apart
            .iter()
            .all(|(a, b)| !(sigma.contains_key(a) && sigma.contains_key(b)) || image(a) != image(b))
    }

    fn analyze(&mut self, sigma: &NodeMap) -> Result<()> {
        let mut rules = Vec::new();
        for r in self.s.rules() {
            let map: NodeMap = r
                .universe()
                .ids()
                .iter()
                .filter_map(|n| sigma.get(n).map(|h| (n.clone(), h.clone())))
                .collect();
            rules.push(r.rename(&map)?);
        }
        let ground = match CompletedSequence::new(rules) {
            Ok(s) => s,
            Err(Error::TypeClash(_)) => return Ok(()),
            Err(e) => return Err(e),
        };
        let report = ground.analyze();
        let kinds: BTreeSet<ConflictKind> = report.conflicts.iter().map(|c| c.kind).collect();
        self.coherent |= !kinds.contains(&ConflictKind::MissingRequired)
            && !kinds.contains(&ConflictKind::ForbiddenPresent);
        self.compatible |=
            !kinds.contains(&ConflictKind::Dangling) && !kinds.contains(&ConflictKind::DoubleAdd);
        Ok(())
    }
}
