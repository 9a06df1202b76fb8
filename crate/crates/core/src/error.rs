use thiserror::Error;

use crate::matrix::ElemId;

/// Errors raised by the rewriting engine.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("operands live on different universes; complete them first")]
    UniverseMismatch,

    #[error("identification is not injective: {first} and {second} both map to {target}")]
    NonInjectiveIdentification {
        first: ElemId,
        second: ElemId,
        target: ElemId,
    },

    #[error("unknown element {0}")]
    UnknownElement(ElemId),

    #[error("duplicate element {0}")]
    DuplicateElement(ElemId),

    #[error("type clash on {0}: operation not allowed (empty type intersection)")]
    TypeClash(ElemId),

    #[error("empty type set")]
    EmptyTypeSet,

    #[error("invalid match: {0}")]
    InvalidMatch(String),

    #[error("dangling edges would remain: {}", fmt_edges(.0))]
    DanglingEdges(Vec<(ElemId, ElemId)>),

    #[error("sequence is not a permutation of the other")]
    NotAPermutation,

    #[error("malformed formula: {0}")]
    MalformedFormula(String),

    #[error("unbound graph variable {0}")]
    UnboundVariable(String),

    #[error("Q atom over edgeless graph {0} is undefined")]
    EdgelessQ(String),

    #[error("formula has the wrong shape for this operator: {0}")]
    WrongShape(String),

    #[error("diagram is not well defined: {0}")]
    IllDefinedDiagram(String),

    #[error("branch cap of {0} exceeded during expansion")]
    BranchCapExceeded(usize),

    #[error("closure needs a host graph or node budget")]
    UnboundedClosure,

    #[error("condition is inconsistent with the rule: {0}")]
    Inconsistent(String),

    #[error("graph violates the multidigraph constraint: {0}")]
    NotAMultigraph(String),

    #[error("invalid rule: {0}")]
    InvalidRule(String),

    #[error("document error: {0}")]
    Document(String),
}

fn fmt_edges(edges: &[(ElemId, ElemId)]) -> String {
    edges
        .iter()
        .map(|(a, b)| format!("({a},{b})"))
        .collect::<Vec<_>>()
        .join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;
