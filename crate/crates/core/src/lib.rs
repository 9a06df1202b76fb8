//! Boolean-matrix graph rewriting: typed simple digraphs, productions with
//! nihilation matrices, sequence analysis, application conditions and
//! multidigraph encoding.

pub mod conditions;
pub mod digraph;
pub mod document;
pub mod error;
pub mod matching;
pub mod matrix;
pub mod multigraph;
pub mod production;
pub mod sequence;

pub use conditions::{
    adapted_fixpoint, check_condition, compile, delocalize, post_to_pre, pre_to_post, satisfies,
    satisfies_at, Anchor, CompileOptions, Condition, ConditionReport, Diagram, Formula, Stage,
    Variable,
};
pub use digraph::{TypeSet, TypedGraph};
pub use document::GrammarDocument;
pub use error::{Error, Result};
pub use matching::{find_matches, iso, par_max, tot, Morphism, NodeMap};
pub use matrix::{BoolMatrix, BoolVector, ElemId, Universe};
pub use multigraph::{
    check_mc, decode, encode, lift_rule, xi_expand, MultiGraph, MultiRule, MULTINODE,
};
pub use production::{DerivationResult, Production};
pub use sequence::{applicable, g_congruent, CompletedSequence, SequenceReport};
