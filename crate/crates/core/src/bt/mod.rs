//! Memoryless reactive behavior trees.
//!
//! A tree is a pure value: [`tick`] maps a tree and a snapshot of condition
//! results to a return status and the single action that is running. Nothing
//! is remembered between ticks, so the caller re-ticks from the root at every
//! control period.
//!
//! Besides ticking, this module knows the structure of Concurrent Goals trees
//! (a `Sequence` of `Fallback(condition, action)` pairs) and derives from it,
//! for every action, the ordered list of higher-priority condition expressions
//! that the action has to keep invariant.

mod cgbt;
mod expr;
mod node;
mod tick;

pub use cgbt::{constraint_table, validate_cg_bt, ConstraintRow, ConstraintTable, Diagnostic};
pub use expr::{expand, BooleanExpr};
pub use node::{BtNode, NodeKind};
pub use tick::{tick, ConditionSource, TickOutcome, TickStatus};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BtError {
    #[error("no result supplied for condition `{0}`")]
    MissingCondition(String),
    #[error("action `{action}` found inside condition subtree `{subtree}`")]
    ActionInConditionSubtree { subtree: String, action: String },
    #[error("malformed node `{label}`: {reason}")]
    Malformed { label: String, reason: String },
    #[error("duplicate node label `{0}`")]
    DuplicateLabel(String),
    #[error("tree is not a concurrent-goals tree: {}", format_diagnostics(.0))]
    NotCgBt(Vec<Diagnostic>),
}

fn format_diagnostics(diags: &[Diagnostic]) -> String {
    diags.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}
