//! Concurrent Goals trees: `Sequence(Fallback(C_1, A_1), ..., Fallback(C_N, A_N))`.
//!
//! `C_i` is any action-free condition subtree. `A_i` is an action leaf or a
//! nested concurrent-goals tree. The last child of a sequence may also be a
//! bare action when at least one pair precedes it; it behaves as a pair whose
//! condition never holds (this is how the docking step sits in the recharge
//! subtree).

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{expand, BooleanExpr, BtError, BtNode, NodeKind};

/// One structural problem, located by the label path from the root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintRow {
    pub action: String,
    /// Higher-priority condition expressions, highest priority first.
    pub constraints: Vec<BooleanExpr>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintTable {
    pub rows: Vec<ConstraintRow>,
}

impl ConstraintTable {
    pub fn get(&self, action: &str) -> Option<&[BooleanExpr]> {
        self.rows.iter().find(|r| r.action == action).map(|r| r.constraints.as_slice())
    }
}

/// Returns every violation of the concurrent-goals shape; empty means valid.
pub fn validate_cg_bt(tree: &BtNode) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    validate_level(tree, tree.label(), &mut diags);
    diags
}

fn push(diags: &mut Vec<Diagnostic>, path: &str, message: impl Into<String>) {
    diags.push(Diagnostic { path: path.to_string(), message: message.into() });
}

fn validate_level(node: &BtNode, path: &str, diags: &mut Vec<Diagnostic>) {
    if !matches!(node.kind(), NodeKind::Sequence) {
        push(diags, path, "a concurrent-goals tree must be rooted at a Sequence");
        return;
    }
    let n = node.children().len();
    for (i, child) in node.children().iter().enumerate() {
        let child_path = format!("{path}/{}", child.label());
        match child.kind() {
            NodeKind::Fallback => validate_pair(child, &child_path, diags),
            NodeKind::Action(_) if i + 1 == n && i > 0 => {}
            _ => push(diags, &child_path, "child of Sequence is not a Fallback(condition, action) pair"),
        }
    }
}

fn validate_pair(pair: &BtNode, path: &str, diags: &mut Vec<Diagnostic>) {
    let [condition, action] = pair.children() else {
        push(diags, path, format!("Fallback pair must have exactly 2 children, found {}", pair.children().len()));
        return;
    };
    let cond_path = format!("{path}/{}", condition.label());
    for id in condition.action_ids() {
        push(diags, &cond_path, format!("condition subtree contains action `{id}`"));
    }
    let act_path = format!("{path}/{}", action.label());
    match action.kind() {
        NodeKind::Action(_) => {}
        NodeKind::Sequence => validate_level(action, &act_path, diags),
        NodeKind::Condition(_) => push(diags, &act_path, "action slot holds a condition"),
        NodeKind::Fallback => push(diags, &act_path, "action slot must be an action or a nested Sequence"),
    }
}

/// Derives, for each action, the condition expressions it must keep invariant.
///
/// Within one level, the action of pair `i` inherits the expanded conditions of
/// pairs `1..i`. A nested tree in action position passes its own prefix down,
/// so constraints from the parent come first.
pub fn constraint_table(tree: &BtNode) -> Result<ConstraintTable, BtError> {
    let diags = validate_cg_bt(tree);
    if !diags.is_empty() {
        return Err(BtError::NotCgBt(diags));
    }
    let mut table = ConstraintTable::default();
    collect_rows(tree, Vec::new(), &mut table.rows)?;
    Ok(table)
}

fn collect_rows(level: &BtNode, inherited: Vec<BooleanExpr>, rows: &mut Vec<ConstraintRow>) -> Result<(), BtError> {
    let mut prefix = inherited;
    for child in level.children() {
        match child.kind() {
            NodeKind::Action(id) => rows.push(ConstraintRow { action: id.clone(), constraints: prefix.clone() }),
            _ => {
                let (condition, action) = (&child.children()[0], &child.children()[1]);
                match action.kind() {
                    NodeKind::Action(id) => {
                        rows.push(ConstraintRow { action: id.clone(), constraints: prefix.clone() })
                    }
                    _ => collect_rows(action, prefix.clone(), rows)?,
                }
                prefix.push(expand(condition)?);
            }
        }
    }
    Ok(())
}
