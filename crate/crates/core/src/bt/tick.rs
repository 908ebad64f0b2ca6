use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{BtError, BtNode, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TickStatus {
    Success,
    Failure,
    Running,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TickOutcome {
    pub status: TickStatus,
    /// The action leaf that returned `Running` this tick, if any.
    pub active_action: Option<String>,
}

/// Read-only view of the condition results for one tick.
pub trait ConditionSource {
    fn condition(&self, id: &str) -> Option<bool>;
}

impl ConditionSource for BTreeMap<String, bool> {
    fn condition(&self, id: &str) -> Option<bool> {
        self.get(id).copied()
    }
}

impl ConditionSource for HashMap<String, bool> {
    fn condition(&self, id: &str) -> Option<bool> {
        self.get(id).copied()
    }
}

impl<F: Fn(&str) -> Option<bool>> ConditionSource for F {
    fn condition(&self, id: &str) -> Option<bool> {
        self(id)
    }
}

/// Ticks `tree` once from the root.
///
/// Every condition in the tree must have a result, ticked or not, so that a
/// misconfigured tree fails on the first tick rather than when an unusual
/// branch is reached.
pub fn tick(tree: &BtNode, conditions: &impl ConditionSource) -> Result<TickOutcome, BtError> {
    if let Some(missing) = tree.condition_ids().into_iter().find(|id| conditions.condition(id).is_none()) {
        return Err(BtError::MissingCondition(missing));
    }
    let mut active_action = None;
    let status = tick_node(tree, conditions, &mut active_action);
    Ok(TickOutcome { status, active_action })
}

fn tick_node(node: &BtNode, conditions: &impl ConditionSource, active: &mut Option<String>) -> TickStatus {
    match node.kind() {
        NodeKind::Condition(id) => {
            // presence checked up front
            if conditions.condition(id).unwrap_or(false) {
                TickStatus::Success
            } else {
                TickStatus::Failure
            }
        }
        NodeKind::Action(id) => {
            *active = Some(id.clone());
            TickStatus::Running
        }
        NodeKind::Fallback => {
            for child in node.children() {
                match tick_node(child, conditions, active) {
                    TickStatus::Failure => continue,
                    other => return other,
                }
            }
            TickStatus::Failure
        }
        NodeKind::Sequence => {
            for child in node.children() {
                match tick_node(child, conditions, active) {
                    TickStatus::Success => continue,
                    other => return other,
                }
            }
            TickStatus::Success
        }
    }
}
