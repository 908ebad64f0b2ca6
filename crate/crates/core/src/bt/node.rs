use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::BtError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Fallback,
    Sequence,
    Action(String),
    Condition(String),
}

/// A behavior tree node. Interior nodes own their children in tick order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "NodeRecord", into = "NodeRecord")]
pub struct BtNode {
    kind: NodeKind,
    label: String,
    children: Vec<BtNode>,
}

impl BtNode {
    pub fn fallback(label: impl Into<String>, children: Vec<BtNode>) -> Self {
        Self { kind: NodeKind::Fallback, label: label.into(), children }
    }

    pub fn sequence(label: impl Into<String>, children: Vec<BtNode>) -> Self {
        Self { kind: NodeKind::Sequence, label: label.into(), children }
    }

    pub fn action(label: impl Into<String>, id: impl Into<String>) -> Self {
        Self { kind: NodeKind::Action(id.into()), label: label.into(), children: Vec::new() }
    }

    pub fn condition(label: impl Into<String>, id: impl Into<String>) -> Self {
        Self { kind: NodeKind::Condition(id.into()), label: label.into(), children: Vec::new() }
    }

    /// Leaf whose label doubles as its condition id.
    pub fn cond(id: &str) -> Self {
        Self::condition(id, id)
    }

    /// Leaf whose label doubles as its action id.
    pub fn act(id: &str) -> Self {
        Self::action(id, id)
    }

    pub fn kind(&self) -> &NodeKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn children(&self) -> &[BtNode] {
        &self.children
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Action(_) | NodeKind::Condition(_))
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a BtNode)) {
        visit(self);
        for child in &self.children {
            child.walk(visit);
        }
    }

    /// Distinct condition ids, sorted.
    pub fn condition_ids(&self) -> BTreeSet<String> {
        let mut ids = BTreeSet::new();
        self.walk(&mut |n| {
            if let NodeKind::Condition(id) = &n.kind {
                ids.insert(id.clone());
            }
        });
        ids
    }

    /// Action ids in tick (left-to-right) order.
    pub fn action_ids(&self) -> Vec<String> {
        let mut ids = Vec::new();
        self.walk(&mut |n| {
            if let NodeKind::Action(id) = &n.kind {
                ids.push(id.clone());
            }
        });
        ids
    }

    pub fn contains_action(&self) -> bool {
        !self.action_ids().is_empty()
    }

    /// Checks child-count rules on every node and label uniqueness across the tree.
    pub fn check_structure(&self) -> Result<(), BtError> {
        let mut seen = BTreeSet::new();
        let mut result = Ok(());
        self.walk(&mut |n| {
            if result.is_err() {
                return;
            }
            if let Err(e) = n.check_arity() {
                result = Err(e);
            } else if !seen.insert(n.label.as_str()) {
                result = Err(BtError::DuplicateLabel(n.label.clone()));
            }
        });
        result
    }

    fn check_arity(&self) -> Result<(), BtError> {
        let reason = match (&self.kind, self.children.len()) {
            (NodeKind::Fallback | NodeKind::Sequence, 0) => "control node needs at least one child",
            (NodeKind::Action(_) | NodeKind::Condition(_), n) if n > 0 => "leaf node cannot have children",
            _ => return Ok(()),
        };
        Err(BtError::Malformed { label: self.label.clone(), reason: reason.into() })
    }
}

/// On-disk form of a node: `{"kind": "sequence", "label": ..., "children": [...]}`
/// for control nodes, `{"kind": "condition", "label": ..., "condition": id}` and
/// `{"kind": "action", "label": ..., "action": id}` for leaves.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    kind: RecordKind,
    label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    children: Vec<BtNode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    condition: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum RecordKind {
    Fallback,
    Sequence,
    Action,
    Condition,
}

impl TryFrom<NodeRecord> for BtNode {
    type Error = BtError;

    fn try_from(r: NodeRecord) -> Result<Self, Self::Error> {
        let malformed = |reason: &str| BtError::Malformed { label: r.label.clone(), reason: reason.into() };
        let kind = match r.kind {
            RecordKind::Fallback | RecordKind::Sequence => {
                if r.condition.is_some() || r.action.is_some() {
                    return Err(malformed("control node cannot carry a condition or action id"));
                }
                if matches!(r.kind, RecordKind::Fallback) {
                    NodeKind::Fallback
                } else {
                    NodeKind::Sequence
                }
            }
            RecordKind::Action => match (&r.action, &r.condition) {
                (Some(id), None) => NodeKind::Action(id.clone()),
                _ => return Err(malformed("action leaf needs an `action` id and no `condition`")),
            },
            RecordKind::Condition => match (&r.condition, &r.action) {
                (Some(id), None) => NodeKind::Condition(id.clone()),
                _ => return Err(malformed("condition leaf needs a `condition` id and no `action`")),
            },
        };
        let node = BtNode { kind, label: r.label, children: r.children };
        node.check_arity()?;
        Ok(node)
    }
}

impl From<BtNode> for NodeRecord {
    fn from(n: BtNode) -> Self {
        let (kind, condition, action) = match n.kind {
            NodeKind::Fallback => (RecordKind::Fallback, None, None),
            NodeKind::Sequence => (RecordKind::Sequence, None, None),
            NodeKind::Action(id) => (RecordKind::Action, None, Some(id)),
            NodeKind::Condition(id) => (RecordKind::Condition, Some(id), None),
        };
        NodeRecord { kind, label: n.label, children: n.children, condition, action }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let tree = BtNode::sequence("root", vec![BtNode::fallback("pair", vec![BtNode::cond("c"), BtNode::act("a")])]);
        let text = serde_json::to_string(&tree).unwrap();
        let back: BtNode = serde_json::from_str(&text).unwrap();
        assert_eq!(back, tree);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_arity() {
        let unknown = r#"{"kind":"action","label":"a","action":"a","colour":"red"}"#;
        assert!(serde_json::from_str::<BtNode>(unknown).is_err());
        let empty_seq = r#"{"kind":"sequence","label":"s"}"#;
        assert!(serde_json::from_str::<BtNode>(empty_seq).is_err());
        let both_ids = r#"{"kind":"condition","label":"c","condition":"c","action":"a"}"#;
        assert!(serde_json::from_str::<BtNode>(both_ids).is_err());
    }

    #[test]
    fn duplicate_labels_are_reported() {
        let tree = BtNode::fallback("x", vec![BtNode::cond("x")]);
        assert_eq!(tree.check_structure(), Err(BtError::DuplicateLabel("x".into())));
    }
}
