use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{BtError, BtNode, NodeKind};

/// Boolean form of a condition subtree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BooleanExpr {
    Atom(String),
    And(Vec<BooleanExpr>),
    Or(Vec<BooleanExpr>),
}

impl BooleanExpr {
    pub fn atom(id: &str) -> Self {
        BooleanExpr::Atom(id.to_string())
    }

    pub fn eval(&self, truth: &impl Fn(&str) -> bool) -> bool {
        match self {
            BooleanExpr::Atom(id) => truth(id),
            BooleanExpr::And(xs) => xs.iter().all(|x| x.eval(truth)),
            BooleanExpr::Or(xs) => xs.iter().any(|x| x.eval(truth)),
        }
    }

    pub fn atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms(&self, out: &mut BTreeSet<String>) {
        match self {
            BooleanExpr::Atom(id) => {
                out.insert(id.clone());
            }
            BooleanExpr::And(xs) | BooleanExpr::Or(xs) => xs.iter().for_each(|x| x.collect_atoms(out)),
        }
    }
}

impl fmt::Display for BooleanExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (op, xs) = match self {
            BooleanExpr::Atom(id) => return f.write_str(id),
            BooleanExpr::And(xs) => (" AND ", xs),
            BooleanExpr::Or(xs) => (" OR ", xs),
        };
        f.write_str("(")?;
        for (i, x) in xs.iter().enumerate() {
            if i > 0 {
                f.write_str(op)?;
            }
            write!(f, "{x}")?;
        }
        f.write_str(")")
    }
}

/// Maps a condition subtree to a Boolean expression: conditions become atoms,
/// fallbacks become disjunctions and sequences conjunctions.
pub fn expand(subtree: &BtNode) -> Result<BooleanExpr, BtError> {
    match subtree.kind() {
        NodeKind::Condition(id) => Ok(BooleanExpr::Atom(id.clone())),
        NodeKind::Action(id) => {
            Err(BtError::ActionInConditionSubtree { subtree: subtree.label().to_string(), action: id.clone() })
        }
        NodeKind::Fallback | NodeKind::Sequence => {
            if subtree.children().is_empty() {
                return Err(BtError::Malformed {
                    label: subtree.label().to_string(),
                    reason: "control node needs at least one child".into(),
                });
            }
            let operands = subtree
                .children()
                .iter()
                .map(|c| {
                    expand(c).map_err(|e| match e {
                        BtError::ActionInConditionSubtree { action, .. } => {
                            BtError::ActionInConditionSubtree { subtree: subtree.label().to_string(), action }
                        }
                        other => other,
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(if matches!(subtree.kind(), NodeKind::Fallback) {
                BooleanExpr::Or(operands)
            } else {
                BooleanExpr::And(operands)
            })
        }
    }
}
