//! The two canonical missions: goal reaching past an obstacle, and
//! three-agent coverage with recharging.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::actions::{ActionKind, UnknownAction};
use super::barriers::*;
use super::conditions as c;
use crate::bt::{constraint_table, BooleanExpr, BtError, BtNode, ConstraintTable};
use crate::cbf::{Barrier, CbfRegistry, ClassK, ConditionCbf};
use crate::geometry::Vec2;
use crate::world::{AgentState, Charger, Obstacle, WorldParams, WorldState};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown scenario `{0}` (expected simple-a, simple-b, simple-c or coverage)")]
    UnknownScenario(String),
    #[error(transparent)]
    Tree(#[from] BtError),
    #[error(transparent)]
    Action(#[from] UnknownAction),
    #[error("condition `{0}` has no barrier")]
    UnknownCondition(String),
    #[error("invalid mission parameter: {0}")]
    InvalidParam(String),
}

/// Tuning that belongs to the barriers rather than the world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionParams {
    /// Class-K rate per condition id; missing ids use 1.
    pub gamma: BTreeMap<String, f64>,
    /// How far below zero the enforced battery reserve may run before the
    /// condition itself reports failure (charge units).
    pub battery_slack: f64,
}

impl Default for MissionParams {
    fn default() -> Self {
        Self { gamma: BTreeMap::new(), battery_slack: 0.0 }
    }
}

impl MissionParams {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (id, &g) in &self.gamma {
            if !c::ALL.contains(&id.as_str()) {
                return Err(ScenarioError::UnknownCondition(id.clone()));
            }
            if !(g.is_finite() && g > 0.0) {
                return Err(ScenarioError::InvalidParam(format!("gamma for `{id}` must be positive, got {g}")));
            }
        }
        if !(self.battery_slack.is_finite() && self.battery_slack >= 0.0) {
            return Err(ScenarioError::InvalidParam(format!("battery_slack must be >= 0, got {}", self.battery_slack)));
        }
        Ok(())
    }

    fn class_k(&self, condition: &str) -> ClassK {
        ClassK::linear(self.gamma.get(condition).copied().unwrap_or(1.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Policy {
    /// Tick a tree; `filtered = false` applies nominal controls unchanged.
    Tree { tree: BtNode, table: ConstraintTable, filtered: bool },
    /// One action with fixed priority levels and no switching.
    Concurrent { action: ActionKind, levels: Vec<BooleanExpr> },
}

impl Policy {
    pub fn tree(tree: BtNode, filtered: bool) -> Result<Self, ScenarioError> {
        let table = constraint_table(&tree)?;
        for id in tree.action_ids() {
            id.parse::<ActionKind>()?;
        }
        for id in tree.condition_ids() {
            if !c::ALL.contains(&id.as_str()) {
                return Err(ScenarioError::UnknownCondition(id));
            }
        }
        Ok(Policy::Tree { tree, table, filtered })
    }
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub world: WorldState,
    pub policy: Policy,
    pub mission: MissionParams,
    /// Actions making up the recharge subtree.
    pub recharge_actions: BTreeSet<ActionKind>,
    pub max_ticks: u64,
}

impl Scenario {
    /// Barriers for every known condition, from `agent`'s point of view.
    pub fn registry(&self, agent: usize) -> CbfRegistry {
        build_registry(&self.world, &self.mission, agent)
    }

    pub fn registries(&self) -> Vec<CbfRegistry> {
        (0..self.world.agents.len()).map(|i| self.registry(i)).collect()
    }

    /// Condition ids whose truth is evaluated and logged each tick.
    pub fn condition_ids(&self) -> BTreeSet<String> {
        match &self.policy {
            Policy::Tree { tree, .. } => tree.condition_ids(),
            Policy::Concurrent { levels, .. } => levels.iter().flat_map(|l| l.atoms()).collect(),
        }
    }
}

fn clearance_atoms(world: &WorldState, agent: usize, margin: f64, prefix: &str, k: ClassK) -> Vec<Box<dyn Barrier>> {
    let mut atoms: Vec<Box<dyn Barrier>> = Vec::new();
    for j in (0..world.agents.len()).filter(|&j| j != agent) {
        atoms.push(Box::new(AgentClearance { id: format!("{prefix}/agent-{j}"), other: j, margin, class_k: k }));
    }
    for o in 0..world.obstacles.len() {
        atoms.push(Box::new(ObstacleClearance {
            id: format!("{prefix}/obstacle-{o}"),
            obstacle: o,
            margin,
            class_k: k,
        }));
    }
    atoms
}

pub fn build_registry(world: &WorldState, mission: &MissionParams, agent: usize) -> CbfRegistry {
    let p = &world.params;
    let k = |id: &str| mission.class_k(id);
    let mut r = CbfRegistry::new();
    r.insert(c::SAFE.into(), ConditionCbf::new(c::SAFE, clearance_atoms(world, agent, p.m_s, c::SAFE, k(c::SAFE))));
    r.insert(
        c::PREFERRED_MARGIN.into(),
        ConditionCbf::new(
            c::PREFERRED_MARGIN,
            clearance_atoms(world, agent, p.m_p, c::PREFERRED_MARGIN, k(c::PREFERRED_MARGIN)),
        ),
    );
    r.insert(
        c::BATTERY_TO_GOAL.into(),
        ConditionCbf::single(BatteryReserve {
            id: c::BATTERY_TO_GOAL.into(),
            target: ReserveTarget::Goal,
            class_k: k(c::BATTERY_TO_GOAL),
            slack: mission.battery_slack,
        }),
    );
    r.insert(c::AT_GOAL.into(), ConditionCbf::single(AtGoal { id: c::AT_GOAL.into(), class_k: k(c::AT_GOAL) }));
    let reach = k(c::CAN_REACH_CHARGER);
    r.insert(
        c::CAN_REACH_CHARGER.into(),
        ConditionCbf::new(
            c::CAN_REACH_CHARGER,
            vec![
                Box::new(BatteryReserve {
                    id: format!("{}/reserve", c::CAN_REACH_CHARGER),
                    target: ReserveTarget::HomeCharger,
                    class_k: reach,
                    slack: mission.battery_slack,
                }),
                Box::new(ChargeSession { id: format!("{}/session", c::CAN_REACH_CHARGER), class_k: reach }),
            ],
        ),
    );
    r.insert(
        c::CHARGER_VISIBLE.into(),
        ConditionCbf::single(ChargerVisible { id: c::CHARGER_VISIBLE.into(), class_k: k(c::CHARGER_VISIBLE) }),
    );
    r.insert(
        c::CONNECTED.into(),
        ConditionCbf::single(Connectivity { id: c::CONNECTED.into(), class_k: k(c::CONNECTED) }),
    );
    r.insert(
        c::COVERAGE_COMPLETE.into(),
        ConditionCbf::single(PlanComplete { id: c::COVERAGE_COMPLETE.into(), class_k: k(c::COVERAGE_COMPLETE) }),
    );
    r
}

fn pair(label: &str, condition: &str, action: BtNode) -> BtNode {
    BtNode::fallback(label, vec![BtNode::condition(c::describe(condition), condition), action])
}

fn act(kind: ActionKind) -> BtNode {
    BtNode::action(kind.id(), kind.id())
}

/// Four concurrent goals, safety first, goal last.
pub fn goal_reaching_tree() -> BtNode {
    BtNode::sequence(
        "Reach goal",
        vec![
            pair("Stay safe", c::SAFE, act(ActionKind::AvoidCollisions)),
            pair("Keep battery for goal", c::BATTERY_TO_GOAL, act(ActionKind::GotoPointConserving)),
            pair("Keep preferred margin", c::PREFERRED_MARGIN, act(ActionKind::AvoidUnsafeArea)),
            pair("Reach point", c::AT_GOAL, act(ActionKind::GotoPoint)),
        ],
    )
}

/// Coverage with a nested recharge subtree.
pub fn coverage_tree() -> BtNode {
    let recharge = BtNode::sequence(
        "Recharge",
        vec![
            pair("Find charger", c::CHARGER_VISIBLE, act(ActionKind::SearchCharger)),
            act(ActionKind::DockWithCharger),
        ],
    );
    BtNode::sequence(
        "Coverage mission",
        vec![
            pair("Stay safe", c::SAFE, act(ActionKind::AvoidCollisions)),
            pair("Keep charged", c::CAN_REACH_CHARGER, recharge),
            pair("Stay connected", c::CONNECTED, act(ActionKind::Rendezvous)),
            pair("Cover", c::COVERAGE_COMPLETE, act(ActionKind::ExecuteCoverage)),
        ],
    )
}

/// Boustrophedon over three vertical lanes at `x − w`, `x`, `x + w`.
pub fn lawnmower(x: f64, w: f64, y0: f64, y1: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(6);
    for (lane, lx) in [x - w, x, x + w].into_iter().enumerate() {
        let (a, b) = if lane % 2 == 0 { (y0, y1) } else { (y1, y0) };
        out.push(Vec2::new(lx, a));
        out.push(Vec2::new(lx, b));
    }
    out
}

fn simple_world() -> WorldState {
    let params = WorldParams { k_b: 1.0, m_b: 1.0, m_s: 1.0, m_p: 5.0, ..Default::default() };
    let mut world = WorldState::new(params);
    let mut agent = AgentState::new(Vec2::ZERO, 32.0);
    agent.waypoints = vec![Vec2::new(30.0, 0.0)];
    world.agents.push(agent);
    world.obstacles.push(Obstacle { center: Vec2::new(15.0, 1.0), radius: 2.0 });
    world
}

fn coverage_world() -> WorldState {
    let params = WorldParams { k_b: 0.7, m_b: 5.0, r_c: 27.0, r_v: 10.0, r_dock: 1.0, rho: 25.0, ..Default::default() };
    let mut world = WorldState::new(params);
    for (i, b) in [30.0, 100.0, 100.0].into_iter().enumerate() {
        let home = Vec2::new(10.0 * i as f64, -30.0);
        world.chargers.push(Charger { id: format!("charger-{i}"), position: home });
        let mut agent = AgentState::new(home, b);
        agent.home_charger = Some(i);
        agent.waypoints = lawnmower(home.x, 3.0, 0.0, 20.0);
        world.agents.push(agent);
    }
    // both sit just off the middle lane of the second agent
    world.obstacles.push(Obstacle { center: Vec2::new(10.6, 7.0), radius: 1.5 });
    world.obstacles.push(Obstacle { center: Vec2::new(9.5, 14.0), radius: 1.2 });
    world.refresh_docking();
    world
}

pub const SCENARIOS: [&str; 4] = ["simple-a", "simple-b", "simple-c", "coverage"];

pub fn build_scenario(name: &str) -> Result<Scenario, ScenarioError> {
    let (world, policy, mission, recharge, max_ticks) = match name {
        "simple-a" => (
            simple_world(),
            Policy::Concurrent {
                action: ActionKind::GotoPoint,
                levels: [c::SAFE, c::PREFERRED_MARGIN, c::AT_GOAL, c::BATTERY_TO_GOAL]
                    .into_iter()
                    .map(BooleanExpr::atom)
                    .collect(),
            },
            MissionParams::default(),
            BTreeSet::new(),
            1500,
        ),
        "simple-b" | "simple-c" => (
            simple_world(),
            Policy::tree(goal_reaching_tree(), name == "simple-c")?,
            MissionParams::default(),
            BTreeSet::new(),
            1500,
        ),
        "coverage" => (
            coverage_world(),
            Policy::tree(coverage_tree(), true)?,
            MissionParams { battery_slack: 2.0, ..Default::default() },
            BTreeSet::from([ActionKind::SearchCharger, ActionKind::DockWithCharger]),
            8000,
        ),
        other => return Err(ScenarioError::UnknownScenario(other.to_string())),
    };
    Ok(Scenario { name: name.to_string(), world, policy, mission, recharge_actions: recharge, max_ticks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn atoms(ids: &[&str]) -> Vec<BooleanExpr> {
        ids.iter().map(|id| BooleanExpr::atom(id)).collect()
    }

    #[test]
    fn goal_reaching_table() {
        let s = build_scenario("simple-c").unwrap();
        let Policy::Tree { table, filtered, .. } = &s.policy else { panic!("expected a tree") };
        assert!(*filtered);
        assert_eq!(table.get("avoid_collisions").unwrap(), atoms(&[]).as_slice());
        assert_eq!(table.get("goto_point_conserving").unwrap(), atoms(&[c::SAFE]).as_slice());
        assert_eq!(table.get("avoid_unsafe_area").unwrap(), atoms(&[c::SAFE, c::BATTERY_TO_GOAL]).as_slice());
        assert_eq!(
            table.get("goto_point").unwrap(),
            atoms(&[c::SAFE, c::BATTERY_TO_GOAL, c::PREFERRED_MARGIN]).as_slice()
        );
    }

    #[test]
    fn concurrent_variant_has_four_levels() {
        let s = build_scenario("simple-a").unwrap();
        assert!(matches!(&s.policy, Policy::Concurrent { levels, .. } if levels.len() == 4));
        let Policy::Tree { filtered, .. } = build_scenario("simple-b").unwrap().policy else { panic!() };
        assert!(!filtered);
    }

    #[test]
    fn coverage_setup() {
        let s = build_scenario("coverage").unwrap();
        assert_eq!(s.world.agents.len(), 3);
        assert_eq!(s.world.agents[0].b, 30.0);
        for (i, a) in s.world.agents.iter().enumerate() {
            assert_eq!(s.world.home_position(i), Some(a.x));
            assert!(a.docked && !a.charging);
            assert_eq!(a.waypoints.len(), 6);
        }
        s.world.params.validate().unwrap();
        assert!(build_scenario("nope").is_err());
    }

    #[test]
    fn lawnmower_visits_three_lanes() {
        let wps = lawnmower(10.0, 3.0, 0.0, 20.0);
        let xs: Vec<f64> = wps.iter().map(|w| w.x).collect();
        assert_eq!(xs, [7.0, 7.0, 10.0, 10.0, 13.0, 13.0]);
        let ys: Vec<f64> = wps.iter().map(|w| w.y).collect();
        assert_eq!(ys, [0.0, 20.0, 20.0, 0.0, 0.0, 20.0]);
    }

    #[test]
    fn registry_atoms() {
        let s = build_scenario("coverage").unwrap();
        let r = s.registry(1);
        // two peers and two obstacles
        assert_eq!(r[c::SAFE].atoms.len(), 4);
        assert!(c::ALL.iter().all(|id| r.contains_key(*id)));
        assert!(r[c::CAN_REACH_CHARGER].value(&s.world, 1).unwrap() > 0.0);
    }

    #[test]
    fn mission_param_checks() {
        let mut m = MissionParams::default();
        m.gamma.insert("warp".into(), 1.0);
        assert!(m.validate().is_err());
        let m = MissionParams { battery_slack: -1.0, ..Default::default() };
        assert!(m.validate().is_err());
    }
}
