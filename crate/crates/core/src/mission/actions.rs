//! Nominal controllers `k(x)` for the mission actions.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::Vec2;
use crate::world::WorldState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    AvoidCollisions,
    SearchCharger,
    DockWithCharger,
    Rendezvous,
    ExecuteCoverage,
    GotoPoint,
    GotoPointConserving,
    AvoidUnsafeArea,
}

impl ActionKind {
    pub const ALL: [ActionKind; 8] = [
        ActionKind::AvoidCollisions,
        ActionKind::SearchCharger,
        ActionKind::DockWithCharger,
        ActionKind::Rendezvous,
        ActionKind::ExecuteCoverage,
        ActionKind::GotoPoint,
        ActionKind::GotoPointConserving,
        ActionKind::AvoidUnsafeArea,
    ];

    pub fn id(self) -> &'static str {
        match self {
            ActionKind::AvoidCollisions => "avoid_collisions",
            ActionKind::SearchCharger => "search_charger",
            ActionKind::DockWithCharger => "dock_with_charger",
            ActionKind::Rendezvous => "rendezvous",
            ActionKind::ExecuteCoverage => "execute_coverage",
            ActionKind::GotoPoint => "goto_point",
            ActionKind::GotoPointConserving => "goto_point_conserving",
            ActionKind::AvoidUnsafeArea => "avoid_unsafe_area",
        }
    }

    pub fn nominal(self, world: &WorldState, agent: usize) -> Vec2 {
        let p = &world.params;
        let state = &world.agents[agent];
        match self {
            ActionKind::AvoidCollisions => flee(world, agent, p.m_s),
            ActionKind::AvoidUnsafeArea => flee(world, agent, p.m_p),
            ActionKind::SearchCharger => match world.home_position(agent) {
                Some(q) => toward(world, agent, q, p.v_max),
                None => Vec2::ZERO,
            },
            ActionKind::DockWithCharger => match world.home_position(agent) {
                Some(q) if state.x.distance(q) > p.r_dock => toward(world, agent, q, p.v_max),
                _ => Vec2::ZERO,
            },
            ActionKind::Rendezvous => match nearest_peer(world, agent) {
                Some(j) => toward(world, agent, world.agents[j].x, p.v_max),
                None => Vec2::ZERO,
            },
            ActionKind::ExecuteCoverage => match state.current_waypoint() {
                Some(wp) => toward(world, agent, wp, p.v_max),
                None => Vec2::ZERO,
            },
            ActionKind::GotoPoint => goal(world, agent, p.v_max),
            ActionKind::GotoPointConserving => goal(world, agent, 0.5 * p.v_max),
        }
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown action `{0}`")]
pub struct UnknownAction(pub String);

impl FromStr for ActionKind {
    type Err = UnknownAction;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActionKind::ALL.into_iter().find(|a| a.id() == s).ok_or_else(|| UnknownAction(s.to_string()))
    }
}

/// Velocity toward `target` at `speed`, slowed so one step does not overshoot.
fn toward(world: &WorldState, agent: usize, target: Vec2, speed: f64) -> Vec2 {
    let delta = target - world.agents[agent].x;
    let Some(e) = delta.normalized() else {
        return Vec2::ZERO;
    };
    e * speed.min(delta.norm() / world.params.dt)
}

fn goal(world: &WorldState, agent: usize, speed: f64) -> Vec2 {
    let state = &world.agents[agent];
    match state.waypoints.last() {
        Some(&g) if state.x.distance(g) > world.params.waypoint_tol => toward(world, agent, g, speed),
        _ => Vec2::ZERO,
    }
}

fn nearest_peer(world: &WorldState, agent: usize) -> Option<usize> {
    let x = world.agents[agent].x;
    let mut best: Option<(usize, f64)> = None;
    for (j, other) in world.agents.iter().enumerate() {
        let d = x.distance(other.x);
        if j != agent && best.is_none_or(|(_, bd)| d < bd) {
            best = Some((j, d));
        }
    }
    best.map(|(j, _)| j)
}

/// Full speed away from the entity with the most negative clearance below
/// `margin`; zero when nothing is closer than the margin.
fn flee(world: &WorldState, agent: usize, margin: f64) -> Vec2 {
    let x = world.agents[agent].x;
    let others = world.agents.iter().enumerate().filter(|&(j, _)| j != agent).map(|(_, a)| (a.x, 0.0));
    let obstacles = world.obstacles.iter().map(|o| (o.center, o.radius));
    let mut worst: Option<(f64, Vec2)> = None;
    for (p, radius) in others.chain(obstacles) {
        let clearance = x.distance(p) - radius - margin;
        if clearance < 0.0 && worst.is_none_or(|(c, _)| clearance < c) {
            worst = Some((clearance, p));
        }
    }
    match worst {
        // coincident with the centre: any direction is away
        Some((_, p)) => (x - p).normalized().unwrap_or(Vec2::new(1.0, 0.0)) * world.params.v_max,
        None => Vec2::ZERO,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{AgentState, Charger, Obstacle, WorldParams};

    fn world(positions: &[(f64, f64)]) -> WorldState {
        let mut w = WorldState::new(WorldParams::default());
        for &(x, y) in positions {
            w.agents.push(AgentState::new(Vec2::new(x, y), 80.0));
        }
        w
    }

    #[test]
    fn rendezvous_heads_for_nearest_peer() {
        let w = world(&[(0.0, 0.0), (10.0, 0.0), (0.0, -20.0)]);
        assert_eq!(ActionKind::Rendezvous.nominal(&w, 0), Vec2::new(1.0, 0.0));
        assert_eq!(ActionKind::Rendezvous.nominal(&world(&[(0.0, 0.0)]), 0), Vec2::ZERO);
    }

    #[test]
    fn goto_point_stops_at_goal() {
        let mut w = world(&[(5.0, 5.0)]);
        w.agents[0].waypoints = vec![Vec2::new(5.0, 5.0)];
        assert_eq!(ActionKind::GotoPoint.nominal(&w, 0), Vec2::ZERO);
        w.agents[0].waypoints = vec![Vec2::new(5.0, 15.0)];
        assert_eq!(ActionKind::GotoPoint.nominal(&w, 0), Vec2::new(0.0, 1.0));
        assert_eq!(ActionKind::GotoPointConserving.nominal(&w, 0), Vec2::new(0.0, 0.5));
    }

    #[test]
    fn approach_does_not_overshoot() {
        let mut w = world(&[(0.0, 0.0)]);
        w.agents[0].waypoints = vec![Vec2::new(0.05, 0.0), Vec2::new(9.0, 0.0)];
        let u = ActionKind::ExecuteCoverage.nominal(&w, 0);
        assert!((u - Vec2::new(0.5, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn docking_stops_inside_radius() {
        let mut w = world(&[(0.5, 0.0)]);
        w.chargers.push(Charger { id: "c".into(), position: Vec2::ZERO });
        w.agents[0].home_charger = Some(0);
        assert_eq!(ActionKind::DockWithCharger.nominal(&w, 0), Vec2::ZERO);
        assert!(ActionKind::SearchCharger.nominal(&w, 0).norm() > 0.0);
        w.agents[0].x = Vec2::new(0.0, 4.0);
        assert_eq!(ActionKind::DockWithCharger.nominal(&w, 0), Vec2::new(0.0, -1.0));
    }

    #[test]
    fn fleeing_uses_the_right_margin() {
        let mut w = world(&[(0.0, 0.0)]);
        w.obstacles.push(Obstacle { center: Vec2::new(3.0, 0.0), radius: 1.0 });
        // clearance 2: fine for m_s = 1, inside m_p = 3
        assert_eq!(ActionKind::AvoidCollisions.nominal(&w, 0), Vec2::ZERO);
        assert_eq!(ActionKind::AvoidUnsafeArea.nominal(&w, 0), Vec2::new(-1.0, 0.0));
    }

    #[test]
    fn ids_round_trip() {
        for a in ActionKind::ALL {
            assert_eq!(a.id().parse::<ActionKind>().unwrap(), a);
        }
        assert!("fly".parse::<ActionKind>().is_err());
    }
}
