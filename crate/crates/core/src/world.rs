//! Discrete-time world of kinematic point agents with batteries.
//!
//! Agents follow `x' = x + u·Δt` and drain `k_b·‖u‖·Δt` charge per step. An
//! agent within `r_dock` of its home charger gains `ρ·Δt` per step. Every
//! quantity read during [`step`] comes from the pre-step snapshot, so the
//! result does not depend on the order agents are visited in.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Vec2;

/// Full battery charge.
pub const BATTERY_CAPACITY: f64 = 100.0;

/// Tolerance on the saturation precondition of [`step`].
const SATURATION_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorldError {
    #[error("expected {expected} controls, got {got}")]
    ControlCount { expected: usize, got: usize },
    #[error("agent {agent}: control norm {norm} exceeds bound {bound}")]
    Unsaturated { agent: usize, norm: f64, bound: f64 },
    #[error("agent {agent}: non-finite control")]
    NonFinite { agent: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldParams {
    /// Tick period (s).
    pub dt: f64,
    /// Speed bound (m/s).
    pub v_max: f64,
    /// Charge spent per meter travelled.
    pub k_b: f64,
    /// Hard safety margin (m).
    pub m_s: f64,
    /// Preferred safety margin (m).
    pub m_p: f64,
    /// Battery margin (charge).
    pub m_b: f64,
    /// Communication radius (m).
    pub r_c: f64,
    /// Charger visibility radius (m).
    pub r_v: f64,
    /// Docking radius (m).
    pub r_dock: f64,
    /// Recharge rate while docked (charge/s).
    pub rho: f64,
    pub waypoint_tol: f64,
    /// Seabed sensing range (m). Recorded, not used by any controller.
    pub r_s: f64,
    /// Charge below this level counts as empty and is snapped to zero.
    pub depletion_level: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        Self {
            dt: 0.1,
            v_max: 1.0,
            k_b: 0.1,
            m_s: 1.0,
            m_p: 3.0,
            m_b: 5.0,
            r_c: 15.0,
            r_v: 10.0,
            r_dock: 1.0,
            rho: 25.0,
            waypoint_tol: 0.5,
            r_s: 5.0,
            depletion_level: 1e-3,
        }
    }
}

impl WorldParams {
    pub fn validate(&self) -> Result<(), WorldError> {
        let fields: [(&'static str, f64); 13] = [
            ("dt", self.dt),
            ("v_max", self.v_max),
            ("k_b", self.k_b),
            ("m_s", self.m_s),
            ("m_p", self.m_p),
            ("m_b", self.m_b),
            ("r_c", self.r_c),
            ("r_v", self.r_v),
            ("r_dock", self.r_dock),
            ("rho", self.rho),
            ("waypoint_tol", self.waypoint_tol),
            ("r_s", self.r_s),
            ("depletion_level", self.depletion_level),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(WorldError::InvalidParam { name, reason: format!("must be positive, got {value}") });
            }
        }
        if self.m_p <= self.m_s {
            return Err(WorldError::InvalidParam { name: "m_p", reason: "must exceed m_s".into() });
        }
        if self.r_dock >= self.r_v {
            return Err(WorldError::InvalidParam { name: "r_dock", reason: "must be below r_v".into() });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentState {
    pub x: Vec2,
    /// Charge in `[0, 100]`.
    pub b: f64,
    /// Within `r_dock` of the home charger.
    #[serde(default)]
    pub docked: bool,
    /// A charging session is in progress: the agent arrived at its charger
    /// and has not yet been topped up to capacity.
    #[serde(default)]
    pub charging: bool,
    #[serde(default)]
    pub home_charger: Option<usize>,
    #[serde(default)]
    pub waypoints: Vec<Vec2>,
    #[serde(default)]
    pub waypoint_index: usize,
}

impl AgentState {
    pub fn new(x: Vec2, b: f64) -> Self {
        Self { x, b, docked: false, charging: false, home_charger: None, waypoints: Vec::new(), waypoint_index: 0 }
    }

    pub fn current_waypoint(&self) -> Option<Vec2> {
        self.waypoints.get(self.waypoint_index).copied()
    }

    pub fn plan_complete(&self) -> bool {
        self.waypoint_index >= self.waypoints.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Obstacle {
    pub center: Vec2,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Charger {
    pub id: String,
    pub position: Vec2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub agents: Vec<AgentState>,
    pub obstacles: Vec<Obstacle>,
    pub chargers: Vec<Charger>,
    pub tick: u64,
    pub params: WorldParams,
}

impl WorldState {
    pub fn new(params: WorldParams) -> Self {
        Self { agents: Vec::new(), obstacles: Vec::new(), chargers: Vec::new(), tick: 0, params }
    }

    /// Simulated time, always `tick·Δt`.
    pub fn time(&self) -> f64 {
        self.tick as f64 * self.params.dt
    }

    pub fn home_position(&self, agent: usize) -> Option<Vec2> {
        self.agents[agent].home_charger.and_then(|c| self.chargers.get(c)).map(|c| c.position)
    }

    /// Recomputes `docked` for every agent from its position.
    pub fn refresh_docking(&mut self) {
        for i in 0..self.agents.len() {
            let docked = self.within_dock(i, self.agents[i].x);
            self.agents[i].docked = docked;
        }
    }

    fn within_dock(&self, agent: usize, x: Vec2) -> bool {
        self.home_position(agent).is_some_and(|q| x.distance(q) <= self.params.r_dock)
    }

    /// Smallest distance between any two agents, `+∞` for fewer than two.
    pub fn min_pairwise_distance(&self) -> f64 {
        let mut best = f64::INFINITY;
        for (i, a) in self.agents.iter().enumerate() {
            for b in &self.agents[i + 1..] {
                best = best.min(a.x.distance(b.x));
            }
        }
        best
    }
}

/// Battery accounting for one agent over one step.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BatteryDelta {
    pub drained: f64,
    pub recharged: f64,
    /// Charge added (+) or removed (-) by clamping to `[0, 100]` or by the
    /// depletion snap. Zero on ordinary steps.
    pub clamp_adjustment: f64,
}

/// Advances the world by one tick. Controls must already be saturated to
/// `min(v_max, b)` for each agent.
pub fn step(world: &WorldState, controls: &[Vec2]) -> Result<(WorldState, Vec<BatteryDelta>), WorldError> {
    if controls.len() != world.agents.len() {
        return Err(WorldError::ControlCount { expected: world.agents.len(), got: controls.len() });
    }
    let p = &world.params;
    let mut next = world.clone();
    let mut deltas = Vec::with_capacity(controls.len());
    for (i, (agent, &u)) in world.agents.iter().zip(controls).enumerate() {
        if !u.is_finite() {
            return Err(WorldError::NonFinite { agent: i });
        }
        let bound = p.v_max.min(agent.b);
        let speed = u.norm();
        if speed > bound + SATURATION_TOL {
            return Err(WorldError::Unsaturated { agent: i, norm: speed, bound });
        }
        let x = agent.x + u * p.dt;
        let drained = p.k_b * speed * p.dt;
        let recharged = if agent.docked { p.rho * p.dt } else { 0.0 };
        let raw = agent.b - drained + recharged;
        let mut b = raw.clamp(0.0, BATTERY_CAPACITY);
        if b < p.depletion_level {
            b = 0.0;
        }
        deltas.push(BatteryDelta { drained, recharged, clamp_adjustment: b - raw });

        let docked = world.within_dock(i, x);
        let arrived = docked && !agent.docked;
        let out = &mut next.agents[i];
        out.x = x;
        out.b = b;
        out.docked = docked;
        out.charging = docked && b < BATTERY_CAPACITY && (agent.charging || arrived);
        if let Some(wp) = out.current_waypoint() {
            if x.distance(wp) <= p.waypoint_tol {
                out.waypoint_index += 1;
            }
        }
    }
    next.tick += 1;
    Ok((next, deltas))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SenseReport {
    /// Distance to the closest other agent, `+∞` when alone.
    pub nearest_agent_dist: f64,
    /// Distance to the closest obstacle boundary, `+∞` without obstacles.
    pub nearest_obstacle_dist: f64,
    /// `+∞` when the agent has no home charger.
    pub dist_to_home_charger: f64,
    pub charger_visible: bool,
    pub connected: bool,
    /// Agents within `r_c`, ascending index.
    pub neighbors: Vec<usize>,
}

pub fn sense(world: &WorldState, agent: usize) -> SenseReport {
    let p = &world.params;
    let x = world.agents[agent].x;
    let mut nearest_agent_dist = f64::INFINITY;
    let mut neighbors = Vec::new();
    for (j, other) in world.agents.iter().enumerate() {
        if j == agent {
            continue;
        }
        let d = x.distance(other.x);
        nearest_agent_dist = nearest_agent_dist.min(d);
        if d <= p.r_c {
            neighbors.push(j);
        }
    }
    let nearest_obstacle_dist =
        world.obstacles.iter().map(|o| x.distance(o.center) - o.radius).fold(f64::INFINITY, f64::min);
    let dist_to_home_charger = world.home_position(agent).map_or(f64::INFINITY, |q| x.distance(q));
    SenseReport {
        nearest_agent_dist,
        nearest_obstacle_dist,
        dist_to_home_charger,
        charger_visible: dist_to_home_charger <= p.r_v,
        connected: !neighbors.is_empty(),
        neighbors,
    }
}
