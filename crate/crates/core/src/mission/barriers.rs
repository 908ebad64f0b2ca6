//! Concrete barrier functions for the AUV missions.

use crate::cbf::{Barrier, BarrierSample, CbfError, ClassK};
use crate::geometry::Vec2;
use crate::world::{WorldParams, WorldState, BATTERY_CAPACITY};

/// Worst-case one-step loss of `−‖x − q‖` beyond its linearization, as a rate.
///
/// Over a step, `‖x − q + uΔt‖ ≤ d + e·uΔt + ‖u‖²Δt²/(2d)`, so barriers of the
/// form `r − ‖x − q‖` get this extra (negative) drift. It is capped at
/// `2·v_max`, past which the linear bound is looser than the trivial one, and
/// at `speed + α(h)` so that straight-in motion at the reachable speed stays
/// admissible. That cap only binds within `v_max·Δt/2` of `q` (or on an
/// almost empty battery), deep inside the safe set.
pub fn curvature_drift(p: &WorldParams, d: f64, speed: f64, alpha_h: f64) -> f64 {
    if d <= 0.0 {
        return 0.0;
    }
    -(p.v_max * p.v_max * p.dt / (2.0 * d)).min(2.0 * p.v_max).min(speed + alpha_h.max(0.0))
}

/// Speed bound of the admissible set, `min(v_max, b)`.
fn reachable_speed(world: &WorldState, agent: usize) -> f64 {
    world.params.v_max.min(world.agents[agent].b)
}

/// Unit vector from `to` towards `from`, or zero when the points coincide.
fn unit_from(from: Vec2, to: Vec2) -> Vec2 {
    (from - to).normalized().unwrap_or(Vec2::ZERO)
}

/// `h = ‖x_i − x_j‖ − margin`.
#[derive(Debug, Clone)]
pub struct AgentClearance {
    pub id: String,
    pub other: usize,
    pub margin: f64,
    pub class_k: ClassK,
}

impl Barrier for AgentClearance {
    fn id(&self) -> &str {
        &self.id
    }

    fn class_k(&self) -> ClassK {
        self.class_k
    }

    fn sample(&self, world: &WorldState, agent: usize) -> Result<BarrierSample, CbfError> {
        let rel = world.agents[agent].x - world.agents[self.other].x;
        let e = rel.normalized().ok_or_else(|| CbfError::Singular { cbf: self.id.clone(), agent })?;
        Ok(BarrierSample { h: rel.norm() - self.margin, a: e, drift: 0.0 })
    }
}

/// `h = ‖x − o‖ − (radius + margin)`.
#[derive(Debug, Clone)]
pub struct ObstacleClearance {
    pub id: String,
    pub obstacle: usize,
    pub margin: f64,
    pub class_k: ClassK,
}

impl Barrier for ObstacleClearance {
    fn id(&self) -> &str {
        &self.id
    }

    fn class_k(&self) -> ClassK {
        self.class_k
    }

    fn sample(&self, world: &WorldState, agent: usize) -> Result<BarrierSample, CbfError> {
        let o = world.obstacles[self.obstacle];
        let rel = world.agents[agent].x - o.center;
        let e = rel.normalized().ok_or_else(|| CbfError::Singular { cbf: self.id.clone(), agent })?;
        Ok(BarrierSample { h: rel.norm() - o.radius - self.margin, a: e, drift: 0.0 })
    }
}

/// Where the battery reserve must suffice to get to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReserveTarget {
    HomeCharger,
    /// Last waypoint of the agent's plan.
    Goal,
}

/// `h = b − k_b·‖x − q‖ − m_b`.
///
/// The true derivative `−k_b‖u‖ − k_b·e·u` is bounded below by the linear
/// `−k_b·e·u − k_b·v_max`, which is what gets enforced.
#[derive(Debug, Clone)]
pub struct BatteryReserve {
    pub id: String,
    pub target: ReserveTarget,
    pub class_k: ClassK,
    /// Charge by which the enforced constraint trails the condition: the
    /// half-plane keeps `h ≥ -slack` invariant while the condition still
    /// reads `h ≥ 0`.
    pub slack: f64,
}

impl BatteryReserve {
    fn target_point(&self, world: &WorldState, agent: usize) -> Option<Vec2> {
        match self.target {
            ReserveTarget::HomeCharger => world.home_position(agent),
            ReserveTarget::Goal => world.agents[agent].waypoints.last().copied(),
        }
    }
}

impl Barrier for BatteryReserve {
    fn id(&self) -> &str {
        &self.id
    }

    fn class_k(&self) -> ClassK {
        self.class_k
    }

    fn enforcement_offset(&self) -> f64 {
        self.slack
    }

    fn sample(&self, world: &WorldState, agent: usize) -> Result<BarrierSample, CbfError> {
        let p = &world.params;
        let state = &world.agents[agent];
        let Some(q) = self.target_point(world, agent) else {
            return Ok(BarrierSample { h: f64::NEG_INFINITY, a: Vec2::ZERO, drift: 0.0 });
        };
        let h = state.b - p.k_b * state.x.distance(q) - p.m_b;
        match (state.x - q).normalized() {
            // No curvature allowance: on the boundary only straight-in motion
            // is admissible, which loses nothing to curvature.
            Some(e) => Ok(BarrierSample { h, a: e * -p.k_b, drift: -p.k_b * p.v_max }),
            // at the target: nothing left to travel
            None => Ok(BarrierSample { h, a: Vec2::ZERO, drift: 0.0 }),
        }
    }
}

/// Fails while a charging session is in progress: `h = b − 100` during the
/// session, `+∞` otherwise. Keeps a docked agent charging until full.
#[derive(Debug, Clone)]
pub struct ChargeSession {
    pub id: String,
    pub class_k: ClassK,
}

impl Barrier for ChargeSession {
    fn id(&self) -> &str {
        &self.id
    }

    fn class_k(&self) -> ClassK {
        self.class_k
    }

    fn sample(&self, world: &WorldState, agent: usize) -> Result<BarrierSample, CbfError> {
        let state = &world.agents[agent];
        if state.charging {
            Ok(BarrierSample { h: state.b - BATTERY_CAPACITY, a: Vec2::ZERO, drift: world.params.rho })
        } else {
            Ok(BarrierSample { h: f64::INFINITY, a: Vec2::ZERO, drift: 0.0 })
        }
    }
}

/// `h = max_j (r_c − ‖x_i − x_j‖)`: within communication range of some peer.
#[derive(Debug, Clone)]
pub struct Connectivity {
    pub id: String,
    pub class_k: ClassK,
}

impl Connectivity {
    /// Index of the peer defining the current value; ties go to the lowest index.
    pub fn active_peer(world: &WorldState, agent: usize) -> Option<usize> {
        let x = world.agents[agent].x;
        let mut best: Option<(usize, f64)> = None;
        for (j, other) in world.agents.iter().enumerate() {
            if j == agent {
                continue;
            }
            let d = x.distance(other.x);
            if best.is_none_or(|(_, bd)| d < bd - crate::cbf::TIE_TOL) {
                best = Some((j, d));
            }
        }
        best.map(|(j, _)| j)
    }
}

impl Barrier for Connectivity {
    fn id(&self) -> &str {
        &self.id
    }

    fn class_k(&self) -> ClassK {
        self.class_k
    }

    fn sample(&self, world: &WorldState, agent: usize) -> Result<BarrierSample, CbfError> {
        let Some(peer) = Self::active_peer(world, agent) else {
            return Ok(BarrierSample { h: f64::NEG_INFINITY, a: Vec2::ZERO, drift: 0.0 });
        };
        let x = world.agents[agent].x;
        let p = world.agents[peer].x;
        let d = x.distance(p);
        let h = world.params.r_c - d;
        Ok(BarrierSample {
            h,
            a: -unit_from(x, p),
            drift: curvature_drift(&world.params, d, reachable_speed(world, agent), self.class_k.alpha(h)),
        })
    }
}

/// `h = r_v − ‖x − q_home‖`.
#[derive(Debug, Clone)]
pub struct ChargerVisible {
    pub id: String,
    pub class_k: ClassK,
}

impl Barrier for ChargerVisible {
    fn id(&self) -> &str {
        &self.id
    }

    fn class_k(&self) -> ClassK {
        self.class_k
    }

    fn sample(&self, world: &WorldState, agent: usize) -> Result<BarrierSample, CbfError> {
        let Some(q) = world.home_position(agent) else {
            return Ok(BarrierSample { h: f64::NEG_INFINITY, a: Vec2::ZERO, drift: 0.0 });
        };
        let x = world.agents[agent].x;
        let d = x.distance(q);
        let h = world.params.r_v - d;
        Ok(BarrierSample {
            h,
            a: -unit_from(x, q),
            drift: curvature_drift(&world.params, d, reachable_speed(world, agent), self.class_k.alpha(h)),
        })
    }
}

/// `h = waypoint_tol − ‖x − goal‖` with the goal the plan's last waypoint.
#[derive(Debug, Clone)]
pub struct AtGoal {
    pub id: String,
    pub class_k: ClassK,
}

impl Barrier for AtGoal {
    fn id(&self) -> &str {
        &self.id
    }

    fn class_k(&self) -> ClassK {
        self.class_k
    }

    fn sample(&self, world: &WorldState, agent: usize) -> Result<BarrierSample, CbfError> {
        let state = &world.agents[agent];
        let Some(&g) = state.waypoints.last() else {
            return Ok(BarrierSample { h: f64::NEG_INFINITY, a: Vec2::ZERO, drift: 0.0 });
        };
        let d = state.x.distance(g);
        let h = world.params.waypoint_tol - d;
        Ok(BarrierSample {
            h,
            a: -unit_from(state.x, g),
            drift: curvature_drift(&world.params, d, reachable_speed(world, agent), self.class_k.alpha(h)),
        })
    }
}

/// Negative remaining path length of the coverage plan; zero once complete.
#[derive(Debug, Clone)]
pub struct PlanComplete {
    pub id: String,
    pub class_k: ClassK,
}

impl Barrier for PlanComplete {
    fn id(&self) -> &str {
        &self.id
    }

    fn class_k(&self) -> ClassK {
        self.class_k
    }

    fn sample(&self, world: &WorldState, agent: usize) -> Result<BarrierSample, CbfError> {
        let state = &world.agents[agent];
        let Some(wp) = state.current_waypoint() else {
            return Ok(BarrierSample { h: 0.0, a: Vec2::ZERO, drift: 0.0 });
        };
        let rest: f64 = state.waypoints[state.waypoint_index..].windows(2).map(|w| w[0].distance(w[1])).sum();
        let d = state.x.distance(wp);
        let h = -(d + rest);
        Ok(BarrierSample {
            h,
            a: -unit_from(state.x, wp),
            drift: curvature_drift(&world.params, d, reachable_speed(world, agent), self.class_k.alpha(h)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cbf::halfspace;
    use crate::world::{AgentState, Charger, WorldParams};

    fn world(positions: &[(f64, f64)]) -> WorldState {
        let mut w = WorldState::new(WorldParams::default());
        for &(x, y) in positions {
            w.agents.push(AgentState::new(Vec2::new(x, y), 50.0));
        }
        w
    }

    #[test]
    fn agent_clearance_values() {
        let w = world(&[(0.0, 0.0), (3.0, 0.0)]);
        let c = AgentClearance { id: "safe/agent-1".into(), other: 1, margin: 1.0, class_k: ClassK::default() };
        let s = c.sample(&w, 0).unwrap();
        assert!((s.h - 2.0).abs() < 1e-15);
        assert!((s.a - Vec2::new(-1.0, 0.0)).norm() < 1e-15);

        let at_margin = world(&[(0.0, 0.0), (1.0, 0.0)]);
        assert_eq!(c.sample(&at_margin, 0).unwrap().h, 0.0);

        let coincident = world(&[(1.0, 1.0), (1.0, 1.0)]);
        assert!(matches!(c.sample(&coincident, 0), Err(CbfError::Singular { .. })));
    }

    #[test]
    fn battery_reserve_values() {
        let mut w = world(&[(4.0, 0.0)]);
        w.params.k_b = 1.0;
        w.params.m_b = 2.0;
        w.agents[0].b = 10.0;
        w.chargers.push(Charger { id: "c".into(), position: Vec2::ZERO });
        w.agents[0].home_charger = Some(0);
        let c = BatteryReserve {
            id: "battery".into(),
            target: ReserveTarget::HomeCharger,
            class_k: ClassK::default(),
            slack: 0.0,
        };
        let s = c.sample(&w, 0).unwrap();
        assert!((s.h - 4.0).abs() < 1e-15);
        assert!((s.a - Vec2::new(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(s.drift, -1.0);

        w.agents[0].x = Vec2::ZERO;
        w.agents[0].b = 2.0;
        let s = c.sample(&w, 0).unwrap();
        assert_eq!(s.h, 0.0);
        assert_eq!(s.a, Vec2::ZERO);
        w.agents[0].b = 3.0;
        assert!(halfspace(&c, &w, 0).unwrap().b < 0.0, "vacuous at the charger with spare charge");
    }

    #[test]
    fn connectivity_values() {
        let w = world(&[(0.0, 0.0), (3.0, 0.0), (0.0, 7.0)]);
        let c = Connectivity { id: "connected".into(), class_k: ClassK::default() };
        let mut w5 = w.clone();
        w5.params.r_c = 5.0;
        let s = c.sample(&w5, 0).unwrap();
        assert!((s.h - 2.0).abs() < 1e-15);
        assert_eq!(Connectivity::active_peer(&w5, 0), Some(1));
        assert!((s.a - Vec2::new(1.0, 0.0)).norm() < 1e-15);

        let alone = world(&[(0.0, 0.0)]);
        assert_eq!(c.sample(&alone, 0).unwrap().h, f64::NEG_INFINITY);

        let mut edge = world(&[(0.0, 0.0), (5.0, 0.0)]);
        edge.params.r_c = 5.0;
        assert_eq!(c.sample(&edge, 0).unwrap().h, 0.0);
    }

    #[test]
    fn charger_visibility_values() {
        let mut w = world(&[(5.0, 0.0)]);
        w.chargers.push(Charger { id: "c".into(), position: Vec2::ZERO });
        w.agents[0].home_charger = Some(0);
        let c = ChargerVisible { id: "charger_visible".into(), class_k: ClassK::default() };
        assert_eq!(c.sample(&w, 0).unwrap().h, 5.0);
        w.agents[0].x = Vec2::new(10.0, 0.0);
        assert_eq!(c.sample(&w, 0).unwrap().h, 0.0);
        w.agents[0].x = Vec2::ZERO;
        let s = c.sample(&w, 0).unwrap();
        assert_eq!((s.h, s.a), (10.0, Vec2::ZERO));
    }

    #[test]
    fn plan_progress_values() {
        let mut w = world(&[(0.0, 0.0)]);
        w.agents[0].waypoints = vec![Vec2::new(3.0, 4.0), Vec2::new(3.0, 10.0)];
        let c = PlanComplete { id: "coverage_complete".into(), class_k: ClassK::default() };
        assert!((c.sample(&w, 0).unwrap().h + 11.0).abs() < 1e-12);
        w.agents[0].waypoint_index = 2;
        assert_eq!(c.sample(&w, 0).unwrap().h, 0.0);
    }
}
