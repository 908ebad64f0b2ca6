//! Tick loop: evaluate conditions, tick the tree, filter the active action's
//! nominal control through its constraint levels, saturate, step.

pub mod config;
pub mod csv;
pub mod plot;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt::{tick, BooleanExpr, BtError, TickStatus};
use crate::cbf::{build_khat, expr_halfspace, CbfError, CbfRegistry, HalfSpaceConstraint};
use crate::controller::{saturate, solve, ControlError, ControlRequest, Objective};
use crate::geometry::Vec2;
use crate::mission::{ActionKind, Policy, Scenario};
use crate::world::{sense, step, WorldError, WorldState};

pub use config::{ConfigError, ScenarioConfig};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("tick {tick}, agent {agent}: {source}")]
    Barrier { tick: u64, agent: usize, source: CbfError },
    #[error("tick {tick}, agent {agent}: {source}")]
    Tree { tick: u64, agent: usize, source: BtError },
    #[error("tick {tick}, agent {agent}: {source}")]
    Control { tick: u64, agent: usize, source: ControlError },
    #[error("tick {tick}: {source}")]
    World { tick: u64, source: WorldError },
    #[error("tick {tick}, agent {agent}: unknown action `{action}`")]
    UnknownAction { tick: u64, agent: usize, action: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Completed,
    RootFailure,
    /// Some agent is out of charge away from its charger and cannot move.
    Depleted,
    MaxTicks,
}

/// What one agent decided at one tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub status: TickStatus,
    pub action: Option<ActionKind>,
    /// Barrier value per evaluated condition.
    pub h: BTreeMap<String, f64>,
    pub nominal: Vec2,
    /// Applied control, after filtering and saturation.
    pub control: Vec2,
    pub active_prefix: usize,
    pub levels_total: usize,
    pub degraded_to_zero: bool,
    /// Constraints per priority level, highest first.
    pub levels: Vec<Vec<HalfSpaceConstraint>>,
}

/// World snapshot at a tick together with each agent's decision there.
#[derive(Debug, Clone, PartialEq)]
pub struct TickRecord {
    pub world: WorldState,
    pub decisions: Vec<Decision>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMetrics {
    pub action_switch_count: usize,
    /// Ticks without any peer inside the communication radius.
    pub disconnected_ticks: usize,
    /// Disconnected ticks not explained by a recharge excursion (see
    /// [`RunMetrics`]).
    pub connectivity_violation_ticks: usize,
    pub min_battery: f64,
    pub terminal_battery: f64,
    /// `b − k_b·‖x − q_home‖ − m_b` at the end, if the agent has a charger.
    pub terminal_battery_reserve: Option<f64>,
    pub final_action: Option<ActionKind>,
}

/// Summary of one run.
///
/// A disconnected tick counts as a connectivity violation unless some agent
/// is on a recharge excursion: from entering its recharge subtree until it
/// is next connected outside that subtree. This covers both the charging
/// agent and the peers it leaves behind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub format_version: u32,
    pub scenario: String,
    pub completed: bool,
    pub termination: Termination,
    pub ticks_elapsed: u64,
    pub min_pairwise_distance: f64,
    /// Smallest distance from any agent to any obstacle boundary.
    pub min_obstacle_distance: f64,
    pub min_battery: f64,
    /// Smallest barrier value seen per condition, over all agents and ticks.
    pub min_h: BTreeMap<String, f64>,
    pub degraded_ticks: usize,
    pub agents: Vec<AgentMetrics>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub metrics: RunMetrics,
    pub records: Vec<TickRecord>,
}

struct Engine<'a> {
    scenario: &'a Scenario,
    registries: Vec<CbfRegistry>,
    conditions: Vec<String>,
}

impl Engine<'_> {
    fn levels_for(&self, action: ActionKind) -> Vec<BooleanExpr> {
        match &self.scenario.policy {
            Policy::Tree { table, .. } => table.get(action.id()).map(<[_]>::to_vec).unwrap_or_default(),
            Policy::Concurrent { levels, .. } => levels.clone(),
        }
    }

    fn decide(&self, world: &WorldState, agent: usize) -> Result<Decision, SimError> {
        let t = world.tick;
        let registry = &self.registries[agent];
        let barrier_err = |source| SimError::Barrier { tick: t, agent, source };
        let mut h = BTreeMap::new();
        for id in &self.conditions {
            let cbf = registry.get(id).ok_or_else(|| barrier_err(CbfError::UnknownCondition(id.clone())))?;
            h.insert(id.clone(), cbf.value(world, agent).map_err(barrier_err)?);
        }
        let truth = |id: &str| h.get(id).map(|v| *v >= 0.0);

        let (status, action) = match &self.scenario.policy {
            Policy::Tree { tree, .. } => {
                let out = tick(tree, &truth).map_err(|source| SimError::Tree { tick: t, agent, source })?;
                let action = match out.active_action {
                    Some(id) => Some(id.parse::<ActionKind>().map_err(|_| SimError::UnknownAction {
                        tick: t,
                        agent,
                        action: id.clone(),
                    })?),
                    None => None,
                };
                (out.status, action)
            }
            Policy::Concurrent { action, levels } => {
                if levels.iter().all(|l| l.eval(&|id| truth(id).unwrap_or(false))) {
                    (TickStatus::Success, None)
                } else {
                    (TickStatus::Running, Some(*action))
                }
            }
        };

        let state = &world.agents[agent];
        let v_max = world.params.v_max;
        let Some(kind) = action else {
            return Ok(Decision {
                status,
                action,
                h,
                nominal: Vec2::ZERO,
                control: Vec2::ZERO,
                active_prefix: 0,
                levels_total: 0,
                degraded_to_zero: false,
                levels: Vec::new(),
            });
        };
        let nominal = kind.nominal(world, agent);
        let levels = self
            .levels_for(kind)
            .iter()
            .map(|e| expr_halfspace(e, registry, world, agent, true))
            .collect::<Result<Vec<_>, _>>()
            .map_err(barrier_err)?;
        let khat = build_khat(&levels, v_max);
        if khat.degraded_to_zero {
            log::warn!("tick {t}, agent {agent}: no priority level is feasible, only the speed bound applies");
        }
        let filtered = !matches!(self.scenario.policy, Policy::Tree { filtered: false, .. });
        let raw = if filtered {
            let request = ControlRequest { nominal, set: khat.set.clone(), objective: Objective::MinDisturbance };
            solve(&request).map_err(|source| SimError::Control { tick: t, agent, source })?
        } else {
            nominal
        };
        Ok(Decision {
            status,
            action,
            h,
            nominal,
            control: saturate(raw, v_max, state.b),
            active_prefix: khat.set.active_prefix,
            levels_total: khat.levels_total,
            degraded_to_zero: khat.degraded_to_zero,
            levels,
        })
    }
}

/// Runs `scenario` until completion, root failure, depletion or `max_ticks` steps.
pub fn run(scenario: &Scenario) -> Result<RunOutput, SimError> {
    let engine = Engine {
        scenario,
        registries: scenario.registries(),
        conditions: scenario.condition_ids().into_iter().collect(),
    };
    let mut world = scenario.world.clone();
    world.refresh_docking();
    let mut records = Vec::new();
    let termination = loop {
        let decisions = (0..world.agents.len()).map(|i| engine.decide(&world, i)).collect::<Result<Vec<_>, _>>()?;
        let all_done = decisions.iter().all(|d| d.status == TickStatus::Success);
        let failed = decisions.iter().any(|d| d.status == TickStatus::Failure);
        let stuck = world
            .agents
            .iter()
            .zip(&decisions)
            .any(|(a, d)| a.b <= 0.0 && !a.docked && d.status != TickStatus::Success);
        let controls: Vec<Vec2> = decisions.iter().map(|d| d.control).collect();
        records.push(TickRecord { world: world.clone(), decisions });
        if all_done {
            break Termination::Completed;
        }
        if failed {
            break Termination::RootFailure;
        }
        if stuck {
            break Termination::Depleted;
        }
        if world.tick >= scenario.max_ticks {
            break Termination::MaxTicks;
        }
        let tick = world.tick;
        world = step(&world, &controls).map_err(|source| SimError::World { tick, source })?.0;
    };
    let metrics = summarize(scenario, &records, termination);
    Ok(RunOutput { metrics, records })
}

fn summarize(scenario: &Scenario, records: &[TickRecord], termination: Termination) -> RunMetrics {
    let n = scenario.world.agents.len();
    let mut agents: Vec<AgentMetrics> = (0..n)
        .map(|_| AgentMetrics {
            action_switch_count: 0,
            disconnected_ticks: 0,
            connectivity_violation_ticks: 0,
            min_battery: f64::INFINITY,
            terminal_battery: 0.0,
            terminal_battery_reserve: None,
            final_action: None,
        })
        .collect();
    let mut min_pairwise_distance = f64::INFINITY;
    let mut min_obstacle_distance = f64::INFINITY;
    let mut min_h: BTreeMap<String, f64> = BTreeMap::new();
    let mut degraded_ticks = 0;
    let mut excursion = vec![false; n];

    for (k, rec) in records.iter().enumerate() {
        let w = &rec.world;
        min_pairwise_distance = min_pairwise_distance.min(w.min_pairwise_distance());
        let reports: Vec<_> = (0..n).map(|i| sense(w, i)).collect();
        for (i, d) in rec.decisions.iter().enumerate() {
            min_obstacle_distance = min_obstacle_distance.min(reports[i].nearest_obstacle_dist);
            agents[i].min_battery = agents[i].min_battery.min(w.agents[i].b);
            if k > 0 && records[k - 1].decisions[i].action != d.action {
                agents[i].action_switch_count += 1;
            }
            degraded_ticks += usize::from(d.degraded_to_zero);
            for (id, &v) in &d.h {
                let m = min_h.entry(id.clone()).or_insert(f64::INFINITY);
                *m = m.min(v);
            }
            let recharging = d.action.is_some_and(|a| scenario.recharge_actions.contains(&a));
            if recharging {
                excursion[i] = true;
            } else if reports[i].connected {
                excursion[i] = false;
            }
        }
        if n > 1 {
            let excused = excursion.iter().any(|&e| e);
            for i in 0..n {
                if !reports[i].connected {
                    agents[i].disconnected_ticks += 1;
                    agents[i].connectivity_violation_ticks += usize::from(!excused);
                }
            }
        }
    }

    let last = records.last().expect("a run records at least one tick");
    let p = &last.world.params;
    for (i, m) in agents.iter_mut().enumerate() {
        let a = &last.world.agents[i];
        m.terminal_battery = a.b;
        m.terminal_battery_reserve = last.world.home_position(i).map(|q| a.b - p.k_b * a.x.distance(q) - p.m_b);
        m.final_action = last.decisions[i].action;
    }
    RunMetrics {
        format_version: FORMAT_VERSION,
        scenario: scenario.name.clone(),
        completed: termination == Termination::Completed,
        termination,
        ticks_elapsed: last.world.tick,
        min_pairwise_distance,
        min_obstacle_distance,
        min_battery: agents.iter().map(|a| a.min_battery).fold(f64::INFINITY, f64::min),
        min_h,
        degraded_ticks,
        agents,
    }
}

/// Files written by [`write_outputs`].
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const METRICS_FILE: &str = "metrics.json";
pub const PLOT_FILE: &str = "trajectory.svg";
pub const CONSTRAINTS_FILE: &str = "constraints.csv";

/// Writes the trajectory CSV and metrics JSON, plus the plot and constraint
/// dump when asked. Returns the paths written.
pub fn write_outputs(out: &RunOutput, dir: &Path, plot: bool, dump_constraints: bool) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let path = dir.join(TRAJECTORY_FILE);
    let mut w = BufWriter::new(File::create(&path)?);
    csv::write_trajectory(&mut w, &out.records)?;
    w.flush()?;
    written.push(path);

    let path = dir.join(METRICS_FILE);
    let json = serde_json::to_string_pretty(&out.metrics).map_err(io::Error::other)?;
    fs::write(&path, json + "\n")?;
    written.push(path);

    if plot {
        let path = dir.join(PLOT_FILE);
        fs::write(&path, plot::render(&out.records))?;
        written.push(path);
    }
    if dump_constraints {
        let path = dir.join(CONSTRAINTS_FILE);
        let mut w = BufWriter::new(File::create(&path)?);
        csv::write_constraints(&mut w, &out.records)?;
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mission::build_scenario;

    #[test]
    fn single_static_agent_completes_immediately() {
        let mut s = build_scenario("simple-c").unwrap();
        s.world.agents[0].x = s.world.agents[0].waypoints[0];
        let out = run(&s).unwrap();
        assert!(out.metrics.completed);
        assert_eq!(out.metrics.ticks_elapsed, 0);
        assert_eq!(out.records.len(), 1);
    }

    #[test]
    fn max_ticks_stops_the_run() {
        let mut s = build_scenario("coverage").unwrap();
        s.max_ticks = 5;
        let out = run(&s).unwrap();
        assert_eq!(out.metrics.termination, Termination::MaxTicks);
        assert_eq!(out.records.len(), 6);
        assert_eq!(out.records.last().unwrap().world.tick, 5);
    }
}
