//! JSON scenario configuration.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "scenario": "coverage",
//!   "params": { "k_b": 0.8 },
//!   "gamma": { "connected": 2.0 },
//!   "max_ticks": 8000,
//!   "output": { "dir": "out/coverage", "plot": true }
//! }
//! ```
//!
//! Instead of a named scenario, `world` (agents, obstacles, chargers) and
//! `tree` may be given inline; a named scenario's tree can also be replaced.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::FORMAT_VERSION;
use crate::bt::BtNode;
use crate::mission::{build_scenario, ActionKind, Policy, Scenario, ScenarioError};
use crate::world::{AgentState, Charger, Obstacle, WorldError, WorldParams, WorldState};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parsing config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("unsupported format_version {0} (expected {FORMAT_VERSION})")]
    Version(u32),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("config needs either `scenario` or both `world` and `tree`")]
    Incomplete,
    #[error("max_ticks must be at least 1")]
    MaxTicks,
    #[error("bad override `{0}`: expected key=value with a numeric value")]
    BadOverride(String),
    #[error("agent {agent} refers to charger {charger}, which does not exist")]
    UnknownCharger { agent: usize, charger: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineWorld {
    pub agents: Vec<AgentState>,
    #[serde(default)]
    pub obstacles: Vec<Obstacle>,
    #[serde(default)]
    pub chargers: Vec<Charger>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    pub plot: bool,
    pub dump_constraints: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub format_version: u32,
    pub scenario: Option<String>,
    pub world: Option<InlineWorld>,
    pub tree: Option<BtNode>,
    /// Overrides on top of the scenario's world parameters.
    pub params: BTreeMap<String, f64>,
    /// Class-K rate per condition id.
    pub gamma: BTreeMap<String, f64>,
    pub battery_slack: Option<f64>,
    pub max_ticks: Option<u64>,
    pub output: OutputConfig,
    /// Reserved; every current scenario is deterministic.
    pub seed: Option<u64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            format_version: FORMAT_VERSION,
            scenario: None,
            world: None,
            tree: None,
            params: BTreeMap::new(),
            gamma: BTreeMap::new(),
            battery_slack: None,
            max_ticks: None,
            output: OutputConfig::default(),
            seed: None,
        }
    }
}

impl ScenarioConfig {
    pub fn named(scenario: &str) -> Self {
        Self { scenario: Some(scenario.to_string()), ..Default::default() }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = serde_json::from_str(text)?;
        if cfg.format_version != FORMAT_VERSION {
            return Err(ConfigError::Version(cfg.format_version));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::from_json(&text)
    }

    /// Applies `key=value`: a world parameter, `max_ticks`, `battery_slack`
    /// or `gamma.<condition>`.
    pub fn set(&mut self, assignment: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadOverride(assignment.to_string());
        let (key, value) = assignment.split_once('=').ok_or_else(bad)?;
        let (key, value) = (key.trim(), value.trim());
        if key == "max_ticks" {
            self.max_ticks = Some(value.parse().map_err(|_| bad())?);
            return Ok(());
        }
        let v: f64 = value.parse().map_err(|_| bad())?;
        match key.strip_prefix("gamma.") {
            Some(cond) => {
                self.gamma.insert(cond.to_string(), v);
            }
            None if key == "battery_slack" => self.battery_slack = Some(v),
            None => {
                self.params.insert(key.to_string(), v);
            }
        }
        Ok(())
    }

    pub fn resolve(&self) -> Result<Scenario, ConfigError> {
        let mut scenario = match (&self.scenario, &self.world, &self.tree) {
            (Some(name), _, _) => build_scenario(name)?,
            (None, Some(_), Some(tree)) => Scenario {
                name: "inline".into(),
                world: WorldState::new(WorldParams::default()),
                policy: Policy::tree(tree.clone(), true)?,
                mission: Default::default(),
                recharge_actions: [ActionKind::SearchCharger, ActionKind::DockWithCharger].into(),
                max_ticks: 1000,
            },
            _ => return Err(ConfigError::Incomplete),
        };
        if let Some(inline) = &self.world {
            scenario.world.agents = inline.agents.clone();
            scenario.world.obstacles = inline.obstacles.clone();
            scenario.world.chargers = inline.chargers.clone();
        }
        if let Some(tree) = &self.tree {
            scenario.policy = Policy::tree(tree.clone(), true)?;
        }
        let mut params = serde_json::to_value(&scenario.world.params)?;
        for (k, v) in &self.params {
            params[k] = serde_json::json!(v);
        }
        scenario.world.params = serde_json::from_value(params)?;
        scenario.world.params.validate()?;
        for (agent, a) in scenario.world.agents.iter().enumerate() {
            if let Some(charger) = a.home_charger.filter(|&c| c >= scenario.world.chargers.len()) {
                return Err(ConfigError::UnknownCharger { agent, charger });
            }
        }
        scenario.world.refresh_docking();
        scenario.mission.gamma.extend(self.gamma.clone());
        if let Some(slack) = self.battery_slack {
            scenario.mission.battery_slack = slack;
        }
        scenario.mission.validate()?;
        if let Some(m) = self.max_ticks {
            if m == 0 {
                return Err(ConfigError::MaxTicks);
            }
            scenario.max_ticks = m;
        }
        Ok(scenario)
    }
}
