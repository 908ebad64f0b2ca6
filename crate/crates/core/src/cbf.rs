//! Control barrier functions over single-integrator agents.
//!
//! A barrier `h` is sampled at a world snapshot as `(h, a, c)` where the time
//! derivative along the agent's own control is `ḣ = a·u + c`. Enforcing
//! `ḣ ≥ -α(h)` is then the linear constraint `a·u ≥ -α(h) - c`, one half-plane
//! in control space.
//!
//! Conditions are minimums over one or more atomic barriers (e.g. clearance to
//! every obstacle). Boolean condition expressions compose with `min` for AND
//! and `max` for OR, so the sign of the composed value agrees with the truth
//! of the expression.
//!
//! Priority levels are relaxed with [`build_khat`]: the longest feasible
//! prefix of levels is kept, whole levels at a time.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bt::BooleanExpr;
use crate::controller;
use crate::geometry::Vec2;
use crate::world::WorldState;

/// Values closer than this are ties; the lowest index wins.
pub const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CbfError {
    #[error("barrier `{cbf}` is singular for agent {agent} (coincident points)")]
    Singular { cbf: String, agent: usize },
    #[error("barrier `{0}` has no finite value and cannot be enforced")]
    Unenforceable(String),
    #[error("cannot compose an empty list of barrier values")]
    EmptyComposition,
    #[error("no barrier registered for condition `{0}`")]
    UnknownCondition(String),
}

/// Linear class-K function `α(s) = γ·s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassK {
    pub gamma: f64,
}

impl ClassK {
    pub fn linear(gamma: f64) -> Self {
        assert!(gamma > 0.0 && gamma.is_finite(), "class-K rate must be positive, got {gamma}");
        Self { gamma }
    }

    pub fn alpha(&self, s: f64) -> f64 {
        self.gamma * s
    }
}

impl Default for ClassK {
    fn default() -> Self {
        Self { gamma: 1.0 }
    }
}

/// One evaluation of a barrier: `ḣ = a·u + drift`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierSample {
    pub h: f64,
    pub a: Vec2,
    pub drift: f64,
}

pub trait Barrier: fmt::Debug + Send + Sync {
    fn id(&self) -> &str;
    fn class_k(&self) -> ClassK;
    fn sample(&self, world: &WorldState, agent: usize) -> Result<BarrierSample, CbfError>;

    /// Amount added to `h` before the class-K function is applied, so the
    /// enforced set is `h ≥ -offset`. Zero for ordinary barriers.
    fn enforcement_offset(&self) -> f64 {
        0.0
    }
}

/// `{u : a·u ≥ b}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpaceConstraint {
    pub a: Vec2,
    pub b: f64,
    pub source: String,
}

impl HalfSpaceConstraint {
    pub fn contains(&self, u: Vec2, tol: f64) -> bool {
        self.a.dot(u) >= self.b - tol
    }
}

pub fn halfspace_from_sample(
    id: &str,
    sample: BarrierSample,
    class_k: ClassK,
) -> Result<HalfSpaceConstraint, CbfError> {
    if !sample.h.is_finite() {
        return Err(CbfError::Unenforceable(id.to_string()));
    }
    Ok(HalfSpaceConstraint { a: sample.a, b: -class_k.alpha(sample.h) - sample.drift, source: id.to_string() })
}

/// Half-plane enforcing `ḣ ≥ -α(h)` for `cbf` at the current state.
pub fn halfspace(cbf: &dyn Barrier, world: &WorldState, agent: usize) -> Result<HalfSpaceConstraint, CbfError> {
    enforce(cbf, cbf.sample(world, agent)?)
}

fn enforce(cbf: &dyn Barrier, mut sample: BarrierSample) -> Result<HalfSpaceConstraint, CbfError> {
    sample.h += cbf.enforcement_offset();
    halfspace_from_sample(cbf.id(), sample, cbf.class_k())
}

pub fn compose_and(values: &[f64]) -> Result<f64, CbfError> {
    values.iter().copied().reduce(f64::min).ok_or(CbfError::EmptyComposition)
}

pub fn compose_or(values: &[f64]) -> Result<f64, CbfError> {
    values.iter().copied().reduce(f64::max).ok_or(CbfError::EmptyComposition)
}

fn argmin(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|(_, b)| v < b - TIE_TOL) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

fn argmax(values: &[f64]) -> Option<usize> {
    let negated: Vec<f64> = values.iter().map(|v| -v).collect();
    argmin(&negated)
}

/// A condition backed by the conjunction of its atomic barriers. With no
/// atoms the condition holds vacuously (`h = +∞`).
#[derive(Debug)]
pub struct ConditionCbf {
    pub id: String,
    pub atoms: Vec<Box<dyn Barrier>>,
}

impl ConditionCbf {
    pub fn new(id: impl Into<String>, atoms: Vec<Box<dyn Barrier>>) -> Self {
        Self { id: id.into(), atoms }
    }

    pub fn single(barrier: impl Barrier + 'static) -> Self {
        Self { id: barrier.id().to_string(), atoms: vec![Box::new(barrier)] }
    }

    pub fn samples(&self, world: &WorldState, agent: usize) -> Result<Vec<BarrierSample>, CbfError> {
        self.atoms.iter().map(|b| b.sample(world, agent)).collect()
    }

    pub fn value(&self, world: &WorldState, agent: usize) -> Result<f64, CbfError> {
        let hs: Vec<f64> = self.samples(world, agent)?.iter().map(|s| s.h).collect();
        Ok(compose_and(&hs).unwrap_or(f64::INFINITY))
    }

    fn halfspaces(&self, world: &WorldState, agent: usize, split: bool) -> Result<Vec<HalfSpaceConstraint>, CbfError> {
        let samples = self.samples(world, agent)?;
        let chosen: Vec<usize> = if split {
            (0..samples.len()).collect()
        } else {
            let hs: Vec<f64> = samples.iter().map(|s| s.h).collect();
            argmin(&hs).into_iter().collect()
        };
        let mut out = Vec::new();
        for i in chosen {
            let atom = &self.atoms[i];
            match enforce(atom.as_ref(), samples[i]) {
                Ok(h) => out.push(h),
                Err(CbfError::Unenforceable(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }
}

/// Condition id → barrier, for one agent.
pub type CbfRegistry = BTreeMap<String, ConditionCbf>;

fn lookup<'a>(registry: &'a CbfRegistry, id: &str) -> Result<&'a ConditionCbf, CbfError> {
    registry.get(id).ok_or_else(|| CbfError::UnknownCondition(id.to_string()))
}

/// Min/max-composed barrier value of a condition expression.
pub fn expr_value(
    expr: &BooleanExpr,
    registry: &CbfRegistry,
    world: &WorldState,
    agent: usize,
) -> Result<f64, CbfError> {
    match expr {
        BooleanExpr::Atom(id) => lookup(registry, id)?.value(world, agent),
        BooleanExpr::And(xs) => compose_and(&child_values(xs, registry, world, agent)?),
        BooleanExpr::Or(xs) => compose_or(&child_values(xs, registry, world, agent)?),
    }
}

fn child_values(
    xs: &[BooleanExpr],
    registry: &CbfRegistry,
    world: &WorldState,
    agent: usize,
) -> Result<Vec<f64>, CbfError> {
    xs.iter().map(|x| expr_value(x, registry, world, agent)).collect()
}

/// Half-planes enforcing a condition expression.
///
/// Or-branches contribute the half-planes of the branch with the largest
/// value. And-branches contribute every operand when `split_and` is set, or
/// only the smallest one otherwise. Atoms without a finite value are omitted.
pub fn expr_halfspace(
    expr: &BooleanExpr,
    registry: &CbfRegistry,
    world: &WorldState,
    agent: usize,
    split_and: bool,
) -> Result<Vec<HalfSpaceConstraint>, CbfError> {
    match expr {
        BooleanExpr::Atom(id) => lookup(registry, id)?.halfspaces(world, agent, split_and),
        BooleanExpr::And(xs) if split_and => {
            let mut out = Vec::new();
            for x in xs {
                out.extend(expr_halfspace(x, registry, world, agent, true)?);
            }
            Ok(out)
        }
        BooleanExpr::And(xs) | BooleanExpr::Or(xs) => {
            let values = child_values(xs, registry, world, agent)?;
            let pick = if matches!(expr, BooleanExpr::And(_)) { argmin(&values) } else { argmax(&values) };
            match pick {
                Some(i) => expr_halfspace(&xs[i], registry, world, agent, split_and),
                None => Err(CbfError::EmptyComposition),
            }
        }
    }
}

/// Intersection of half-planes with the speed disc `‖u‖ ≤ v_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibleSet {
    pub constraints: Vec<HalfSpaceConstraint>,
    pub v_max: f64,
    /// Number of priority levels whose constraints are included.
    pub active_prefix: usize,
}

impl AdmissibleSet {
    pub fn new(constraints: Vec<HalfSpaceConstraint>, v_max: f64, active_prefix: usize) -> Self {
        Self { constraints, v_max, active_prefix }
    }

    pub fn unconstrained(v_max: f64) -> Self {
        Self::new(Vec::new(), v_max, 0)
    }

    pub fn contains(&self, u: Vec2, tol: f64) -> bool {
        u.norm() <= self.v_max + tol && self.constraints.iter().all(|h| h.contains(u, tol))
    }
}

/// Whether some `u` with `‖u‖ ≤ v_max` satisfies every constraint.
pub fn feasible(set: &AdmissibleSet) -> bool {
    controller::feasible_point(&set.constraints, set.v_max).is_some()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Khat {
    pub set: AdmissibleSet,
    pub levels_total: usize,
    /// Even the top-priority level alone was infeasible; only the speed bound remains.
    pub degraded_to_zero: bool,
}

/// Keeps the longest prefix of priority levels whose intersection is nonempty.
pub fn build_khat(levels: &[Vec<HalfSpaceConstraint>], v_max: f64) -> Khat {
    let mut kept: Vec<HalfSpaceConstraint> = Vec::new();
    let mut prefix = 0;
    for level in levels {
        let mut trial = kept.clone();
        trial.extend(level.iter().cloned());
        if controller::feasible_point(&trial, v_max).is_none() {
            break;
        }
        kept = trial;
        prefix += 1;
    }
    let degraded_to_zero = prefix == 0 && !levels.is_empty();
    let set = AdmissibleSet::new(kept, v_max, prefix);
    debug_assert!(feasible(&set));
    Khat { set, levels_total: levels.len(), degraded_to_zero }
}
