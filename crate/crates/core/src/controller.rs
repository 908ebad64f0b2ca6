//! Exact control selection over a 2-D admissible set.
//!
//! The admissible set is an intersection of half-planes `a·u ≥ b` with the
//! disc `‖u‖ ≤ v_max`. With a handful of constraints the optimum of either
//! objective is found exactly by enumerating the points where it can occur
//! (free optimum, projections onto boundary lines, line/line and line/circle
//! intersections) and keeping the best feasible one.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cbf::{AdmissibleSet, HalfSpaceConstraint};
use crate::geometry::Vec2;

/// Slack allowed when accepting a candidate as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-10;
/// Objective values closer than this are considered tied.
const TIE_TOL: f64 = 1e-12;
const PARALLEL_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ControlError {
    #[error("admissible set is empty")]
    Infeasible,
    #[error("max-progress direction is zero")]
    ZeroDirection,
    #[error("non-finite input to the controller")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Objective {
    /// Closest admissible point to the nominal control.
    MinDisturbance,
    /// Admissible point furthest along `direction`.
    MaxProgress { direction: Vec2 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlRequest {
    pub nominal: Vec2,
    pub set: AdmissibleSet,
    pub objective: Objective,
}

/// Boundary line `n·u = c` with unit normal, from a constraint `a·u ≥ b`.
#[derive(Debug, Clone, Copy)]
struct Line {
    n: Vec2,
    c: f64,
}

/// Splits constraints into proper lines; `None` if a degenerate constraint
/// (`a = 0`, `b > 0`) makes the set empty.
fn boundary_lines(constraints: &[HalfSpaceConstraint]) -> Option<Vec<Line>> {
    let mut lines = Vec::with_capacity(constraints.len());
    for h in constraints {
        let norm = h.a.norm();
        if norm < 1e-12 {
            if h.b > FEASIBILITY_TOL {
                return None;
            }
            continue;
        }
        lines.push(Line { n: h.a * (1.0 / norm), c: h.b / norm });
    }
    Some(lines)
}

fn satisfies(u: Vec2, constraints: &[HalfSpaceConstraint], v_max: f64) -> bool {
    u.is_finite()
        && u.norm() <= v_max * (1.0 + 1e-12) + 1e-12
        && constraints.iter().all(|h| h.a.dot(u) - h.b >= -FEASIBILITY_TOL)
}

fn project_onto_line(p: Vec2, l: &Line) -> Vec2 {
    p + l.n * (l.c - l.n.dot(p))
}

fn intersect_lines(l1: &Line, l2: &Line) -> Option<Vec2> {
    let det = l1.n.cross(l2.n);
    if det.abs() < PARALLEL_TOL {
        return None;
    }
    // Solve [n1; n2] u = [c1; c2].
    Some(Vec2::new((l1.c * l2.n.y - l2.c * l1.n.y) / det, (l1.n.x * l2.c - l2.n.x * l1.c) / det))
}

fn intersect_line_circle(l: &Line, radius: f64) -> impl Iterator<Item = Vec2> {
    let foot = l.n * l.c;
    let half_sq = radius * radius - l.c * l.c;
    let pts = if half_sq < -1e-12 * radius * radius {
        vec![]
    } else if half_sq <= 0.0 {
        // tangent, possibly missed by rounding
        vec![foot]
    } else {
        let half = half_sq.sqrt();
        let t = l.n.perp();
        vec![foot + t * half, foot - t * half]
    };
    pts.into_iter()
}

/// Points at which the optimum of either objective may lie, in a fixed order.
fn candidates(anchor: Vec2, lines: &[Line], v_max: f64, extra: &[Vec2]) -> Vec<Vec2> {
    let mut out: Vec<Vec2> = extra.to_vec();
    out.push(anchor);
    for l in lines {
        out.push(project_onto_line(anchor, l));
    }
    for (i, l1) in lines.iter().enumerate() {
        for l2 in &lines[i + 1..] {
            out.extend(intersect_lines(l1, l2));
        }
    }
    for l in lines {
        out.extend(intersect_line_circle(l, v_max));
    }
    out
}

fn clip_norm(u: Vec2, v_max: f64) -> Vec2 {
    let n = u.norm();
    if n > v_max {
        u * (v_max / n)
    } else {
        u
    }
}

/// Closest point of `{u : a_i·u ≥ b_i, ‖u‖ ≤ v_max}` to `target`, or `None` if empty.
pub(crate) fn project(constraints: &[HalfSpaceConstraint], v_max: f64, target: Vec2) -> Option<Vec2> {
    let lines = boundary_lines(constraints)?;
    let radial = clip_norm(target, v_max);
    let mut best: Option<(f64, Vec2)> = None;
    for u in candidates(target, &lines, v_max, &[radial]) {
        if !satisfies(u, constraints, v_max) {
            continue;
        }
        let cost = (u - target).norm_sq();
        if best.is_none_or(|(c, _)| cost < c - TIE_TOL) {
            best = Some((cost, u));
        }
    }
    best.map(|(_, u)| clip_norm(u, v_max))
}

fn maximize(constraints: &[HalfSpaceConstraint], v_max: f64, direction: Vec2) -> Option<Vec2> {
    let lines = boundary_lines(constraints)?;
    let d = direction.normalized()?;
    let mut best: Option<(f64, f64, Vec2)> = None;
    for u in candidates(Vec2::ZERO, &lines, v_max, &[d * v_max]) {
        if !satisfies(u, constraints, v_max) {
            continue;
        }
        let gain = d.dot(u);
        let norm = u.norm();
        let better = match best {
            None => true,
            Some((g, n, _)) => gain > g + TIE_TOL || (gain >= g - TIE_TOL && norm < n - TIE_TOL),
        };
        if better {
            best = Some((gain, norm, u));
        }
    }
    best.map(|(_, _, u)| clip_norm(u, v_max))
}

/// Any point of the set, if one exists.
pub(crate) fn feasible_point(constraints: &[HalfSpaceConstraint], v_max: f64) -> Option<Vec2> {
    project(constraints, v_max, Vec2::ZERO)
}

pub fn solve(request: &ControlRequest) -> Result<Vec2, ControlError> {
    let set = &request.set;
    if !request.nominal.is_finite() || !set.v_max.is_finite() {
        return Err(ControlError::NonFinite);
    }
    match request.objective {
        Objective::MinDisturbance => {
            project(&set.constraints, set.v_max, request.nominal).ok_or(ControlError::Infeasible)
        }
        Objective::MaxProgress { direction } => {
            if direction.normalized().is_none() {
                return Err(ControlError::ZeroDirection);
            }
            maximize(&set.constraints, set.v_max, direction).ok_or(ControlError::Infeasible)
        }
    }
}

/// Scales `u` down, keeping its direction, so that `‖u‖ ≤ min(v_max, b)`.
pub fn saturate(u: Vec2, v_max: f64, b: f64) -> Vec2 {
    clip_norm(u, v_max.min(b).max(0.0))
}
