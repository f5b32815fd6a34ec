//! Which objects stand between a robot and its target.
//!
//! Two rays leave the target toward the robot at the extreme feasible grasp
//! angles. Each runs past the last obstacle on its path, the endpoints are
//! joined, and the triangle is grown by the gripper radius. Whatever it
//! touches is a candidate for rearrangement. This is an estimate; the set is
//! neither minimal nor guaranteed sufficient.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{convex_convex_distance, point_convex_distance, point_segment_distance, ray_convex, ray_disc, Vec2};
use crate::motion::{grasp_angles, grasp_goal, motion_bounds, GoalRegion};
use crate::workspace::{Category, Footprint, ObjectModel, RobotModel, WorkspaceSnapshot};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeuristicError {
    #[error("robot {robot} has no feasible grasp angle on {target}")]
    NoFeasibleAngle { robot: String, target: String },
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("invalid angle range: beta {beta} > alpha {alpha}")]
    InvalidRange { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraspAngleRange {
    pub alpha: f64,
    pub beta: f64,
}

impl GraspAngleRange {
    pub fn from_angles(angles: &[f64]) -> Option<Self> {
        let alpha = angles.iter().copied().reduce(f64::max)?;
        let beta = angles.iter().copied().reduce(f64::min)?;
        Some(GraspAngleRange { alpha, beta })
    }

    pub fn is_degenerate(&self) -> bool {
        self.alpha == self.beta
    }
}

/// Whether `robot` could grasp `target` at `angle` if nothing else were on
/// the table: both approach points inside one arm's reach and inside the
/// motion bounds.
pub fn angle_reachable(snapshot: &WorkspaceSnapshot, robot: &RobotModel, target: &str, angle: f64, standoff: f64) -> bool {
    let Ok(GoalRegion::GraspApproach { pregrasp, contact, .. }) = grasp_goal(snapshot, robot, target, angle, standoff) else {
        return false;
    };
    let bounds = motion_bounds(snapshot);
    let r = robot.gripper_radius;
    bounds.contains_disc(pregrasp, r)
        && bounds.contains_disc(contact, r)
        && robot.arms.iter().any(|a| robot.reaches(a, pregrasp) && robot.reaches(a, contact))
}

/// Discretized angles at which the target can be grasped with every
/// obstacle ignored. Without obstacles the free space is convex, so the
/// straight path from any arm's rest position is the plan and only reach and
/// bounds decide.
pub fn feasible_angles(
    snapshot: &WorkspaceSnapshot,
    robot: &RobotModel,
    target: &str,
    standoff: f64,
) -> Result<Vec<f64>, HeuristicError> {
    if snapshot.object(target).is_none() {
        return Err(HeuristicError::UnknownObject(target.to_string()));
    }
    let out: Vec<f64> = grasp_angles()
        .into_iter()
        .filter(|&a| angle_reachable(snapshot, robot, target, a, standoff))
        .collect();
    if out.is_empty() {
        return Err(HeuristicError::NoFeasibleAngle {
            robot: robot.id.clone(),
            target: target.to_string(),
        });
    }
    Ok(out)
}

/// Triangle (or, for a single angle, segment) grown by `inflation`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InflatedTriangle {
    /// Target center, then the α and β ray endpoints.
    pub vertices: [Vec2; 3],
    pub inflation: f64,
    pub degenerate: bool,
}

impl InflatedTriangle {
    fn core(&self) -> Vec<Vec2> {
        if self.degenerate {
            vec![self.vertices[0], self.vertices[1]]
        } else {
            self.vertices.to_vec()
        }
    }

    pub fn with_inflation(&self, inflation: f64) -> Self {
        InflatedTriangle {
            inflation,
            ..self.clone()
        }
    }

    /// Distance from a footprint to the uninflated core.
    pub fn core_distance(&self, f: &Footprint) -> f64 {
        let core = self.core();
        match f {
            Footprint::Disc { center, radius } => {
                let d = if self.degenerate {
                    point_segment_distance(*center, core[0], core[1])
                } else {
                    point_convex_distance(&core, *center)
                };
                (d - radius).max(0.0)
            }
            Footprint::Polygon(poly) => convex_convex_distance(&core, poly),
        }
    }

    pub fn intersects(&self, f: &Footprint) -> bool {
        self.core_distance(f) < self.inflation
    }
}

/// How far a ray from `origin` along `dir` must run to clear everything it
/// crosses, with `pad` added beyond the far edge of the last obstacle.
fn ray_length(origin: Vec2, dir: Vec2, obstacles: &[&ObjectModel], pad: f64, min: f64, cap: f64) -> f64 {
    let far = obstacles
        .iter()
        .filter_map(|o| match o.footprint() {
            Footprint::Disc { center, radius } => ray_disc(origin, dir, center, radius),
            Footprint::Polygon(poly) => ray_convex(origin, dir, &poly),
        })
        .filter(|&(t0, t1)| t1 > 0.0 && t0 < cap)
        .map(|(_, t1)| t1 + pad)
        .fold(0.0, f64::max);
    far.max(min).min(cap.max(min))
}

pub fn build_triangle(
    snapshot: &WorkspaceSnapshot,
    robot: &RobotModel,
    target: &str,
    range: GraspAngleRange,
    standoff: f64,
) -> Result<InflatedTriangle, HeuristicError> {
    if range.beta > range.alpha {
        return Err(HeuristicError::InvalidRange {
            alpha: range.alpha,
            beta: range.beta,
        });
    }
    let t = snapshot
        .object(target)
        .ok_or_else(|| HeuristicError::UnknownObject(target.to_string()))?;
    let c = t.center();
    let to_base = robot.base.position() - c;
    let cap = to_base.norm();
    let obstacles: Vec<&ObjectModel> = snapshot
        .objects
        .iter()
        .filter(|o| o.on_table() && o.id != t.id)
        .collect();
    let pad = robot.gripper_radius;
    let end = |angle: f64| {
        let dir = to_base.normalized().rotate(angle);
        c + dir * ray_length(c, dir, &obstacles, pad, standoff, cap)
    };
    let a = end(range.alpha);
    let degenerate = range.is_degenerate();
    let b = if degenerate { a } else { end(range.beta) };
    Ok(InflatedTriangle {
        vertices: [c, a, b],
        inflation: robot.gripper_radius,
        degenerate,
    })
}

/// Movable table objects other than the target that touch the triangle.
pub fn objects_in_triangle(snapshot: &WorkspaceSnapshot, target: &str, tri: &InflatedTriangle) -> BTreeSet<String> {
    snapshot
        .objects
        .iter()
        .filter(|o| o.on_table() && o.id != target && o.category != Category::Fixture)
        .filter(|o| tri.intersects(&o.footprint()))
        .map(|o| o.id.clone())
        .collect()
}

pub fn objects_to_rearrange(
    snapshot: &WorkspaceSnapshot,
    robot: &RobotModel,
    target: &str,
    standoff: f64,
) -> Result<BTreeSet<String>, HeuristicError> {
    let angles = feasible_angles(snapshot, robot, target, standoff)?;
    let range = GraspAngleRange::from_angles(&angles).expect("non-empty");
    let tri = build_triangle(snapshot, robot, target, range, standoff)?;
    Ok(objects_in_triangle(snapshot, target, &tri))
}
