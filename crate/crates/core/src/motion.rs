//! Planar motion planning for a disc-shaped end-effector.
//!
//! A configuration is the position of the end-effector center. Obstacles
//! are the footprints of free-standing objects. Plans come from a
//! goal-biased RRT whose time budget is turned into a fixed iteration cap,
//! which makes a plan a pure function of its inputs and seed.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Rect, Vec2};
use crate::workspace::{Footprint, RobotModel, WorkspaceSnapshot};

pub type Configuration = Vec2;

/// Spacing of the discretized grasp angles.
pub const ANGLE_STEP: f64 = std::f64::consts::PI / 18.0;
pub const ANGLE_COUNT: usize = 19;
/// Length of the straight final approach of a grasp.
pub const DEFAULT_STANDOFF: f64 = 0.05;
/// How far beyond the table edge the end-effector center may go.
pub const BOUNDS_MARGIN: f64 = 0.1;

/// The 19 grasp angles, from −π/2 to π/2.
pub fn grasp_angles() -> Vec<f64> {
    (0..ANGLE_COUNT).map(|i| -FRAC_PI_2 + i as f64 * ANGLE_STEP).collect()
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MotionError {
    #[error("start configuration ({0:.3}, {1:.3}) is in collision")]
    InvalidStart(f64, f64),
    #[error("grasp angle {0:.4} rad is outside [-pi/2, pi/2]")]
    OutOfRangeAngle(f64),
    #[error("unknown object {0}")]
    UnknownObject(String),
    #[error("failure probability {0} is outside [0, 1)")]
    InvalidProbability(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrtParams {
    pub step: f64,
    pub goal_bias: f64,
    /// Resolution of segment collision checks.
    pub resolution: f64,
    pub iterations_per_ms: u64,
}

impl Default for RrtParams {
    fn default() -> Self {
        RrtParams {
            step: 0.03,
            goal_bias: 0.1,
            resolution: 0.005,
            iterations_per_ms: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GoalRegion {
    Point {
        center: Vec2,
        tolerance: f64,
    },
    /// Reach `pregrasp`, then move straight to `contact`.
    GraspApproach {
        target: String,
        angle: f64,
        standoff: f64,
        pregrasp: Vec2,
        contact: Vec2,
    },
}

impl GoalRegion {
    /// Point the tree grows toward.
    pub fn anchor(&self) -> Vec2 {
        match self {
            GoalRegion::Point { center, .. } => *center,
            GoalRegion::GraspApproach { pregrasp, .. } => *pregrasp,
        }
    }

    fn tolerance(&self) -> f64 {
        match self {
            GoalRegion::Point { tolerance, .. } => *tolerance,
            GoalRegion::GraspApproach { .. } => 1e-9,
        }
    }

    pub fn contains(&self, q: Vec2) -> bool {
        match self {
            GoalRegion::Point { center, tolerance } => q.dist(*center) <= *tolerance,
            GoalRegion::GraspApproach { contact, .. } => q.dist(*contact) <= 1e-9,
        }
    }
}

/// Side-grasp goal for `target` at `angle` from the target→base direction.
///
/// The gripper touches the target at `contact` and comes in from
/// `pregrasp`, `standoff` further out along the same direction.
pub fn grasp_goal(
    snapshot: &WorkspaceSnapshot,
    robot: &RobotModel,
    target: &str,
    angle: f64,
    standoff: f64,
) -> Result<GoalRegion, MotionError> {
    if !(-FRAC_PI_2 - 1e-9..=FRAC_PI_2 + 1e-9).contains(&angle) {
        return Err(MotionError::OutOfRangeAngle(angle));
    }
    let t = snapshot
        .object(target)
        .ok_or_else(|| MotionError::UnknownObject(target.to_string()))?;
    let c = t.center();
    let u = (robot.base.position() - c).normalized().rotate(angle);
    let contact = c + u * (t.shape.bounding_radius() + robot.gripper_radius);
    Ok(GoalRegion::GraspApproach {
        target: target.to_string(),
        angle,
        standoff,
        pregrasp: contact + u * standoff,
        contact,
    })
}

/// Region the end-effector may occupy: the table and storage area, with a
/// small margin.
pub fn motion_bounds(snapshot: &WorkspaceSnapshot) -> Rect {
    let t = snapshot.table;
    let s = snapshot.storage;
    Rect::new(
        t.min.x.min(s.min.x) - BOUNDS_MARGIN,
        t.min.y.min(s.min.y) - BOUNDS_MARGIN,
        t.max.x.max(s.max.x) + BOUNDS_MARGIN,
        t.max.y.max(s.max.y) + BOUNDS_MARGIN,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionDomain {
    pub bounds: Rect,
    pub obstacles: Vec<(String, Footprint)>,
    pub moving_radius: f64,
    pub goal: GoalRegion,
}

impl MotionDomain {
    /// Obstacles are every object not held, stacked ones included, except
    /// the grasp target.
    pub fn new(snapshot: &WorkspaceSnapshot, moving_radius: f64, goal: GoalRegion) -> Self {
        let skip = match &goal {
            GoalRegion::GraspApproach { target, .. } => Some(target.clone()),
            GoalRegion::Point { .. } => None,
        };
        let obstacles = snapshot
            .objects
            .iter()
            .filter(|o| !o.is_held() && Some(&o.id) != skip.as_ref())
            .map(|o| (o.id.clone(), o.footprint()))
            .collect();
        MotionDomain {
            bounds: motion_bounds(snapshot),
            obstacles,
            moving_radius,
            goal,
        }
    }

    pub fn excluding(mut self, ids: &BTreeSet<String>) -> Self {
        self.obstacles.retain(|(id, _)| !ids.contains(id));
        self
    }

    pub fn without_obstacles(mut self) -> Self {
        self.obstacles.clear();
        self
    }

    pub fn collision_free(&self, q: Configuration) -> bool {
        q.is_finite()
            && self.bounds.contains_disc(q, self.moving_radius)
            && self.obstacles.iter().all(|(_, f)| f.clearance(q) >= self.moving_radius)
    }

    /// Checks the segment at the configured resolution, endpoints included.
    pub fn segment_free(&self, a: Configuration, b: Configuration, resolution: f64) -> bool {
        let n = (a.dist(b) / resolution).ceil().max(1.0) as usize;
        (0..=n).all(|i| self.collision_free(a + (b - a) * (i as f64 / n as f64)))
    }

    /// The straight final approach of a grasp, if any, is collision-free.
    pub fn approach_free(&self, resolution: f64) -> bool {
        match &self.goal {
            GoalRegion::GraspApproach { pregrasp, contact, .. } => self.segment_free(*pregrasp, *contact, resolution),
            GoalRegion::Point { center, .. } => self.collision_free(*center),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: Vec<Configuration>,
    pub cost: f64,
}

impl Trajectory {
    pub fn new(waypoints: Vec<Configuration>) -> Self {
        let cost = waypoints.windows(2).map(|w| w[0].dist(w[1])).sum();
        Trajectory { waypoints, cost }
    }

    pub fn start(&self) -> Configuration {
        self.waypoints[0]
    }

    pub fn end(&self) -> Configuration {
        *self.waypoints.last().unwrap()
    }

    /// Position at arc-length parameter `u` in `[0, 1]`.
    pub fn at(&self, u: f64) -> Configuration {
        let target = u.clamp(0.0, 1.0) * self.cost;
        let mut acc = 0.0;
        for w in self.waypoints.windows(2) {
            let l = w[0].dist(w[1]);
            if acc + l >= target && l > 0.0 {
                return w[0] + (w[1] - w[0]) * ((target - acc) / l);
            }
            acc += l;
        }
        self.end()
    }
}

/// Independent post-hoc check of a trajectory against a domain.
pub fn validate_trajectory(traj: &Trajectory, domain: &MotionDomain, resolution: f64) -> Result<(), String> {
    if traj.waypoints.is_empty() {
        return Err("empty trajectory".into());
    }
    for (i, q) in traj.waypoints.iter().enumerate() {
        if !domain.collision_free(*q) {
            return Err(format!("waypoint {i} at ({:.4}, {:.4}) collides", q.x, q.y));
        }
    }
    for (i, w) in traj.waypoints.windows(2).enumerate() {
        if !domain.segment_free(w[0], w[1], resolution) {
            return Err(format!("segment {i} collides"));
        }
    }
    if !domain.goal.contains(traj.end()) {
        return Err("trajectory does not end in the goal region".into());
    }
    Ok(())
}

/// Uniform grid over the tree nodes for nearest-neighbour queries.
struct NodeGrid {
    origin: Vec2,
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl NodeGrid {
    fn new(bounds: Rect, cell: f64) -> Self {
        let cols = ((bounds.width() / cell).ceil() as usize).max(1);
        let rows = ((bounds.height() / cell).ceil() as usize).max(1);
        NodeGrid {
            origin: bounds.min,
            cell,
            cols,
            rows,
            buckets: vec![Vec::new(); cols * rows],
        }
    }

    fn cell_of(&self, p: Vec2) -> (usize, usize) {
        let cx = ((p.x - self.origin.x) / self.cell).floor().clamp(0.0, (self.cols - 1) as f64) as usize;
        let cy = ((p.y - self.origin.y) / self.cell).floor().clamp(0.0, (self.rows - 1) as f64) as usize;
        (cx, cy)
    }

    fn insert(&mut self, p: Vec2, idx: usize) {
        let (cx, cy) = self.cell_of(p);
        self.buckets[cy * self.cols + cx].push(idx);
    }

    /// Nearest node, lowest index on ties.
    fn nearest(&self, p: Vec2, nodes: &[(Vec2, usize)]) -> usize {
        let (cx, cy) = self.cell_of(p);
        let mut best = (f64::INFINITY, usize::MAX);
        let max_ring = self.cols.max(self.rows);
        for ring in 0..=max_ring {
            // Anything in ring k is at least (k - 1) cells away.
            if best.1 != usize::MAX && (ring as f64 - 1.0) * self.cell > best.0 {
                break;
            }
            let (x0, x1) = (cx as i64 - ring as i64, cx as i64 + ring as i64);
            let (y0, y1) = (cy as i64 - ring as i64, cy as i64 + ring as i64);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let on_ring = x == x0 || x == x1 || y == y0 || y == y1;
                    if !on_ring || x < 0 || y < 0 || x >= self.cols as i64 || y >= self.rows as i64 {
                        continue;
                    }
                    for &i in &self.buckets[y as usize * self.cols + x as usize] {
                        let d = nodes[i].0.dist(p);
                        if d < best.0 || (d == best.0 && i < best.1) {
                            best = (d, i);
                        }
                    }
                }
            }
        }
        best.1
    }
}

/// RRT planner with an attempt counter.
#[derive(Debug, Clone, Default)]
pub struct MotionPlanner {
    pub params: RrtParams,
    /// Straight-line plans that always succeed, for pure task-level runs.
    pub ideal: bool,
    attempts: u64,
    iterations: u64,
}

impl MotionPlanner {
    pub fn new(params: RrtParams) -> Self {
        MotionPlanner {
            params,
            ..Default::default()
        }
    }

    pub fn ideal() -> Self {
        MotionPlanner {
            ideal: true,
            ..Default::default()
        }
    }

    /// Number of `plan` invocations so far.
    pub fn attempts(&self) -> u64 {
        self.attempts
    }

    /// RRT iterations spent so far, across all invocations.
    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn iteration_cap(&self, budget_ms: u64) -> u64 {
        budget_ms.saturating_mul(self.params.iterations_per_ms)
    }

    /// Plans from `start` into the goal region. `Ok(None)` means the budget
    /// ran out or the goal itself is blocked.
    pub fn plan(
        &mut self,
        domain: &MotionDomain,
        start: Configuration,
        budget_ms: u64,
        seed: u64,
    ) -> Result<Option<Trajectory>, MotionError> {
        self.attempts += 1;
        if self.ideal {
            let mut w = vec![start];
            if let GoalRegion::GraspApproach { pregrasp, .. } = domain.goal {
                w.push(pregrasp);
            }
            let end = match &domain.goal {
                GoalRegion::Point { center, .. } => *center,
                GoalRegion::GraspApproach { contact, .. } => *contact,
            };
            w.push(end);
            w.dedup();
            return Ok(Some(Trajectory::new(w)));
        }
        if !domain.collision_free(start) {
            return Err(MotionError::InvalidStart(start.x, start.y));
        }
        let p = self.params;
        let anchor = domain.goal.anchor();
        let approach = match &domain.goal {
            GoalRegion::GraspApproach { contact, .. } => Some(*contact),
            GoalRegion::Point { .. } => None,
        };
        if !domain.collision_free(anchor) || !domain.approach_free(p.resolution) {
            return Ok(None);
        }
        let finish = |mut path: Vec<Vec2>| {
            if let Some(c) = approach {
                path.push(c);
            }
            path.dedup();
            Trajectory::new(path)
        };
        if start.dist(anchor) <= domain.goal.tolerance() {
            return Ok(Some(finish(vec![start])));
        }
        if start.dist(anchor) <= p.step && domain.segment_free(start, anchor, p.resolution) {
            return Ok(Some(finish(vec![start, anchor])));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = domain.bounds;
        let mut nodes: Vec<(Vec2, usize)> = vec![(start, usize::MAX)];
        let mut grid = NodeGrid::new(b, 0.05);
        grid.insert(start, 0);
        let cap = self.iteration_cap(budget_ms);
        for _ in 0..cap {
            self.iterations += 1;
            let sample = if rng.gen::<f64>() < p.goal_bias {
                anchor
            } else {
                Vec2::new(rng.gen_range(b.min.x..=b.max.x), rng.gen_range(b.min.y..=b.max.y))
            };
            let near = grid.nearest(sample, &nodes);
            let from = nodes[near].0;
            let d = from.dist(sample);
            if d == 0.0 {
                continue;
            }
            let new = if d <= p.step { sample } else { from + (sample - from) * (p.step / d) };
            if !domain.segment_free(from, new, p.resolution) {
                continue;
            }
            nodes.push((new, near));
            let idx = nodes.len() - 1;
            grid.insert(new, idx);
            if new.dist(anchor) <= p.step && domain.segment_free(new, anchor, p.resolution) {
                let mut path = vec![anchor];
                let mut i = idx;
                while i != usize::MAX {
                    path.push(nodes[i].0);
                    i = nodes[i].1;
                }
                path.reverse();
                return Ok(Some(finish(path)));
            }
        }
        Ok(None)
    }
}

/// Seeded Bernoulli execution failures.
#[derive(Debug, Clone)]
pub struct FailureModel {
    p: f64,
    rng: ChaCha8Rng,
}

impl FailureModel {
    pub fn new(p: f64, seed: u64) -> Result<Self, MotionError> {
        if !(0.0..1.0).contains(&p) {
            return Err(MotionError::InvalidProbability(p));
        }
        Ok(FailureModel {
            p,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn probability(&self) -> f64 {
        self.p
    }

    /// Returns false with probability `p`.
    pub fn simulate_execute(&mut self, _traj: &Trajectory) -> bool {
        self.rng.gen::<f64>() >= self.p
    }
}
