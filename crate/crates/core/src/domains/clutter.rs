//! Table-top clutter: grasp one target among movable objects, storing or
//! pushing whatever is in the way.
//!
//! Every arc out of the root is an alternative. Picking the target leads to
//! the goal; picking or pushing anything else ends the graph in a failure
//! terminal, which hands the next graph a less cluttered table.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{standard_robot, DomainError, GraphBuilder, GRIPPER_RADIUS};
use crate::geometry::{point_segment_distance, Rect, Vec2};
use crate::graph::{ActionSpec, AugmentedArcSpec, GraphTemplate, HyperArc, NodeKind, Verb};
use crate::heuristic::{feasible_angles, objects_to_rearrange};
use crate::motion::{grasp_goal, GoalRegion, DEFAULT_STANDOFF};
use crate::planner::{Binding, DomainTemplate, Grounding, MotionGoal, Step, TaskContext};
use crate::workspace::{
    ActionEffect, ArmModel, Category, Destination, Location, ObjectModel, Pose, RobotModel, Scenario, Shape, SimConfig,
    WorkspaceSnapshot,
};

pub const INIT: &str = "INIT";
pub const GRASPED_TARGET: &str = "grasped_target_object";
pub const GRASPED_CLOSEST_TARGET: &str = "grasped_object_closest_target_object";
pub const GRASPED_CLOSEST_ARMS: &str = "grasped_object_closest_to_arms";
pub const PUSHED_LARGEST: &str = "pushed_largest_object";
pub const PLACED_STORAGE: &str = "placed_object_storage_area";
pub const END: &str = "END";

const LABELS: [&str; 7] = [
    INIT,
    GRASPED_TARGET,
    GRASPED_CLOSEST_TARGET,
    GRASPED_CLOSEST_ARMS,
    PUSHED_LARGEST,
    PLACED_STORAGE,
    END,
];

/// How many objects nearest the arms are offered at once.
const CLOSEST_TO_ARMS: usize = 3;

pub fn clutter_table() -> Rect {
    Rect::new(0.0, 0.0, 1.0, 0.8)
}

pub fn clutter_storage() -> Rect {
    Rect::new(1.05, 0.0, 1.35, 0.8)
}

pub fn clutter_template() -> DomainTemplate {
    let mut b = GraphBuilder::default();
    let target = b.node(GRASPED_TARGET, NodeKind::Internal);
    let near_target = b.node(GRASPED_CLOSEST_TARGET, NodeKind::Internal);
    let near_arms = b.node(GRASPED_CLOSEST_ARMS, NodeKind::Internal);
    b.node(PUSHED_LARGEST, NodeKind::FailureTerminal);
    let placed = b.node(PLACED_STORAGE, NodeKind::FailureTerminal);
    let end = b.node(END, NodeKind::SuccessTerminal);
    let place = || vec![ActionSpec::geometric(Verb::Place, "$held")];
    b.arc(&[near_target], placed, place(), 1.0);
    b.arc(&[near_arms], placed, place(), 1.0);
    b.arc(&[target], end, vec![ActionSpec::geometric(Verb::Place, "$target")], 1.0);
    let pick = |role: &str| vec![ActionSpec::geometric(Verb::Pick, role)];
    let template = GraphTemplate {
        root_label: INIT.to_string(),
        graph: b.build(),
        augmented: vec![
            AugmentedArcSpec::to(GRASPED_TARGET).with_actions(pick("$target")).with_cost(1.0),
            AugmentedArcSpec::to(GRASPED_CLOSEST_TARGET)
                .with_actions(pick("$closest_to_target"))
                .with_cost(1.0),
            AugmentedArcSpec::to(GRASPED_CLOSEST_ARMS)
                .with_actions(pick("$closest_to_arms"))
                .with_cost(2.0),
            AugmentedArcSpec::to(PUSHED_LARGEST)
                .with_actions(vec![ActionSpec::geometric(Verb::Push, "$largest")])
                .with_cost(3.0),
        ],
    };
    DomainTemplate {
        name: "clutter".into(),
        template,
        binding: Arc::new(ClutterBinding::default()),
        agents: vec!["left".into(), "right".into()],
    }
}

#[derive(Debug, Clone)]
pub struct ClutterBinding {
    pub storage_pitch: f64,
}

impl Default for ClutterBinding {
    fn default() -> Self {
        ClutterBinding {
            storage_pitch: SimConfig::default().storage_pitch,
        }
    }
}

fn arm_holding<'r>(r: &'r RobotModel, pred: impl Fn(&str) -> bool) -> Option<(&'r ArmModel, &'r str)> {
    r.arms
        .iter()
        .find_map(|a| a.holding.as_deref().filter(|h| pred(h)).map(|h| (a, h)))
}

fn agent(r: &RobotModel, a: &ArmModel) -> String {
    format!("{}/{}", r.id, a.id)
}

fn movable(o: &ObjectModel) -> bool {
    o.on_table() && matches!(o.category, Category::Graspable | Category::PushableOnly)
}

/// Table objects plausibly in the way of grasping `target`: those in the
/// triangle estimate, those crowding the target, and those near the straight
/// approach from the base or from either arm's rest position.
pub fn relevant_objects<'s>(
    s: &'s WorkspaceSnapshot,
    r: &RobotModel,
    target: &str,
    standoff: f64,
) -> Vec<&'s ObjectModel> {
    let Some(t) = s.object(target) else { return Vec::new() };
    let c = t.center();
    let rt = t.shape.bounding_radius();
    let g = r.gripper_radius;
    let tri = objects_to_rearrange(s, r, target, standoff).unwrap_or_default();
    let pregrasp = match grasp_goal(s, r, target, 0.0, standoff) {
        Ok(GoalRegion::GraspApproach { pregrasp, .. }) => pregrasp,
        _ => c,
    };
    let base = r.base.position();
    let homes: Vec<Vec2> = r.arms.iter().map(|a| r.home(a)).collect();
    s.objects
        .iter()
        .filter(|o| movable(o) && o.id != target)
        .filter(|o| {
            let oc = o.center();
            let ro = o.shape.bounding_radius();
            let lane = ro + g + 0.01;
            tri.contains(&o.id)
                || oc.dist(c) - ro - rt < 2.0 * g + 0.02
                || point_segment_distance(oc, c, base) < lane
                || homes.iter().any(|h| point_segment_distance(oc, *h, pregrasp) < lane)
        })
        .collect()
}

fn closest_to_target<'s>(s: &'s WorkspaceSnapshot, r: &RobotModel, target: &str, standoff: f64) -> Option<&'s ObjectModel> {
    let c = s.object(target)?.center();
    relevant_objects(s, r, target, standoff)
        .into_iter()
        .filter(|o| o.category == Category::Graspable)
        .min_by(|a, b| a.center().dist(c).total_cmp(&b.center().dist(c)).then(a.id.cmp(&b.id)))
}

fn closest_to_arms<'s>(s: &'s WorkspaceSnapshot, r: &RobotModel, target: &str, standoff: f64) -> Vec<&'s ObjectModel> {
    let homes: Vec<Vec2> = r.arms.iter().map(|a| r.home(a)).collect();
    let key = |o: &ObjectModel| homes.iter().map(|h| h.dist(o.center())).fold(f64::INFINITY, f64::min);
    let mut v: Vec<&ObjectModel> = relevant_objects(s, r, target, standoff)
        .into_iter()
        .filter(|o| o.category == Category::Graspable)
        .collect();
    v.sort_by(|a, b| key(a).total_cmp(&key(b)).then(a.id.cmp(&b.id)));
    v.truncate(CLOSEST_TO_ARMS);
    v
}

fn largest_pushable<'s>(s: &'s WorkspaceSnapshot, r: &RobotModel, target: &str, standoff: f64) -> Option<&'s ObjectModel> {
    relevant_objects(s, r, target, standoff)
        .into_iter()
        .filter(|o| o.category == Category::PushableOnly)
        .max_by(|a, b| {
            a.shape
                .max_dimension()
                .total_cmp(&b.shape.max_dimension())
                .then(b.id.cmp(&a.id))
        })
}

fn picks(r: &RobotModel, object: &str) -> Vec<Grounding> {
    r.arms
        .iter()
        .filter(|a| a.holding.is_none())
        .map(|a| {
            Grounding::new(
                agent(r, a),
                vec![Step::new(
                    MotionGoal::Grasp {
                        robot: r.id.clone(),
                        arm: a.id.clone(),
                        object: object.to_string(),
                    },
                    ActionEffect::Pick {
                        object: object.to_string(),
                        robot: r.id.clone(),
                        arm: a.id.clone(),
                    },
                )],
            )
        })
        .collect()
}

impl ClutterBinding {
    /// Storage cells away from every arm's rest position, so later motions
    /// never start in collision with a stored object.
    fn storage_cell(&self, s: &WorkspaceSnapshot, shape: &Shape, accept: impl Fn(Vec2) -> bool) -> Option<Vec2> {
        let homes: Vec<Vec2> = s.robots.iter().flat_map(|r| r.arms.iter().map(|a| r.home(a))).collect();
        let clear = GRIPPER_RADIUS + 0.04 + shape.bounding_radius() + 0.005;
        s.storage_slot_where(shape, self.storage_pitch, |p| homes.iter().all(|h| h.dist(p) > clear) && accept(p))
    }

    /// Carry what `holder` holds to a storage cell, handing it to the other
    /// arm first if only that one reaches storage.
    fn stow(&self, s: &WorkspaceSnapshot, r: &RobotModel, holder: &ArmModel, object: &str, ideal: bool) -> Vec<Grounding> {
        let Some(o) = s.object(object) else { return Vec::new() };
        let place = |arm: &ArmModel, p: Vec2| {
            vec![
                Step::new(
                    MotionGoal::Reach {
                        robot: r.id.clone(),
                        arm: arm.id.clone(),
                        point: p,
                        support: None,
                    },
                    ActionEffect::Place {
                        object: object.to_string(),
                        robot: r.id.clone(),
                        arm: arm.id.clone(),
                        dest: Destination::StorageAt { x: p.x, y: p.y },
                    },
                ),
            ]
        };
        if let Some(p) = self.storage_cell(s, &o.shape, |p| ideal || r.reaches(holder, p)) {
            return vec![Grounding::new(agent(r, holder), place(holder, p))];
        }
        let mut out = Vec::new();
        for other in r.arms.iter().filter(|a| a.id != holder.id && a.holding.is_none()) {
            if let Some(p) = self.storage_cell(s, &o.shape, |p| r.reaches(other, p)) {
                let mut steps = vec![Step::symbolic(ActionEffect::Handover {
                    robot: r.id.clone(),
                    from_arm: holder.id.clone(),
                    to_arm: other.id.clone(),
                })];
                steps.extend(place(other, p));
                out.push(Grounding::new(agent(r, other), steps));
            }
        }
        out
    }

    fn push(&self, r: &RobotModel, o: &ObjectModel, ideal: bool) -> Vec<Grounding> {
        let c = o.center();
        let dir = (c - r.base.position()).normalized();
        let behind = c - dir * (o.shape.bounding_radius() + r.gripper_radius + 0.01);
        r.arms
            .iter()
            .filter(|a| a.holding.is_none() && (ideal || r.reaches(a, behind)))
            .map(|a| {
                Grounding::new(
                    agent(r, a),
                    vec![Step::new(
                        MotionGoal::Reach {
                            robot: r.id.clone(),
                            arm: a.id.clone(),
                            point: behind,
                            support: None,
                        },
                        ActionEffect::Push {
                            object: o.id.clone(),
                            robot: r.id.clone(),
                        },
                    )],
                )
            })
            .collect()
    }
}

impl Binding for ClutterBinding {
    fn holds(&self, label: &str, s: &WorkspaceSnapshot, ctx: &TaskContext) -> bool {
        let Some(r) = ctx.robot_model(s) else { return false };
        let target = ctx.target.unwrap_or_default();
        let holds_other = arm_holding(r, |h| h != target).is_some();
        match label {
            INIT => true,
            GRASPED_TARGET => arm_holding(r, |h| h == target).is_some(),
            GRASPED_CLOSEST_TARGET | GRASPED_CLOSEST_ARMS => holds_other,
            PLACED_STORAGE => !holds_other,
            PUSHED_LARGEST => s.objects.iter().any(|o| {
                o.category == Category::PushableOnly && ctx.binding.object(&o.id).is_some_and(|b| b.pose != o.pose)
            }),
            END => s.object(target).is_some_and(|o| o.location == Location::Storage),
            _ => false,
        }
    }

    fn ground(&self, _arc: &HyperArc, parent: &str, s: &WorkspaceSnapshot, ctx: &TaskContext) -> Vec<Grounding> {
        let (Some(r), Some(target)) = (ctx.robot_model(s), ctx.target) else {
            return Vec::new();
        };
        let has_target = arm_holding(r, |h| h == target);
        let has_other = arm_holding(r, |h| h != target);
        let busy = has_target.is_some() || has_other.is_some();
        match parent {
            GRASPED_TARGET if has_target.is_some() => vec![Grounding::empty()],
            GRASPED_TARGET if busy => Vec::new(),
            GRASPED_TARGET => picks(r, target),
            GRASPED_CLOSEST_TARGET | GRASPED_CLOSEST_ARMS if has_target.is_some() => Vec::new(),
            GRASPED_CLOSEST_TARGET | GRASPED_CLOSEST_ARMS if has_other.is_some() => vec![Grounding::empty()],
            GRASPED_CLOSEST_TARGET => closest_to_target(s, r, target, ctx.standoff)
                .map(|o| picks(r, &o.id))
                .unwrap_or_default(),
            GRASPED_CLOSEST_ARMS => closest_to_arms(s, r, target, ctx.standoff)
                .into_iter()
                .flat_map(|o| picks(r, &o.id))
                .collect(),
            PUSHED_LARGEST => largest_pushable(s, r, target, ctx.standoff)
                .map(|o| self.push(r, o, ctx.ideal))
                .unwrap_or_default(),
            PLACED_STORAGE => match has_other {
                Some((a, h)) => self.stow(s, r, a, h, ctx.ideal),
                None => Vec::new(),
            },
            END => match has_target {
                Some((a, h)) => self.stow(s, r, a, h, ctx.ideal),
                None => Vec::new(),
            },
            _ => Vec::new(),
        }
    }

    fn counts_as_rearrangement(&self, label: &str) -> bool {
        matches!(label, PLACED_STORAGE | PUSHED_LARGEST)
    }

    fn knows_label(&self, label: &str) -> bool {
        LABELS.contains(&label)
    }

    fn knows_verb(&self, verb: Verb) -> bool {
        matches!(verb, Verb::Pick | Verb::Place | Verb::Push | Verb::Handover)
    }
}

/// Knobs for [`generate_clutter_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClutterParams {
    pub objects: usize,
    pub robots: usize,
    pub targets: usize,
    pub seed: u64,
    pub min_radius: f64,
    pub max_radius: f64,
}

impl ClutterParams {
    pub fn new(objects: usize, robots: usize, seed: u64) -> Self {
        ClutterParams {
            objects,
            robots,
            targets: robots.min(objects).max(1),
            seed,
            min_radius: 0.02,
            max_radius: 0.04,
        }
    }
}

pub const MAX_PLACEMENT_TRIES: usize = 10_000;
/// Densest packing of equal discs in the plane.
const HEX_DENSITY: f64 = 0.9069;
/// Free disc kept around every arm's rest position.
const HOME_CLEARANCE: f64 = 0.15;

/// Random clutter: one target per robot unless asked otherwise, radii
/// uniform in [0.02, 0.04] m.
pub fn generate_clutter(n_objects: usize, n_robots: usize, seed: u64) -> Result<Scenario, DomainError> {
    generate_clutter_with(ClutterParams::new(n_objects, n_robots, seed))
}

fn base_scenario(robots: usize, seed: u64) -> Scenario {
    Scenario {
        table: clutter_table(),
        storage: clutter_storage(),
        objects: Vec::new(),
        robots: (0..robots).map(standard_robot).collect(),
        targets: Vec::new(),
        seed,
        stations: BTreeMap::new(),
    }
}

fn category_for(radius: f64) -> Category {
    if SimConfig::default().is_pushable_only(&Shape::Disc { radius }, GRIPPER_RADIUS) {
        Category::PushableOnly
    } else {
        Category::Graspable
    }
}

pub fn generate_clutter_with(p: ClutterParams) -> Result<Scenario, DomainError> {
    if !(1..=4).contains(&p.robots) {
        return Err(DomainError::InvalidParameters(format!("{} robots; 1 to 4 supported", p.robots)));
    }
    if p.objects == 0 || p.targets == 0 || p.targets > p.objects {
        return Err(DomainError::InvalidParameters(format!(
            "{} objects with {} targets",
            p.objects, p.targets
        )));
    }
    if !(p.min_radius > 0.0 && p.min_radius <= p.max_radius) {
        return Err(DomainError::InvalidParameters("radius range".into()));
    }
    let mut sc = base_scenario(p.robots, p.seed);
    let table = sc.table;
    let min_area = p.objects as f64 * std::f64::consts::PI * p.min_radius * p.min_radius;
    if min_area > HEX_DENSITY * table.width() * table.height() {
        return Err(DomainError::PackingFailure {
            placed: 0,
            requested: p.objects,
        });
    }
    let homes: Vec<Vec2> = sc.robots.iter().flat_map(|r| r.arms.iter().map(|a| r.home(a))).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut placed: Vec<(Vec2, f64)> = Vec::with_capacity(p.objects);
    for i in 0..p.objects {
        let mut ok = None;
        for _ in 0..MAX_PLACEMENT_TRIES {
            let r = rng.gen_range(p.min_radius..=p.max_radius);
            let c = Vec2::new(
                rng.gen_range(table.min.x + r..=table.max.x - r),
                rng.gen_range(table.min.y + r..=table.max.y - r),
            );
            let free = placed.iter().all(|(q, rq)| q.dist(c) > r + rq + 0.005)
                && homes.iter().all(|h| h.dist(c) > HOME_CLEARANCE + r);
            if free {
                ok = Some((c, r));
                break;
            }
        }
        let Some(disc) = ok else {
            return Err(DomainError::PackingFailure {
                placed: i,
                requested: p.objects,
            });
        };
        placed.push(disc);
    }
    sc.objects = placed
        .iter()
        .enumerate()
        .map(|(i, (c, r))| ObjectModel::disc(format!("o{i:02}"), c.x, c.y, *r, category_for(*r)))
        .collect();
    let snap = sc.snapshot();
    let mut candidates: Vec<usize> = (0..sc.objects.len())
        .filter(|&i| sc.objects[i].category == Category::Graspable)
        .filter(|&i| {
            snap.robots
                .iter()
                .any(|r| feasible_angles(&snap, r, &sc.objects[i].id, DEFAULT_STANDOFF).is_ok())
        })
        .collect();
    if candidates.len() < p.targets {
        return Err(DomainError::NoReachableTarget);
    }
    candidates.shuffle(&mut rng);
    candidates.truncate(p.targets);
    candidates.sort_unstable();
    for &i in &candidates {
        sc.objects[i].category = Category::Target;
        sc.targets.push(sc.objects[i].id.clone());
    }
    Ok(sc)
}

/// Interior half-width of the walled channel around blocked targets.
const CHANNEL_HALF_WIDTH: f64 = 0.08;
const WALL_HALF_THICKNESS: f64 = 0.02;
/// Spacing of the blockers along the channel.
const BLOCKER_PITCH: f64 = 0.13;
const BLOCKED_RADIUS: f64 = 0.03;

/// Target at `c` inside a walled channel pointing at robot 0, with
/// `blockers` discs lined up in front of it. Only a head-on grasp fits the
/// channel, so each blocker must be removed before the one behind it.
fn channel(c: Vec2, blockers: usize) -> Vec<ObjectModel> {
    let base = standard_robot(0).base.position();
    let u = (base - c).normalized();
    let perp = u.rotate(std::f64::consts::FRAC_PI_2);
    let back = 0.05;
    let front = BLOCKER_PITCH * blockers as f64 + 0.10;
    let mid = c + u * ((front - back) / 2.0);
    let half_len = (front + back) / 2.0;
    let yaw = u.y.atan2(u.x);
    let offset = CHANNEL_HALF_WIDTH + WALL_HALF_THICKNESS;
    let wall = |id: &str, side: f64| {
        let w = mid + perp * (side * offset);
        let mut o = ObjectModel::cuboid(id, w.x, w.y, half_len, WALL_HALF_THICKNESS, Category::Fixture);
        o.pose = Pose::new(w.x, w.y, yaw);
        o
    };
    let mut out = vec![
        wall("wall_a", 1.0),
        wall("wall_b", -1.0),
        ObjectModel::disc("target", c.x, c.y, BLOCKED_RADIUS, Category::Target),
    ];
    for k in 1..=blockers {
        let p = c + u * (BLOCKER_PITCH * k as f64);
        out.push(ObjectModel::disc(format!("b{k}"), p.x, p.y, BLOCKED_RADIUS, Category::Graspable));
    }
    out
}

/// Channel instance with `blockers` (0..=3) objects in front of the target
/// and random distractors kept clear of the channel and the arms' paths,
/// `n_objects` movable objects in total. One robot.
pub fn blocked_clutter(n_objects: usize, blockers: usize, seed: u64) -> Result<Scenario, DomainError> {
    if blockers > 3 || n_objects < blockers + 1 {
        return Err(DomainError::InvalidParameters(format!(
            "{n_objects} objects with {blockers} blockers"
        )));
    }
    let mut sc = base_scenario(1, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c = Vec2::new(rng.gen_range(0.35..=0.65), rng.gen_range(0.6..=0.7));
    sc.objects = channel(c, blockers);
    let robot = &sc.robots[0];
    let homes: Vec<Vec2> = robot.arms.iter().map(|a| robot.home(a)).collect();
    let u = (robot.base.position() - c).normalized();
    let mouth = c + u * (BLOCKER_PITCH * blockers as f64 + 0.2);
    let storage_entry = Vec2::new(sc.storage.min.x + 0.05, sc.storage.min.y + 0.1);
    let mut lanes: Vec<(Vec2, Vec2)> = homes.iter().map(|h| (*h, mouth)).collect();
    lanes.extend(homes.iter().map(|h| (*h, storage_entry)));
    lanes.push((c, mouth));
    let fixtures: Vec<_> = sc.objects[..2].iter().map(|o| o.footprint()).collect();
    let table = sc.table;
    for i in 0..n_objects - blockers - 1 {
        let mut ok = None;
        for _ in 0..MAX_PLACEMENT_TRIES {
            let r = rng.gen_range(0.02..=0.035);
            let p = Vec2::new(
                rng.gen_range(table.min.x + r..=table.max.x - r),
                rng.gen_range(table.min.y + r..=table.max.y - r),
            );
            let clear = sc
                .objects
                .iter()
                .filter(|o| o.category != Category::Fixture)
                .all(|o| o.center().dist(p) > o.shape.bounding_radius() + r + 0.01)
                && fixtures.iter().all(|f| f.clearance(p) > r + 0.1)
                && homes.iter().all(|h| h.dist(p) > HOME_CLEARANCE + r)
                && lanes
                    .iter()
                    .all(|(a, b)| point_segment_distance(p, *a, *b) > r + GRIPPER_RADIUS + 0.04);
            if clear {
                ok = Some((p, r));
                break;
            }
        }
        let Some((p, r)) = ok else {
            return Err(DomainError::PackingFailure {
                placed: i + blockers + 1,
                requested: n_objects,
            });
        };
        sc.objects.push(ObjectModel::disc(format!("o{}", i + 1), p.x, p.y, r, Category::Graspable));
    }
    sc.targets = vec!["target".into()];
    Ok(sc)
}

/// Fixed channel instance with two blockers and three distractors.
pub fn two_blocker_instance() -> Scenario {
    let mut sc = base_scenario(1, 0);
    sc.objects = channel(Vec2::new(0.5, 0.65), 2);
    sc.objects.push(ObjectModel::disc("o1", 0.12, 0.65, 0.03, Category::Graspable));
    sc.objects.push(ObjectModel::disc("o2", 0.88, 0.65, 0.03, Category::Graspable));
    sc.objects.push(ObjectModel::disc("o3", 0.85, 0.35, 0.025, Category::Graspable));
    sc.targets = vec!["target".into()];
    sc
}
