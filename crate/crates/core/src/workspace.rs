//! Top-down table-top world: objects, robots, the knowledge base holding the
//! current snapshot, and the effects that move the world forward.
//!
//! Sensing is exact. `sense` returns the stored snapshot, and every change
//! goes through [`KnowledgeBase::apply`], which checks the effect against the
//! current snapshot and archives the previous one.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{convex_convex_distance, point_convex_distance, Rect, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    #[serde(default)]
    pub yaw: f64,
}

impl Pose {
    pub const fn new(x: f64, y: f64, yaw: f64) -> Self {
        Pose { x, y, yaw }
    }

    pub fn position(&self) -> Vec2 {
        Vec2::new(self.x, self.y)
    }

    /// Maps a point from this frame to the world frame.
    pub fn transform(&self, local: Vec2) -> Vec2 {
        self.position() + local.rotate(self.yaw)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Shape {
    Disc { radius: f64 },
    Box { half_x: f64, half_y: f64 },
}

impl Shape {
    pub fn max_dimension(&self) -> f64 {
        match *self {
            Shape::Disc { radius } => 2.0 * radius,
            Shape::Box { half_x, half_y } => 2.0 * half_x.max(half_y),
        }
    }

    /// Radius of the smallest disc around the center enclosing the shape.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Shape::Disc { radius } => radius,
            Shape::Box { half_x, half_y } => half_x.hypot(half_y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Graspable,
    PushableOnly,
    Target,
    Fixture,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    Clean,
    Dirty,
    Cooked,
    Raw,
}

/// What a fixture does for objects resting on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Appliance {
    Microwave,
    Dishwasher,
    Rod,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "at", rename_all = "kebab-case")]
pub enum Location {
    #[default]
    Table,
    Storage,
    Held {
        robot: String,
        arm: String,
    },
    /// Resting on a fixture, `level` 0 being the lowest.
    On {
        support: String,
        level: u32,
    },
}

/// Footprint in world coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Footprint {
    Disc { center: Vec2, radius: f64 },
    Polygon(Vec<Vec2>),
}

impl Footprint {
    /// Distance from `p` to the footprint boundary; negative inside a disc,
    /// zero inside a polygon.
    pub fn clearance(&self, p: Vec2) -> f64 {
        match self {
            Footprint::Disc { center, radius } => p.dist(*center) - radius,
            Footprint::Polygon(poly) => point_convex_distance(poly, p),
        }
    }

    /// Whether the interiors intersect. Touching discs do not overlap.
    pub fn overlaps(&self, other: &Footprint) -> bool {
        match (self, other) {
            (Footprint::Disc { center: a, radius: ra }, Footprint::Disc { center: b, radius: rb }) => {
                a.dist(*b) < ra + rb
            }
            (Footprint::Disc { center, radius }, Footprint::Polygon(poly))
            | (Footprint::Polygon(poly), Footprint::Disc { center, radius }) => {
                point_convex_distance(poly, *center) < *radius
            }
            (Footprint::Polygon(a), Footprint::Polygon(b)) => convex_convex_distance(a, b) <= 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectModel {
    pub id: String,
    pub shape: Shape,
    pub pose: Pose,
    pub category: Category,
    #[serde(default)]
    pub tags: BTreeSet<Tag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub appliance: Option<Appliance>,
    #[serde(default)]
    pub location: Location,
}

impl ObjectModel {
    pub fn disc(id: impl Into<String>, x: f64, y: f64, radius: f64, category: Category) -> Self {
        ObjectModel {
            id: id.into(),
            shape: Shape::Disc { radius },
            pose: Pose::new(x, y, 0.0),
            category,
            tags: BTreeSet::new(),
            appliance: None,
            location: Location::Table,
        }
    }

    pub fn cuboid(id: impl Into<String>, x: f64, y: f64, half_x: f64, half_y: f64, category: Category) -> Self {
        ObjectModel {
            id: id.into(),
            shape: Shape::Box { half_x, half_y },
            pose: Pose::new(x, y, 0.0),
            category,
            tags: BTreeSet::new(),
            appliance: None,
            location: Location::Table,
        }
    }

    pub fn with_tags(mut self, tags: &[Tag]) -> Self {
        self.tags = tags.iter().copied().collect();
        self
    }

    pub fn with_appliance(mut self, appliance: Appliance) -> Self {
        self.appliance = Some(appliance);
        self
    }

    pub fn center(&self) -> Vec2 {
        self.pose.position()
    }

    pub fn footprint(&self) -> Footprint {
        match self.shape {
            Shape::Disc { radius } => Footprint::Disc {
                center: self.center(),
                radius,
            },
            Shape::Box { half_x, half_y } => Footprint::Polygon(
                [(-half_x, -half_y), (half_x, -half_y), (half_x, half_y), (-half_x, half_y)]
                    .iter()
                    .map(|&(x, y)| self.pose.transform(Vec2::new(x, y)))
                    .collect(),
            ),
        }
    }

    pub fn is_held(&self) -> bool {
        matches!(self.location, Location::Held { .. })
    }

    /// Occupies table or storage space on its own (not held, not stacked).
    pub fn is_free_standing(&self) -> bool {
        matches!(self.location, Location::Table | Location::Storage)
    }

    pub fn on_table(&self) -> bool {
        matches!(self.location, Location::Table)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    pub id: String,
    /// Center of the reach disc, in the base frame.
    pub reach_center: Vec2,
    pub reach_radius: f64,
    /// Rest position of the end-effector, in the base frame. Every motion
    /// starts here.
    pub home: Vec2,
    #[serde(default)]
    pub holding: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub id: String,
    pub base: Pose,
    pub arms: Vec<ArmModel>,
    pub gripper_radius: f64,
}

impl RobotModel {
    pub fn arm(&self, id: &str) -> Option<&ArmModel> {
        self.arms.iter().find(|a| a.id == id)
    }

    pub fn reach_center(&self, arm: &ArmModel) -> Vec2 {
        self.base.transform(arm.reach_center)
    }

    pub fn home(&self, arm: &ArmModel) -> Vec2 {
        self.base.transform(arm.home)
    }

    pub fn reaches(&self, arm: &ArmModel, p: Vec2) -> bool {
        self.reach_center(arm).dist(p) <= arm.reach_radius
    }
}

/// Parameters of the simulated world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// An object is pushable-only when its largest dimension exceeds this
    /// factor times the gripper radius.
    pub push_threshold: f64,
    pub push_distance: f64,
    pub storage_pitch: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            push_threshold: 1.5,
            push_distance: 0.10,
            storage_pitch: 0.05,
        }
    }
}

impl SimConfig {
    pub fn is_pushable_only(&self, shape: &Shape, gripper_radius: f64) -> bool {
        shape.max_dimension() > self.push_threshold * gripper_radius
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorkspaceSnapshot {
    pub table: Rect,
    pub storage: Rect,
    pub objects: Vec<ObjectModel>,
    pub robots: Vec<RobotModel>,
    /// Named base poses for mobile robots.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub stations: BTreeMap<String, Pose>,
    #[serde(default)]
    pub epoch: u64,
}

impl WorkspaceSnapshot {
    pub fn object(&self, id: &str) -> Option<&ObjectModel> {
        self.objects.iter().find(|o| o.id == id)
    }

    fn object_mut(&mut self, id: &str) -> Option<&mut ObjectModel> {
        self.objects.iter_mut().find(|o| o.id == id)
    }

    pub fn robot(&self, id: &str) -> Option<&RobotModel> {
        self.robots.iter().find(|r| r.id == id)
    }

    fn robot_mut(&mut self, id: &str) -> Option<&mut RobotModel> {
        self.robots.iter_mut().find(|r| r.id == id)
    }

    /// Objects stacked on `support`, lowest first.
    pub fn stack(&self, support: &str) -> Vec<&ObjectModel> {
        let mut s: Vec<(&ObjectModel, u32)> = self
            .objects
            .iter()
            .filter_map(|o| match &o.location {
                Location::On { support: s, level } if s == support => Some((o, *level)),
                _ => None,
            })
            .collect();
        s.sort_by_key(|(_, l)| *l);
        s.into_iter().map(|(o, _)| o).collect()
    }

    /// Pairs of free-standing objects whose footprints intersect.
    pub fn overlapping_pairs(&self) -> Vec<(String, String)> {
        let free: Vec<(&ObjectModel, Footprint)> = self
            .objects
            .iter()
            .filter(|o| o.is_free_standing())
            .map(|o| (o, o.footprint()))
            .collect();
        let mut out = Vec::new();
        for i in 0..free.len() {
            for j in (i + 1)..free.len() {
                if free[i].1.overlaps(&free[j].1) {
                    out.push((free[i].0.id.clone(), free[j].0.id.clone()));
                }
            }
        }
        out
    }

    /// True iff no two free-standing objects intersect. Held and stacked
    /// objects are exempt.
    pub fn overlap_free(&self) -> bool {
        self.overlapping_pairs().is_empty()
    }

    /// Every invariant violation, one line each.
    pub fn violations(&self, cfg: &SimConfig) -> Vec<String> {
        let mut v = Vec::new();
        let mut ids = BTreeSet::new();
        for o in &self.objects {
            if !ids.insert(o.id.as_str()) {
                v.push(format!("duplicate object id {}", o.id));
            }
            match o.shape {
                Shape::Disc { radius } if !(radius > 0.0) => v.push(format!("object {} has radius {radius}", o.id)),
                Shape::Box { half_x, half_y } if !(half_x > 0.0 && half_y > 0.0) => {
                    v.push(format!("object {} has a degenerate box", o.id))
                }
                _ => {}
            }
            if !o.center().is_finite() {
                v.push(format!("object {} has a non-finite pose", o.id));
            }
            let c = o.center();
            match &o.location {
                Location::Table | Location::Storage if !self.table.contains(c) && !self.storage.contains(c) => {
                    v.push(format!("object {} is out of bounds at ({:.3}, {:.3})", o.id, c.x, c.y))
                }
                Location::On { support, .. } if self.object(support).is_none() => {
                    v.push(format!("object {} rests on unknown support {support}", o.id))
                }
                Location::Held { robot, arm } => {
                    let holds = self
                        .robot(robot)
                        .and_then(|r| r.arm(arm))
                        .is_some_and(|a| a.holding.as_deref() == Some(o.id.as_str()));
                    if !holds {
                        v.push(format!("object {} claims to be held by {robot}/{arm}", o.id));
                    }
                }
                _ => {}
            }
        }
        for (a, b) in self.overlapping_pairs() {
            v.push(format!("objects {a} and {b} overlap"));
        }
        for r in &self.robots {
            if !(r.gripper_radius > 0.0) {
                v.push(format!("robot {} has gripper radius {}", r.id, r.gripper_radius));
            }
            if r.arms.is_empty() || r.arms.len() > 2 {
                v.push(format!("robot {} has {} arms", r.id, r.arms.len()));
            }
            for a in &r.arms {
                if let Some(h) = &a.holding {
                    if self.object(h).map(|o| &o.location) != Some(&Location::Held { robot: r.id.clone(), arm: a.id.clone() }) {
                        v.push(format!("arm {}/{} holds {h} inconsistently", r.id, a.id));
                    }
                }
            }
        }
        if let Some(g) = self.robots.iter().map(|r| r.gripper_radius).reduce(f64::min) {
            for o in &self.objects {
                let big = cfg.is_pushable_only(&o.shape, g);
                match o.category {
                    Category::PushableOnly if !big => v.push(format!("object {} is marked pushable-only but fits the gripper", o.id)),
                    Category::Graspable if big => v.push(format!("object {} is too big to grasp but not marked pushable-only", o.id)),
                    _ => {}
                }
            }
        }
        v
    }
}

/// A change to the world produced by executing one action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "kebab-case")]
pub enum ActionEffect {
    Pick { object: String, robot: String, arm: String },
    Place { object: String, robot: String, arm: String, dest: Destination },
    Push { object: String, robot: String },
    Handover { robot: String, from_arm: String, to_arm: String },
    MoveBase { robot: String, station: String },
    Cook { object: String },
    Wash { object: String },
    Wait,
    Sense,
}

impl ActionEffect {
    pub fn is_geometric(&self) -> bool {
        !matches!(self, ActionEffect::Cook { .. } | ActionEffect::Wash { .. } | ActionEffect::Wait | ActionEffect::Sense)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "to", rename_all = "kebab-case")]
pub enum Destination {
    Point { x: f64, y: f64 },
    Storage,
    /// A specific storage cell, chosen by the caller.
    StorageAt { x: f64, y: f64 },
    Support { id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WorldError {
    #[error("inconsistent effect: {0}")]
    InconsistentEffect(String),
}

fn inconsistent<T>(msg: impl Into<String>) -> Result<T, WorldError> {
    Err(WorldError::InconsistentEffect(msg.into()))
}

impl WorkspaceSnapshot {
    /// First free storage cell, row-major, on a `pitch` grid.
    pub fn storage_slot(&self, shape: &Shape, pitch: f64) -> Option<Vec2> {
        self.storage_slot_where(shape, pitch, |_| true)
    }

    /// First free storage cell accepted by `keep`, row-major.
    pub fn storage_slot_where(&self, shape: &Shape, pitch: f64, keep: impl Fn(Vec2) -> bool) -> Option<Vec2> {
        let r = shape.bounding_radius();
        let cols = (self.storage.width() / pitch).floor() as usize;
        let rows = (self.storage.height() / pitch).floor() as usize;
        let stored: Vec<Footprint> = self
            .objects
            .iter()
            .filter(|o| o.location == Location::Storage)
            .map(|o| o.footprint())
            .collect();
        for row in 0..rows {
            for col in 0..cols {
                let p = self.storage.min + Vec2::new((col as f64 + 0.5) * pitch, (row as f64 + 0.5) * pitch);
                if !self.storage.contains_disc(p, r) || !keep(p) {
                    continue;
                }
                let fp = Footprint::Disc { center: p, radius: r };
                if stored.iter().all(|s| !s.overlaps(&fp)) {
                    return Some(p);
                }
            }
        }
        None
    }

    /// Whether `object` could stand at `p` on the table without touching any
    /// other free-standing object.
    pub fn table_spot_free(&self, object: &ObjectModel, p: Vec2) -> bool {
        let mut moved = object.clone();
        moved.pose.x = p.x;
        moved.pose.y = p.y;
        if !self.table.contains_disc(p, object.shape.bounding_radius()) {
            return false;
        }
        let fp = moved.footprint();
        self.objects
            .iter()
            .filter(|o| o.id != object.id && o.is_free_standing())
            .all(|o| !o.footprint().overlaps(&fp))
    }

    /// Applies `effect` in place after checking it against the snapshot.
    /// Leaves the snapshot unchanged on error.
    pub fn apply_effect(&mut self, effect: &ActionEffect, cfg: &SimConfig) -> Result<(), WorldError> {
        match effect {
            ActionEffect::Pick { object, robot, arm } => {
                let r = self.robot(robot).ok_or_else(|| WorldError::InconsistentEffect(format!("unknown robot {robot}")))?;
                let a = r.arm(arm).ok_or_else(|| WorldError::InconsistentEffect(format!("unknown arm {robot}/{arm}")))?;
                if let Some(h) = &a.holding {
                    return inconsistent(format!("arm {robot}/{arm} already holds {h}"));
                }
                let o = self.object(object).ok_or_else(|| WorldError::InconsistentEffect(format!("unknown object {object}")))?;
                match o.category {
                    Category::Graspable | Category::Target => {}
                    Category::PushableOnly => return inconsistent(format!("object {object} is too big to grasp")),
                    Category::Fixture => return inconsistent(format!("object {object} is a fixture")),
                }
                match &o.location {
                    Location::Held { .. } => return inconsistent(format!("object {object} is already held")),
                    Location::On { support, .. } => {
                        let stack = self.stack(support);
                        if stack.last().map(|t| t.id.as_str()) != Some(object.as_str()) {
                            return inconsistent(format!("object {object} is not on top of {support}"));
                        }
                    }
                    _ => {}
                }
                self.object_mut(object).unwrap().location = Location::Held { robot: robot.clone(), arm: arm.clone() };
                self.arm_mut(robot, arm).holding = Some(object.clone());
            }
            ActionEffect::Place { object, robot, arm, dest } => {
                self.check_holding(robot, arm, object)?;
                let o = self.object(object).unwrap().clone();
                let (pose, location) = match dest {
                    Destination::Point { x, y } => {
                        let p = Vec2::new(*x, *y);
                        if !self.table_spot_free(&o, p) {
                            return inconsistent(format!("destination ({x:.3}, {y:.3}) for {object} is not free"));
                        }
                        (Pose::new(*x, *y, o.pose.yaw), Location::Table)
                    }
                    Destination::Storage => match self.storage_slot(&o.shape, cfg.storage_pitch) {
                        Some(p) => (Pose::new(p.x, p.y, o.pose.yaw), Location::Storage),
                        None => return inconsistent("storage area is full"),
                    },
                    Destination::StorageAt { x, y } => {
                        let p = Vec2::new(*x, *y);
                        let fp = Footprint::Disc { center: p, radius: o.shape.bounding_radius() };
                        let clash = self
                            .objects
                            .iter()
                            .any(|s| s.location == Location::Storage && s.footprint().overlaps(&fp));
                        if !self.storage.contains_disc(p, o.shape.bounding_radius()) || clash {
                            return inconsistent(format!("storage cell ({x:.3}, {y:.3}) for {object} is not free"));
                        }
                        (Pose::new(*x, *y, o.pose.yaw), Location::Storage)
                    }
                    Destination::Support { id } => {
                        let s = self.object(id).ok_or_else(|| WorldError::InconsistentEffect(format!("unknown support {id}")))?;
                        if s.appliance.is_none() {
                            return inconsistent(format!("{id} cannot hold objects"));
                        }
                        let level = self.stack(id).len() as u32;
                        (Pose::new(s.pose.x, s.pose.y, o.pose.yaw), Location::On { support: id.clone(), level })
                    }
                };
                let om = self.object_mut(object).unwrap();
                om.pose = pose;
                om.location = location;
                self.arm_mut(robot, arm).holding = None;
            }
            ActionEffect::Push { object, robot } => {
                let r = self.robot(robot).ok_or_else(|| WorldError::InconsistentEffect(format!("unknown robot {robot}")))?;
                let o = self.object(object).ok_or_else(|| WorldError::InconsistentEffect(format!("unknown object {object}")))?;
                if o.category != Category::PushableOnly {
                    return inconsistent(format!("object {object} is not pushable-only"));
                }
                if !o.on_table() {
                    return inconsistent(format!("object {object} is not on the table"));
                }
                let dir = (o.center() - r.base.position()).normalized();
                let p = o.center() + dir * cfg.push_distance;
                if !self.table_spot_free(o, p) {
                    return inconsistent(format!("pushing {object} would collide or leave the table"));
                }
                let om = self.object_mut(object).unwrap();
                om.pose.x = p.x;
                om.pose.y = p.y;
            }
            ActionEffect::Handover { robot, from_arm, to_arm } => {
                let r = self.robot(robot).ok_or_else(|| WorldError::InconsistentEffect(format!("unknown robot {robot}")))?;
                if from_arm == to_arm {
                    return inconsistent("handover needs two distinct arms");
                }
                let from = r.arm(from_arm).ok_or_else(|| WorldError::InconsistentEffect(format!("unknown arm {robot}/{from_arm}")))?;
                let to = r.arm(to_arm).ok_or_else(|| WorldError::InconsistentEffect(format!("unknown arm {robot}/{to_arm}")))?;
                let Some(object) = from.holding.clone() else {
                    return inconsistent(format!("arm {robot}/{from_arm} holds nothing"));
                };
                if let Some(h) = &to.holding {
                    return inconsistent(format!("arm {robot}/{to_arm} already holds {h}"));
                }
                self.arm_mut(robot, from_arm).holding = None;
                self.arm_mut(robot, to_arm).holding = Some(object.clone());
                self.object_mut(&object).unwrap().location = Location::Held { robot: robot.clone(), arm: to_arm.clone() };
            }
            ActionEffect::MoveBase { robot, station } => {
                let pose = *self
                    .stations
                    .get(station)
                    .ok_or_else(|| WorldError::InconsistentEffect(format!("unknown station {station}")))?;
                self.robot_mut(robot)
                    .ok_or_else(|| WorldError::InconsistentEffect(format!("unknown robot {robot}")))?
                    .base = pose;
            }
            ActionEffect::Cook { object } => self.process(object, Appliance::Microwave, Tag::Raw, Tag::Cooked)?,
            ActionEffect::Wash { object } => self.process(object, Appliance::Dishwasher, Tag::Dirty, Tag::Clean)?,
            ActionEffect::Wait | ActionEffect::Sense => {}
        }
        self.epoch += 1;
        Ok(())
    }

    fn check_holding(&self, robot: &str, arm: &str, object: &str) -> Result<(), WorldError> {
        let r = self.robot(robot).ok_or_else(|| WorldError::InconsistentEffect(format!("unknown robot {robot}")))?;
        let a = r.arm(arm).ok_or_else(|| WorldError::InconsistentEffect(format!("unknown arm {robot}/{arm}")))?;
        if a.holding.as_deref() != Some(object) {
            return inconsistent(format!("arm {robot}/{arm} does not hold {object}"));
        }
        Ok(())
    }

    fn arm_mut(&mut self, robot: &str, arm: &str) -> &mut ArmModel {
        self.robot_mut(robot)
            .and_then(|r| r.arms.iter_mut().find(|a| a.id == arm))
            .expect("arm checked before mutation")
    }

    fn process(&mut self, object: &str, appliance: Appliance, from: Tag, to: Tag) -> Result<(), WorldError> {
        let o = self.object(object).ok_or_else(|| WorldError::InconsistentEffect(format!("unknown object {object}")))?;
        let at = match &o.location {
            Location::On { support, .. } => self.object(support).and_then(|s| s.appliance),
            _ => None,
        };
        if at != Some(appliance) {
            return inconsistent(format!("object {object} is not at a {appliance:?}"));
        }
        let om = self.object_mut(object).unwrap();
        om.tags.remove(&from);
        om.tags.insert(to);
        Ok(())
    }
}

/// The current snapshot plus every snapshot it replaced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeBase {
    current: WorkspaceSnapshot,
    history: Vec<WorkspaceSnapshot>,
    #[serde(default)]
    config: SimConfig,
}

impl KnowledgeBase {
    pub fn new(initial: WorkspaceSnapshot, config: SimConfig) -> Self {
        KnowledgeBase {
            current: initial,
            history: Vec::new(),
            config,
        }
    }

    /// Exact observation of the current world.
    pub fn sense(&self) -> WorkspaceSnapshot {
        self.current.clone()
    }

    pub fn current(&self) -> &WorkspaceSnapshot {
        &self.current
    }

    pub fn history(&self) -> &[WorkspaceSnapshot] {
        &self.history
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }

    pub fn apply_in_place(&mut self, effect: &ActionEffect) -> Result<(), WorldError> {
        let mut next = self.current.clone();
        next.apply_effect(effect, &self.config)?;
        let prev = std::mem::replace(&mut self.current, next);
        self.history.push(prev);
        Ok(())
    }

    pub fn apply(&self, effect: &ActionEffect) -> Result<KnowledgeBase, WorldError> {
        let mut next = self.clone();
        next.apply_in_place(effect)?;
        Ok(next)
    }
}

/// Scenario document: the initial world plus the target objects and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub table: Rect,
    pub storage: Rect,
    pub objects: Vec<ObjectModel>,
    pub robots: Vec<RobotModel>,
    #[serde(default)]
    pub targets: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub stations: BTreeMap<String, Pose>,
}

impl Scenario {
    pub fn snapshot(&self) -> WorkspaceSnapshot {
        WorkspaceSnapshot {
            table: self.table,
            storage: self.storage,
            objects: self.objects.clone(),
            robots: self.robots.clone(),
            stations: self.stations.clone(),
            epoch: 0,
        }
    }

    pub fn violations(&self, cfg: &SimConfig) -> Vec<String> {
        let mut v = self.snapshot().violations(cfg);
        for t in &self.targets {
            if self.objects.iter().all(|o| &o.id != t) {
                v.push(format!("target {t} is not an object"));
            }
        }
        v
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}
