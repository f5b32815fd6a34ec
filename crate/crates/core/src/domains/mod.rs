//! Graph templates, bindings and scenario builders for the three benchmark
//! domains: table-top clutter, Tower of Hanoi with two arms, and a kitchen
//! with a mobile base.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use thiserror::Error;

use crate::geometry::Vec2;
use crate::graph::{ActionSpec, AndOrGraph, HyperArc, Node, NodeKind};
use crate::planner::DomainTemplate;
use crate::workspace::{ArmModel, Pose, RobotModel};

pub mod clutter;
pub mod hanoi;
pub mod kitchen;

pub use clutter::{
    blocked_clutter, clutter_template, generate_clutter, generate_clutter_with, two_blocker_instance, ClutterParams,
};
pub use hanoi::{hanoi_scenario, hanoi_template, optimal_move, HanoiMonitor};
pub use kitchen::{kitchen_scenario, kitchen_template};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DomainError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("could not place object {placed} of {requested} without overlap")]
    PackingFailure { placed: usize, requested: usize },
    #[error("no graspable object is reachable by any robot")]
    NoReachableTarget,
}

/// Gripper disc radius shared by every robot model here.
pub const GRIPPER_RADIUS: f64 = 0.05;

/// Looks a template up by its CLI name.
pub fn domain_by_name(name: &str) -> Option<DomainTemplate> {
    match name {
        "clutter" => Some(clutter_template()),
        "hanoi" => Some(hanoi_template()),
        "kitchen" => Some(kitchen_template()),
        _ => None,
    }
}

pub const DOMAIN_NAMES: [&str; 3] = ["clutter", "hanoi", "kitchen"];

/// Two-armed robot with shoulders `shoulder` metres either side of the base
/// and end-effectors resting in front of it.
pub(crate) fn two_arm_robot(id: &str, base: Pose, shoulder: f64, reach: f64) -> RobotModel {
    let arm = |name: &str, side: f64| ArmModel {
        id: name.to_string(),
        reach_center: Vec2::new(side * shoulder, 0.0),
        reach_radius: reach,
        home: Vec2::new(side * 0.2, 0.35),
        holding: None,
    };
    RobotModel {
        id: id.to_string(),
        base,
        arms: vec![arm("left", -1.0), arm("right", 1.0)],
        gripper_radius: GRIPPER_RADIUS,
    }
}

/// Robot `i` (0..4) around the 1 m x 0.8 m clutter table: front, back,
/// left, right. Each faces the table center.
pub fn standard_robot(i: usize) -> RobotModel {
    let (x, y, yaw) = match i {
        0 => (0.5, -0.3, 0.0),
        1 => (0.5, 1.1, PI),
        2 => (-0.3, 0.4, -FRAC_PI_2),
        _ => (1.7, 0.4, FRAC_PI_2),
    };
    two_arm_robot(&format!("r{i}"), Pose::new(x, y, yaw), 0.2, 1.0)
}

/// Collects nodes and arcs with dense ids.
#[derive(Debug, Default)]
pub(crate) struct GraphBuilder {
    nodes: Vec<Node>,
    arcs: Vec<HyperArc>,
    ids: BTreeMap<String, u32>,
}

impl GraphBuilder {
    pub fn node(&mut self, label: &str, kind: NodeKind) -> u32 {
        let id = self.nodes.len() as u32;
        self.nodes.push(Node::new(id, label, kind));
        self.ids.insert(label.to_string(), id);
        id
    }

    pub fn id(&self, label: &str) -> u32 {
        self.ids[label]
    }

    pub fn arc(&mut self, children: &[u32], parent: u32, actions: Vec<ActionSpec>, cost: f64) {
        let id = self.arcs.len() as u32;
        self.arcs.push(HyperArc::new(id, children, parent).with_actions(actions).with_cost(cost));
    }

    pub fn build(self) -> AndOrGraph {
        AndOrGraph::build(self.nodes, self.arcs).expect("built-in template is well formed")
    }
}
