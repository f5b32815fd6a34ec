//! Task and motion planning over networks of augmented AND/OR graphs.
//!
//! The crate is organised bottom-up: [`geometry`] and [`workspace`] model a
//! planar table-top world, [`graph`] holds the AND/OR graph machinery,
//! [`motion`] and [`heuristic`] answer geometric questions, [`allocation`]
//! assigns tasks to robots and [`planner`] ties everything together. Ready
//! made problems live in [`domains`].

pub mod allocation;
pub mod domains;
pub mod experiment;
pub mod geometry;
pub mod graph;
pub mod heuristic;
pub mod motion;
pub mod planner;
pub mod report;
pub mod workspace;

pub use geometry::{Rect, Vec2};
pub use graph::{
    ActionSpec, AndOrGraph, ArcId, AugmentedArcSpec, AugmentedGraph, GraphError, GraphNetwork, GraphTemplate,
    HyperArc, Node, NodeId, NodeKind, Verb, WorkCounter, DEFAULT_DEPTH_LIMIT,
};
pub use domains::{DomainError, DOMAIN_NAMES};
pub use experiment::{run_sweep, ExperimentError, SweepSpec};
pub use heuristic::{objects_to_rearrange, HeuristicError};
pub use motion::{FailureModel, GoalRegion, MotionDomain, MotionError, MotionPlanner, RrtParams, Trajectory};
pub use planner::{
    run_multi, run_single, Binding, ClockMode, DomainTemplate, MultiRunMetrics, PlannerConfig, PlannerError, RunMetrics,
};
pub use report::{AggregateRow, RawRow, RobotBlock, SweepReport};
pub use workspace::{
    ActionEffect, Category, Destination, KnowledgeBase, Location, ObjectModel, Pose, RobotModel, Scenario, Shape,
    SimConfig, Tag, WorkspaceSnapshot, WorldError,
};
