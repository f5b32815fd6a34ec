//! The planning loop.
//!
//! A [`SingleRun`] owns a network of augmented graphs for one robot and one
//! task. Each step takes the cheapest feasible arcs of the active graph,
//! grounds them into concrete motions through the domain's [`Binding`],
//! plans and executes the cheapest grounding, and fires the arc on success.
//! A graph that reaches a failure terminal, or runs out of arcs to try, is
//! followed by a fresh graph bound to the current snapshot.

use std::collections::{BTreeSet, VecDeque};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::allocation::{allocate, AllocationError, Assignment, ObstacleLedger};
use crate::geometry::Vec2;
use crate::graph::{
    ArcId, AugmentedGraph, GraphError, GraphNetwork, GraphTemplate, HyperArc, NodeId, NodeKind, TransitionReason, Verb,
    WorkCounter, DEFAULT_DEPTH_LIMIT,
};
use crate::motion::{
    grasp_angles, grasp_goal, FailureModel, GoalRegion, MotionDomain, MotionError, MotionPlanner, RrtParams,
    Trajectory, DEFAULT_STANDOFF,
};
use crate::workspace::{ActionEffect, KnowledgeBase, Location, RobotModel, SimConfig, WorkspaceSnapshot};

/// Seconds charged per unit of graph work under the logical clock.
pub const LOGICAL_SECONDS_PER_WORK_UNIT: f64 = 1e-6;
/// Seconds charged per RRT iteration or plan call under the logical clock.
pub const LOGICAL_SECONDS_PER_ITERATION: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlannerError {
    #[error("no feasible transition")]
    EmptyFeasibleSet,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Allocation(#[from] AllocationError),
    #[error(transparent)]
    Motion(#[from] MotionError),
    #[error("invalid run: {0}")]
    Invalid(String),
}

/// What a motion step has to reach.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MotionGoal {
    /// No motion; the step cannot fail in execution.
    None,
    /// Side grasp of `object` with the given arm.
    Grasp { robot: String, arm: String, object: String },
    /// Bring the arm, with whatever it holds, to `point`. Objects on
    /// `support` and the support itself are not obstacles.
    Reach {
        robot: String,
        arm: String,
        point: Vec2,
        support: Option<String>,
    },
    /// Drive the base to a named station.
    Base { robot: String, station: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub motion: MotionGoal,
    pub effect: ActionEffect,
}

impl Step {
    pub fn new(motion: MotionGoal, effect: ActionEffect) -> Self {
        Step { motion, effect }
    }

    pub fn symbolic(effect: ActionEffect) -> Self {
        Step {
            motion: MotionGoal::None,
            effect,
        }
    }
}

/// One concrete way to carry out an arc: an agent and its steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grounding {
    pub agent: String,
    pub steps: Vec<Step>,
}

impl Grounding {
    pub fn new(agent: impl Into<String>, steps: Vec<Step>) -> Self {
        Grounding {
            agent: agent.into(),
            steps,
        }
    }

    /// An arc without actions: nothing to do, only the state check.
    pub fn empty() -> Self {
        Grounding {
            agent: String::new(),
            steps: Vec::new(),
        }
    }
}

/// What a binding may look at when checking states and grounding arcs.
#[derive(Debug, Clone)]
pub struct TaskContext<'a> {
    pub robot: &'a str,
    pub target: Option<&'a str>,
    /// Snapshot bound to the active graph's root.
    pub binding: &'a WorkspaceSnapshot,
    pub achieved: BTreeSet<String>,
    /// Graphs in a row that ended without any arc reaching a terminal.
    pub exhausted_streak: u32,
    pub ideal: bool,
    pub standoff: f64,
}

impl TaskContext<'_> {
    pub fn robot_model<'s>(&self, s: &'s WorkspaceSnapshot) -> Option<&'s RobotModel> {
        s.robot(self.robot)
    }
}

/// The state map and action map tying a graph to the world.
pub trait Binding: Send + Sync {
    /// Whether the snapshot realizes the state named `label`.
    fn holds(&self, label: &str, s: &WorkspaceSnapshot, ctx: &TaskContext) -> bool;

    /// Concrete alternatives for `arc`, one per agent that could carry it
    /// out. Empty means the arc cannot be executed here.
    fn ground(&self, arc: &HyperArc, parent: &str, s: &WorkspaceSnapshot, ctx: &TaskContext) -> Vec<Grounding>;

    /// Whether reaching `label` moved an object out of the way.
    fn counts_as_rearrangement(&self, _label: &str) -> bool {
        false
    }

    fn knows_label(&self, label: &str) -> bool;

    fn knows_verb(&self, verb: Verb) -> bool;
}

/// A graph template plus the binding that executes it.
#[derive(Clone)]
pub struct DomainTemplate {
    pub name: String,
    pub template: GraphTemplate,
    pub binding: Arc<dyn Binding>,
    pub agents: Vec<String>,
}

impl std::fmt::Debug for DomainTemplate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DomainTemplate")
            .field("name", &self.name)
            .field("nodes", &self.template.node_count())
            .field("arcs", &self.template.arc_count())
            .field("agents", &self.agents)
            .finish()
    }
}

impl DomainTemplate {
    /// Labels or geometric verbs the binding does not cover.
    pub fn binding_gaps(&self) -> Vec<String> {
        let mut gaps = Vec::new();
        let labels = self
            .template
            .graph
            .nodes()
            .iter()
            .map(|n| n.label.as_str())
            .chain(std::iter::once(self.template.root_label.as_str()));
        for l in labels {
            if !self.binding.knows_label(l) {
                gaps.push(format!("label {l}"));
            }
        }
        let actions = self
            .template
            .graph
            .arcs()
            .iter()
            .flat_map(|a| a.actions.iter())
            .chain(self.template.augmented.iter().flat_map(|a| a.actions.iter()));
        for a in actions {
            if a.geometric && !self.binding.knows_verb(a.verb) {
                gaps.push(format!("verb {:?}", a.verb));
            }
        }
        gaps.sort();
        gaps.dedup();
        gaps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClockMode {
    /// Monotonic wall clock.
    #[default]
    Wall,
    /// Times derived from work counters, for reproducible output.
    Logical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    pub depth_limit: usize,
    pub motion_budget_ms: u64,
    pub fail_prob: f64,
    pub seed: u64,
    pub ideal_motion: bool,
    pub rrt: RrtParams,
    pub standoff: f64,
    pub sim: SimConfig,
    pub clock: ClockMode,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            depth_limit: DEFAULT_DEPTH_LIMIT,
            motion_budget_ms: 1000,
            fail_prob: 0.0,
            seed: 0,
            ideal_motion: false,
            rrt: RrtParams::default(),
            standoff: DEFAULT_STANDOFF,
            sim: SimConfig::default(),
            clock: ClockMode::Wall,
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<(), PlannerError> {
        if self.depth_limit == 0 {
            return Err(PlannerError::Invalid("depth limit must be at least 1".into()));
        }
        if self.motion_budget_ms == 0 {
            return Err(PlannerError::Invalid("motion budget must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.fail_prob) {
            return Err(PlannerError::Invalid(format!("failure probability {} is outside [0, 1)", self.fail_prob)));
        }
        Ok(())
    }
}

fn mix(seed: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Motion planner, failure model and counters for one robot.
#[derive(Debug, Clone)]
pub struct Executor {
    pub config: PlannerConfig,
    motion: MotionPlanner,
    failures: FailureModel,
    seed: u64,
    plans: u64,
    executions: u64,
    mp_time: Duration,
}

/// Outcome of planning one step.
#[derive(Debug, Clone, PartialEq)]
pub enum PlanOutcome {
    NoMotion,
    Planned(Trajectory),
    Failed,
}

impl Executor {
    pub fn new(config: PlannerConfig, stream: u64) -> Result<Self, PlannerError> {
        config.validate()?;
        let seed = mix(config.seed, stream);
        let mut motion = MotionPlanner::new(config.rrt);
        motion.ideal = config.ideal_motion;
        let failures = FailureModel::new(config.fail_prob, mix(seed, 0xFA11))?;
        Ok(Executor {
            config,
            motion,
            failures,
            seed,
            plans: 0,
            executions: 0,
            mp_time: Duration::ZERO,
        })
    }

    pub fn attempts(&self) -> u64 {
        self.motion.attempts()
    }

    pub fn executions(&self) -> u64 {
        self.executions
    }

    pub fn iterations(&self) -> u64 {
        self.motion.iterations()
    }

    pub fn mp_time(&self) -> Duration {
        self.mp_time
    }

    fn timed_plan(&mut self, domain: &MotionDomain, start: Vec2) -> Option<Trajectory> {
        let t = Instant::now();
        let seed = mix(self.seed, self.plans);
        self.plans += 1;
        let r = self.motion.plan(domain, start, self.config.motion_budget_ms, seed);
        self.mp_time += t.elapsed();
        r.ok().flatten()
    }

    /// Plans the motion of `goal` in snapshot `s`. Every call that reaches
    /// the motion planner counts one attempt.
    pub fn plan_motion(&mut self, goal: &MotionGoal, s: &WorkspaceSnapshot) -> PlanOutcome {
        let ideal = self.config.ideal_motion;
        match goal {
            MotionGoal::None => PlanOutcome::NoMotion,
            MotionGoal::Base { robot, station } => {
                let (Some(r), Some(to)) = (s.robot(robot), s.stations.get(station)) else {
                    return PlanOutcome::Failed;
                };
                let mut d = MotionDomain::new(
                    s,
                    r.gripper_radius,
                    GoalRegion::Point {
                        center: to.position(),
                        tolerance: 1e-9,
                    },
                );
                d = d.without_obstacles();
                // Base motion is not collision-checked: plan it as ideal.
                let was = self.motion.ideal;
                self.motion.ideal = true;
                let t = self.timed_plan(&d, r.base.position());
                self.motion.ideal = was;
                t.map_or(PlanOutcome::Failed, PlanOutcome::Planned)
            }
            MotionGoal::Grasp { robot, arm, object } => {
                let (Some(r), Some(o)) = (s.robot(robot), s.object(object)) else {
                    return PlanOutcome::Failed;
                };
                let Some(a) = r.arm(arm) else { return PlanOutcome::Failed };
                let start = r.home(a);
                let excluded = support_exclusions(s, &o.location);
                let mut angles = grasp_angles();
                angles.sort_by(|x, y| x.abs().total_cmp(&y.abs()).then(x.total_cmp(y)));
                let mut fallback = None;
                for angle in angles {
                    let Ok(goal) = grasp_goal(s, r, object, angle, self.config.standoff) else {
                        continue;
                    };
                    let GoalRegion::GraspApproach { pregrasp, contact, .. } = goal else { unreachable!() };
                    if !ideal && !(r.reaches(a, pregrasp) && r.reaches(a, contact)) {
                        continue;
                    }
                    let d = MotionDomain::new(s, r.gripper_radius, goal).excluding(&excluded);
                    if ideal || (d.collision_free(pregrasp) && d.approach_free(self.config.rrt.resolution)) {
                        return self.timed_plan(&d, start).map_or(PlanOutcome::Failed, PlanOutcome::Planned);
                    }
                    fallback.get_or_insert(d);
                }
                // Nothing looks open; one attempt confirms it.
                match fallback {
                    Some(d) => self.timed_plan(&d, start).map_or(PlanOutcome::Failed, PlanOutcome::Planned),
                    None => PlanOutcome::Failed,
                }
            }
            MotionGoal::Reach {
                robot,
                arm,
                point,
                support,
            } => {
                let Some(r) = s.robot(robot) else { return PlanOutcome::Failed };
                let Some(a) = r.arm(arm) else { return PlanOutcome::Failed };
                if !ideal && !r.reaches(a, *point) {
                    return PlanOutcome::Failed;
                }
                let held = a
                    .holding
                    .as_ref()
                    .and_then(|h| s.object(h))
                    .map_or(0.0, |o| o.shape.bounding_radius());
                let mut excluded = BTreeSet::new();
                if let Some(sup) = support {
                    excluded.insert(sup.clone());
                    excluded.extend(s.stack(sup).iter().map(|o| o.id.clone()));
                }
                if s.storage.contains(*point) {
                    excluded.extend(s.objects.iter().filter(|o| o.location == Location::Storage).map(|o| o.id.clone()));
                }
                let mut d = MotionDomain::new(
                    s,
                    r.gripper_radius + held,
                    GoalRegion::Point {
                        center: *point,
                        tolerance: 0.01,
                    },
                )
                .excluding(&excluded);
                // A held object is carried lifted, clear of the table top.
                if a.holding.is_some() {
                    d = d.without_obstacles();
                }
                self.timed_plan(&d, r.home(a)).map_or(PlanOutcome::Failed, PlanOutcome::Planned)
            }
        }
    }

    /// Simulated execution of one trajectory.
    pub fn execute(&mut self, traj: &Trajectory) -> bool {
        self.executions += 1;
        self.failures.simulate_execute(traj)
    }
}

/// A support and everything stacked on it, when `loc` is on one.
fn support_exclusions(s: &WorkspaceSnapshot, loc: &Location) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    if let Location::On { support, .. } = loc {
        out.insert(support.clone());
        out.extend(s.stack(support).iter().map(|o| o.id.clone()));
    }
    out
}

/// The cheapest feasible transitions, ordered by arc id.
pub fn find_next_optimal(fts: &[(ArcId, NodeId)], graph: &AugmentedGraph) -> Result<Vec<(ArcId, NodeId)>, PlannerError> {
    let cost = |a: ArcId| graph.graph().arc(a).cost;
    let best = fts
        .iter()
        .map(|(a, _)| cost(*a))
        .min_by(f64::total_cmp)
        .ok_or(PlannerError::EmptyFeasibleSet)?;
    let mut out: Vec<(ArcId, NodeId)> = fts.iter().copied().filter(|(a, _)| cost(*a) == best).collect();
    out.sort_by_key(|(a, _)| *a);
    Ok(out)
}

struct PlannedGrounding {
    index: usize,
    cost: f64,
    trajectories: Vec<Trajectory>,
    effects: Vec<ActionEffect>,
}

/// Grounds `arc`, plans every grounding, and executes them cheapest first
/// until one succeeds. Returns the snapshot after its effects, or `None`
/// when every plan failed.
pub fn execute_candidate(
    arc: ArcId,
    graph: &AugmentedGraph,
    binding: &dyn Binding,
    kb: &mut KnowledgeBase,
    exec: &mut Executor,
    ctx: &TaskContext,
) -> Option<WorkspaceSnapshot> {
    let a = graph.graph().arc(arc);
    let parent = graph.graph().node(a.parent).label.clone();
    let now = kb.sense();
    let groundings = binding.ground(a, &parent, &now, ctx);
    let mut planned = Vec::new();
    'grounding: for (index, g) in groundings.iter().enumerate() {
        let mut scratch = now.clone();
        let mut trajectories = Vec::new();
        for step in &g.steps {
            match exec.plan_motion(&step.motion, &scratch) {
                PlanOutcome::NoMotion => {}
                PlanOutcome::Planned(t) => trajectories.push(t),
                PlanOutcome::Failed => continue 'grounding,
            }
            if scratch.apply_effect(&step.effect, kb.config()).is_err() {
                continue 'grounding;
            }
        }
        if !binding.holds(&parent, &scratch, ctx) {
            continue;
        }
        planned.push(PlannedGrounding {
            index,
            cost: trajectories.iter().map(|t| t.cost).sum(),
            trajectories,
            effects: g.steps.iter().map(|s| s.effect.clone()).collect(),
        });
    }
    planned.sort_by(|x, y| x.cost.total_cmp(&y.cost).then(x.index.cmp(&y.index)));
    for p in planned {
        if !p.trajectories.iter().all(|t| exec.execute(t)) {
            continue;
        }
        let mut next = kb.clone();
        if p.effects.iter().all(|e| next.apply_in_place(e).is_ok()) {
            *kb = next;
            return Some(kb.sense());
        }
    }
    None
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub depth: usize,
    pub tp_seconds: f64,
    pub mp_seconds: f64,
    pub motion_attempts: u64,
    pub executions: u64,
    pub objects_rearranged: u64,
    pub solved: bool,
    pub work: WorkCounter,
    /// `(|N| + |H|) * d` for the augmented template.
    pub work_bound: u64,
}

impl RunMetrics {
    /// Sums counts and times; solved only if both are.
    pub fn merge(&mut self, other: &RunMetrics) {
        self.depth += other.depth;
        self.tp_seconds += other.tp_seconds;
        self.mp_seconds += other.mp_seconds;
        self.motion_attempts += other.motion_attempts;
        self.executions += other.executions;
        self.objects_rearranged += other.objects_rearranged;
        self.solved &= other.solved;
        self.work.node_visits += other.work.node_visits;
        self.work.arc_evaluations += other.work.arc_evaluations;
        self.work_bound += other.work_bound;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepOutcome {
    Progress,
    Solved,
    Unsolved,
}

/// One robot working on one task.
#[derive(Debug, Clone)]
pub struct SingleRun {
    robot: String,
    target: Option<String>,
    network: GraphNetwork,
    per_graph: u64,
    rearranged: u64,
    exhausted_streak: u32,
    outcome: Option<StepOutcome>,
    attempts0: u64,
    executions0: u64,
    iterations0: u64,
    mp0: Duration,
    elapsed: Duration,
}

impl SingleRun {
    pub fn new(
        domain: &DomainTemplate,
        snapshot: WorkspaceSnapshot,
        robot: &str,
        target: Option<&str>,
        exec: &Executor,
    ) -> Result<Self, PlannerError> {
        if snapshot.robot(robot).is_none() {
            return Err(PlannerError::Invalid(format!("unknown robot {robot}")));
        }
        let network = GraphNetwork::new(&domain.template, snapshot, exec.config.depth_limit)?;
        let g = network.active().graph();
        let per_graph = (g.nodes().len() + g.arcs().len()) as u64;
        Ok(SingleRun {
            robot: robot.to_string(),
            target: target.map(str::to_string),
            network,
            per_graph,
            rearranged: 0,
            exhausted_streak: 0,
            outcome: None,
            attempts0: exec.attempts(),
            executions0: exec.executions(),
            iterations0: exec.iterations(),
            mp0: exec.mp_time(),
            elapsed: Duration::ZERO,
        })
    }

    pub fn network(&self) -> &GraphNetwork {
        &self.network
    }

    pub fn outcome(&self) -> Option<StepOutcome> {
        self.outcome
    }

    pub fn robot(&self) -> &str {
        &self.robot
    }

    pub fn target(&self) -> Option<&str> {
        self.target.as_deref()
    }

    fn expand(&mut self, snapshot: WorkspaceSnapshot, domain: &DomainTemplate, reason: TransitionReason) {
        match reason {
            TransitionReason::Exhausted => self.exhausted_streak += 1,
            TransitionReason::FailureTerminal => self.exhausted_streak = 0,
        }
        if self.network.expand_in_place(snapshot, &domain.template, reason).is_err() {
            self.outcome = Some(StepOutcome::Unsolved);
        }
    }

    /// Advances by one arc firing, one round of rejections, or one
    /// expansion.
    pub fn step(&mut self, domain: &DomainTemplate, kb: &mut KnowledgeBase, exec: &mut Executor) -> StepOutcome {
        if let Some(o) = self.outcome {
            return o;
        }
        let t = Instant::now();
        self.step_inner(domain, kb, exec);
        self.elapsed += t.elapsed();
        self.outcome.unwrap_or(StepOutcome::Progress)
    }

    fn step_inner(&mut self, domain: &DomainTemplate, kb: &mut KnowledgeBase, exec: &mut Executor) {
        if self.network.active().is_solved() {
            self.outcome = Some(StepOutcome::Solved);
            return;
        }
        let fts = self.network.active().feasible_transitions();
        let Ok(cands) = find_next_optimal(&fts, self.network.active()) else {
            let reason = if self.network.active().hit_failure() {
                TransitionReason::FailureTerminal
            } else {
                TransitionReason::Exhausted
            };
            self.expand(kb.sense(), domain, reason);
            return;
        };
        for (arc, parent) in cands {
            let active = self.network.active();
            let ctx = TaskContext {
                robot: &self.robot,
                target: self.target.as_deref(),
                binding: active.binding(),
                achieved: active.achieved_labels().into_iter().map(str::to_string).collect(),
                exhausted_streak: self.exhausted_streak,
                ideal: exec.config.ideal_motion,
                standoff: exec.config.standoff,
            };
            let result = execute_candidate(arc, active, domain.binding.as_ref(), kb, exec, &ctx);
            let active = self.network.active_mut();
            if result.is_none() {
                active.reject(arc).expect("candidate arc exists");
                continue;
            }
            active.fire_in_place(arc).expect("candidate arc is enabled");
            let node = active.graph().node(parent);
            if domain.binding.counts_as_rearrangement(&node.label) {
                self.rearranged += 1;
            }
            match node.kind {
                NodeKind::SuccessTerminal => self.outcome = Some(StepOutcome::Solved),
                NodeKind::FailureTerminal => self.expand(kb.sense(), domain, TransitionReason::FailureTerminal),
                _ => {}
            }
            return;
        }
    }

    pub fn metrics(&self, exec: &Executor) -> RunMetrics {
        let work = self.network.work();
        let attempts = exec.attempts() - self.attempts0;
        let iterations = exec.iterations() - self.iterations0;
        let (tp, mp) = match exec.config.clock {
            ClockMode::Wall => {
                let mp = exec.mp_time() - self.mp0;
                (self.elapsed.saturating_sub(mp).as_secs_f64(), mp.as_secs_f64())
            }
            ClockMode::Logical => (
                work.total() as f64 * LOGICAL_SECONDS_PER_WORK_UNIT,
                (iterations + attempts) as f64 * LOGICAL_SECONDS_PER_ITERATION,
            ),
        };
        let depth = self.network.depth();
        RunMetrics {
            depth,
            tp_seconds: tp,
            mp_seconds: mp,
            motion_attempts: attempts,
            executions: exec.executions() - self.executions0,
            objects_rearranged: self.rearranged,
            solved: self.network.solved_at_depth().is_some(),
            work,
            work_bound: self.per_graph * depth as u64,
        }
    }
}

/// Runs one robot on one task to completion.
pub fn run_single(
    domain: &DomainTemplate,
    snapshot: &WorkspaceSnapshot,
    robot: &str,
    target: Option<&str>,
    config: &PlannerConfig,
) -> Result<RunMetrics, PlannerError> {
    let mut exec = Executor::new(config.clone(), 0)?;
    let mut kb = KnowledgeBase::new(snapshot.clone(), config.sim);
    let mut run = SingleRun::new(domain, kb.sense(), robot, target, &exec)?;
    while run.step(domain, &mut kb, &mut exec) == StepOutcome::Progress {}
    Ok(run.metrics(&exec))
}

/// Like [`run_single`], also returning the final knowledge base and network.
pub fn run_single_traced(
    domain: &DomainTemplate,
    snapshot: &WorkspaceSnapshot,
    robot: &str,
    target: Option<&str>,
    config: &PlannerConfig,
) -> Result<(RunMetrics, KnowledgeBase, GraphNetwork), PlannerError> {
    let mut exec = Executor::new(config.clone(), 0)?;
    let mut kb = KnowledgeBase::new(snapshot.clone(), config.sim);
    let mut run = SingleRun::new(domain, kb.sense(), robot, target, &exec)?;
    while run.step(domain, &mut kb, &mut exec) == StepOutcome::Progress {}
    Ok((run.metrics(&exec), kb, run.network.clone()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskReport {
    pub task: String,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotReport {
    pub robot: String,
    /// Sum over the robot's tasks.
    pub metrics: RunMetrics,
    pub tasks: Vec<TaskReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiRunMetrics {
    pub per_robot: Vec<RobotReport>,
    pub assignment: Assignment,
    pub combined_utility: f64,
}

impl MultiRunMetrics {
    pub fn all_solved(&self) -> bool {
        self.per_robot.iter().all(|r| r.metrics.solved)
    }
}

struct RobotLane {
    exec: Executor,
    queue: VecDeque<String>,
    current: Option<SingleRun>,
    report: RobotReport,
}

/// Allocates `targets` over every robot of the snapshot, then runs the
/// robots round-robin, one step each, against a shared knowledge base.
pub fn run_multi(
    domain: &DomainTemplate,
    snapshot: &WorkspaceSnapshot,
    targets: &[String],
    config: &PlannerConfig,
) -> Result<MultiRunMetrics, PlannerError> {
    config.validate()?;
    let robots: Vec<String> = snapshot.robots.iter().map(|r| r.id.clone()).collect();
    let ledger = ObstacleLedger::from_snapshot(snapshot, targets, config.standoff);
    let assignment = allocate(&robots, targets, &ledger, config.seed)?;
    let mut kb = KnowledgeBase::new(snapshot.clone(), config.sim);
    let mut lanes = Vec::with_capacity(robots.len());
    for (i, r) in robots.iter().enumerate() {
        lanes.push(RobotLane {
            exec: Executor::new(config.clone(), i as u64 + 1)?,
            queue: assignment.order[r].iter().cloned().collect(),
            current: None,
            report: RobotReport {
                robot: r.clone(),
                metrics: RunMetrics {
                    solved: true,
                    ..Default::default()
                },
                tasks: Vec::new(),
            },
        });
    }
    loop {
        let mut busy = false;
        for lane in lanes.iter_mut() {
            if lane.current.is_none() {
                if let Some(task) = lane.queue.pop_front() {
                    lane.current = Some(SingleRun::new(domain, kb.sense(), &lane.report.robot, Some(&task), &lane.exec)?);
                }
            }
            let Some(run) = lane.current.as_mut() else { continue };
            busy = true;
            if run.step(domain, &mut kb, &mut lane.exec) != StepOutcome::Progress {
                let m = run.metrics(&lane.exec);
                lane.report.metrics.merge(&m);
                lane.report.tasks.push(TaskReport {
                    task: run.target().unwrap_or_default().to_string(),
                    metrics: m,
                });
                lane.current = None;
            }
        }
        if !busy {
            break;
        }
    }
    let combined_utility = assignment.combined_utility;
    Ok(MultiRunMetrics {
        per_robot: lanes.into_iter().map(|l| l.report).collect(),
        assignment,
        combined_utility,
    })
}
