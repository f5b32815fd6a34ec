//! Offline task allocation for several robots sharing one table.
//!
//! Each (robot, task) pair has a raw set of objects that robot would have to
//! move. Objects already credited to an earlier assignment, of any robot, are
//! not counted again, and utility falls as `1 / (1 + count)`. Tasks are
//! handed out greedily in a seeded random order.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heuristic::objects_to_rearrange;
use crate::workspace::WorkspaceSnapshot;

pub type RobotId = String;
pub type TaskId = String;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AllocationError {
    #[error("no raw set for robot {0} and task {1}")]
    MissingRawSet(RobotId, TaskId),
    #[error("{tasks} tasks for {robots} robots; need at least one task per robot")]
    FewerTasksThanRobots { robots: usize, tasks: usize },
    #[error("{robots} robots and {tasks} tasks is too large to enumerate (max 3 and 6)")]
    TooLarge { robots: usize, tasks: usize },
    #[error("no robots")]
    NoRobots,
}

/// Raw rearrangement sets plus the assignments made so far.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ObstacleLedger {
    pub raw: BTreeMap<(RobotId, TaskId), BTreeSet<String>>,
    pub history: Vec<(RobotId, TaskId)>,
}

impl ObstacleLedger {
    pub fn new(raw: BTreeMap<(RobotId, TaskId), BTreeSet<String>>) -> Self {
        ObstacleLedger { raw, history: Vec::new() }
    }

    /// Raw sets for every robot and task, from one snapshot. Pairs where the
    /// robot cannot grasp the target at all get no entry.
    pub fn from_snapshot(snapshot: &WorkspaceSnapshot, tasks: &[TaskId], standoff: f64) -> Self {
        let mut raw = BTreeMap::new();
        for r in &snapshot.robots {
            for t in tasks {
                if let Ok(set) = objects_to_rearrange(snapshot, r, t, standoff) {
                    raw.insert((r.id.clone(), t.clone()), set);
                }
            }
        }
        ObstacleLedger::new(raw)
    }

    pub fn raw_set(&self, robot: &str, task: &str) -> Option<&BTreeSet<String>> {
        self.raw.get(&(robot.to_string(), task.to_string()))
    }

    /// Whether any robot has a raw set for `task`.
    pub fn reachable(&self, task: &str) -> bool {
        self.raw.keys().any(|(_, t)| t == task)
    }

    fn credited(&self) -> BTreeSet<&String> {
        self.history
            .iter()
            .filter_map(|(r, t)| self.raw.get(&(r.clone(), t.clone())))
            .flatten()
            .collect()
    }

    pub fn record(&mut self, robot: &str, task: &str) {
        self.history.push((robot.to_string(), task.to_string()));
    }
}

/// Objects in the raw set not already credited to an earlier assignment,
/// this robot's or another's.
pub fn corrected_count(ledger: &ObstacleLedger, robot: &str, task: &str) -> Result<usize, AllocationError> {
    let raw = ledger
        .raw_set(robot, task)
        .ok_or_else(|| AllocationError::MissingRawSet(robot.to_string(), task.to_string()))?;
    let credited = ledger.credited();
    Ok(raw.iter().filter(|o| !credited.contains(o)).count())
}

pub fn utility(count: usize) -> f64 {
    1.0 / (1.0 + count as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationStep {
    pub task: TaskId,
    pub robot: RobotId,
    pub corrected_count: usize,
    /// Zero when no robot can reach the task.
    pub utility: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub binding: BTreeMap<TaskId, RobotId>,
    /// Per-robot task queue in execution order.
    pub order: BTreeMap<RobotId, Vec<TaskId>>,
    pub steps: Vec<AllocationStep>,
    pub combined_utility: f64,
}

impl Assignment {
    fn from_steps(robots: &[RobotId], steps: Vec<AllocationStep>) -> Self {
        let mut order: BTreeMap<RobotId, Vec<TaskId>> = robots.iter().map(|r| (r.clone(), Vec::new())).collect();
        let mut binding = BTreeMap::new();
        for s in &steps {
            order.get_mut(&s.robot).expect("known robot").push(s.task.clone());
            binding.insert(s.task.clone(), s.robot.clone());
        }
        let combined_utility = steps.iter().map(|s| s.utility).sum();
        Assignment {
            binding,
            order,
            steps,
            combined_utility,
        }
    }
}

/// Robots that may take `task`: those with a raw set, or everyone when no
/// robot has one.
fn eligible<'a>(ledger: &ObstacleLedger, robots: &'a [RobotId], task: &str) -> Vec<&'a RobotId> {
    if ledger.reachable(task) {
        robots.iter().filter(|r| ledger.raw_set(r, task).is_some()).collect()
    } else {
        robots.iter().collect()
    }
}

fn score(ledger: &ObstacleLedger, robot: &str, task: &str) -> (usize, f64) {
    match corrected_count(ledger, robot, task) {
        Ok(k) => (k, utility(k)),
        Err(_) => (0, 0.0),
    }
}

fn check_sizes(robots: &[RobotId], tasks: &[TaskId]) -> Result<(), AllocationError> {
    if robots.is_empty() {
        return Err(AllocationError::NoRobots);
    }
    if tasks.len() < robots.len() {
        return Err(AllocationError::FewerTasksThanRobots {
            robots: robots.len(),
            tasks: tasks.len(),
        });
    }
    Ok(())
}

/// Greedy allocation. Tasks are visited in a seeded random order and each
/// goes to the robot with the highest utility at that moment. Ties go to a
/// robot with no task yet, otherwise to a seeded random pick.
pub fn allocate(
    robots: &[RobotId],
    tasks: &[TaskId],
    raw: &ObstacleLedger,
    seed: u64,
) -> Result<Assignment, AllocationError> {
    check_sizes(robots, tasks)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut queue = tasks.to_vec();
    queue.shuffle(&mut rng);
    let mut ledger = ObstacleLedger::new(raw.raw.clone());
    let mut busy: BTreeSet<&RobotId> = BTreeSet::new();
    let mut steps = Vec::with_capacity(tasks.len());
    for task in queue {
        let scored: Vec<(&RobotId, usize, f64)> = eligible(&ledger, robots, &task)
            .into_iter()
            .map(|r| {
                let (k, u) = score(&ledger, r, &task);
                (r, k, u)
            })
            .collect();
        let best = scored.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
        let tied: Vec<&(&RobotId, usize, f64)> = scored.iter().filter(|s| s.2 == best).collect();
        let idle: Vec<&&(&RobotId, usize, f64)> = tied.iter().filter(|s| !busy.contains(s.0)).collect();
        let pick = match (idle.len(), tied.len()) {
            (1, _) => **idle[0],
            (n, _) if n > 1 => **idle[rng.gen_range(0..n)],
            (_, 1) => *tied[0],
            (_, n) => *tied[rng.gen_range(0..n)],
        };
        let (robot, k, u) = pick;
        busy.insert(robot);
        if ledger.raw_set(robot, &task).is_some() {
            ledger.record(robot, &task);
        }
        steps.push(AllocationStep {
            task: task.clone(),
            robot: robot.clone(),
            corrected_count: k,
            utility: u,
        });
    }
    Ok(Assignment::from_steps(robots, steps))
}

struct Search<'a> {
    robots: &'a [RobotId],
    tasks: &'a [TaskId],
    ledger: ObstacleLedger,
    used: Vec<bool>,
    steps: Vec<AllocationStep>,
    total: f64,
    best: Option<(f64, Vec<AllocationStep>)>,
}

impl Search<'_> {
    fn run(&mut self) {
        if self.steps.len() == self.tasks.len() {
            if self.best.as_ref().map_or(true, |(b, _)| self.total > *b) {
                self.best = Some((self.total, self.steps.clone()));
            }
            return;
        }
        for ti in 0..self.tasks.len() {
            if self.used[ti] {
                continue;
            }
            let task = &self.tasks[ti];
            for robot in eligible(&self.ledger, self.robots, task) {
                let (k, u) = score(&self.ledger, robot, task);
                let recorded = self.ledger.raw_set(robot, task).is_some();
                if recorded {
                    self.ledger.record(robot, task);
                }
                self.used[ti] = true;
                self.total += u;
                self.steps.push(AllocationStep {
                    task: task.clone(),
                    robot: robot.clone(),
                    corrected_count: k,
                    utility: u,
                });
                self.run();
                self.steps.pop();
                self.total -= u;
                self.used[ti] = false;
                if recorded {
                    self.ledger.history.pop();
                }
            }
        }
    }
}

/// Best combined utility over every task order and every robot choice,
/// scored with the same crediting rules as [`allocate`]. The first maximum
/// found wins.
pub fn exhaustive_allocate(robots: &[RobotId], tasks: &[TaskId], raw: &ObstacleLedger) -> Result<Assignment, AllocationError> {
    check_sizes(robots, tasks)?;
    if robots.len() > 3 || tasks.len() > 6 {
        return Err(AllocationError::TooLarge {
            robots: robots.len(),
            tasks: tasks.len(),
        });
    }
    let mut search = Search {
        robots,
        tasks,
        ledger: ObstacleLedger::new(raw.raw.clone()),
        used: vec![false; tasks.len()],
        steps: Vec::with_capacity(tasks.len()),
        total: 0.0,
        best: None,
    };
    search.run();
    let (_, steps) = search.best.expect("at least one admissible allocation");
    Ok(Assignment::from_steps(robots, steps))
}
