use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmpidan_core::allocation::{Assignment, ObstacleLedger};

pub struct Instance {
    pub robots: Vec<String>,
    pub tasks: Vec<String>,
    pub ledger: ObstacleLedger,
}

/// Random instance. With `disjoint`, every (robot, task) pair draws from its
/// own object pool; otherwise all pairs share eight objects. Some pairs may
/// have no raw set at all (robot cannot reach the task).
pub fn instance(seed: u64, max_robots: usize, max_tasks: usize, disjoint: bool) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = rng.gen_range(1..=max_robots);
    let t = rng.gen_range(r..=max_tasks);
    let robots: Vec<String> = (0..r).map(|i| format!("r{i}")).collect();
    let tasks: Vec<String> = (0..t).map(|j| format!("t{j}")).collect();
    let mut raw = BTreeMap::new();
    for (i, robot) in robots.iter().enumerate() {
        for (j, task) in tasks.iter().enumerate() {
            if rng.gen_bool(0.1) {
                continue;
            }
            let size = rng.gen_range(0..=4);
            let set: BTreeSet<String> = (0..size)
                .map(|_| {
                    let o = rng.gen_range(0..8);
                    if disjoint {
                        format!("o{i}_{j}_{o}")
                    } else {
                        format!("o{o}")
                    }
                })
                .collect();
            raw.insert((robot.clone(), task.clone()), set);
        }
    }
    Instance {
        robots,
        tasks,
        ledger: ObstacleLedger::new(raw),
    }
}

pub fn check_structure(a: &Assignment, inst: &Instance) {
    let bound: BTreeSet<&String> = a.binding.keys().collect();
    assert_eq!(bound, inst.tasks.iter().collect::<BTreeSet<_>>());
    for task in &inst.tasks {
        let holders = a.order.values().filter(|q| q.contains(task)).count();
        assert_eq!(holders, 1, "task {task} must have exactly one robot");
    }
    assert_eq!(a.steps.len(), inst.tasks.len());
}
