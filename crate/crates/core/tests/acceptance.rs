//! End-to-end acceptance run. Every check prints one PASS or FAIL line with
//! the numbers behind it; the test fails if any check fails.
//!
//! Golden files live in `tests/golden`; set `TMPIDAN_BLESS=1` to rewrite
//! them after an intended change of output.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use tmpidan_core::allocation::{allocate, exhaustive_allocate, utility, Assignment};
use tmpidan_core::domains::{
    blocked_clutter, domain_by_name, generate_clutter, hanoi_scenario, hanoi_template,
    kitchen_scenario, kitchen_template, two_blocker_instance, GRIPPER_RADIUS,
};
use tmpidan_core::heuristic::objects_to_rearrange;
use tmpidan_core::motion::{motion_bounds, GoalRegion, MotionDomain, MotionPlanner, DEFAULT_STANDOFF};
use tmpidan_core::planner::{run_single, run_single_traced, ClockMode, PlannerConfig, RunMetrics};
use tmpidan_core::report::{aggregate, aggregate_csv, linear_fit, raw_csv, AGGREGATE_HEADER};
use tmpidan_core::{Location, Scenario, SweepSpec, Tag, WorkspaceSnapshot};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn logical(seed: u64) -> PlannerConfig {
    PlannerConfig {
        seed,
        clock: ClockMode::Logical,
        ..Default::default()
    }
}

fn solve(sc: &Scenario, domain: &str, config: &PlannerConfig) -> RunMetrics {
    let d = domain_by_name(domain).unwrap();
    let robot = sc.robots[0].id.clone();
    run_single(&d, &sc.snapshot(), &robot, sc.targets.first().map(String::as_str), config).unwrap()
}

fn hanoi_optimal_depth() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for n in 3..=6 {
        let cfg = PlannerConfig {
            ideal_motion: true,
            ..logical(0)
        };
        let t = Instant::now();
        let m = solve(&hanoi_scenario(n), "hanoi", &cfg);
        let secs = t.elapsed().as_secs_f64();
        ok &= m.solved && m.depth == (1 << n) - 1 && secs < 5.0;
        parts.push(format!("n={n}: d={} in {secs:.2}s", m.depth));
    }
    check(ok, parts.join(", "))
}

fn hanoi_template_shape() -> Outcome {
    let t = hanoi_template().template;
    let (n, h) = (t.node_count(), t.arc_count());
    check(n == 21 && h == 33, format!("{n} nodes, {h} hyper-arcs"))
}

/// A mixed suite over every domain, with and without execution failures.
fn work_suite_run(i: u64) -> RunMetrics {
    let fail_prob = [0.0, 0.1, 0.3][(i % 3) as usize];
    let cfg = PlannerConfig {
        fail_prob,
        motion_budget_ms: 500,
        ..logical(i)
    };
    match i % 10 {
        0..=5 => {
            let sc = generate_clutter(4 + (i as usize * 13) % 61, 1, i).unwrap();
            solve(&sc, "clutter", &cfg)
        }
        6 | 7 => solve(&blocked_clutter(8, (i % 4) as usize, i).unwrap(), "clutter", &cfg),
        8 => solve(&hanoi_scenario(3 + (i % 2) as usize), "hanoi", &cfg),
        _ => solve(&kitchen_scenario(), "kitchen", &cfg),
    }
}

fn work_bound_and_linearity() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut violations = 0;
    for i in 0..200 {
        let m = work_suite_run(i);
        worst = worst.max(m.work.total() as f64 / m.work_bound as f64);
        violations += usize::from(m.work.total() > m.work_bound);
    }
    let spec = SweepSpec::new("clutter", vec![4, 8, 15, 20, 30, 42, 49, 64], 3, 0, logical(0));
    let rows = tmpidan_core::run_sweep(&spec).unwrap();
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r.d as f64, r.tp_s)).collect();
    let r2 = linear_fit(&points).map_or(0.0, |f| f.2);
    let spread = rows.iter().map(|r| r.d).collect::<BTreeSet<_>>().len();
    let mut wall = spec.clone();
    wall.config.clock = ClockMode::Wall;
    let wall_points: Vec<(f64, f64)> = tmpidan_core::run_sweep(&wall).unwrap().iter().map(|r| (r.d as f64, r.tp_s)).collect();
    let wall_r2 = linear_fit(&wall_points).map_or(0.0, |f| f.2);
    let secs = t.elapsed().as_secs_f64();
    check(
        violations == 0 && r2 >= 0.8 && spread > 1 && secs < 120.0,
        format!(
            "200 runs, {violations} over bound, max work/bound {worst:.3}; TP vs d R^2 = {r2:.3} logical, {wall_r2:.3} wall, over {} runs ({spread} distinct d); {secs:.1}s",
            rows.len()
        ),
    )
}

/// Head-on grasp point pair for `id`, as seen from the robot base.
fn approach(s: &WorkspaceSnapshot, id: &str) -> (tmpidan_core::Vec2, tmpidan_core::Vec2) {
    let o = s.object(id).unwrap();
    let c = o.center();
    let u = (s.robots[0].base.position() - c).normalized();
    let contact = c + u * (o.shape.bounding_radius() + GRIPPER_RADIUS);
    (contact + u * DEFAULT_STANDOFF, contact)
}

/// Solvable by construction: removing the blockers from the mouth inward,
/// then the target, each has a grid path from an arm's rest position with
/// 0.02 m to spare around the gripper, and a clear straight approach.
fn grid_certified(sc: &Scenario) -> bool {
    let mut s = sc.snapshot();
    let mut order: Vec<String> = s.objects.iter().filter(|o| o.id.starts_with('b')).map(|o| o.id.clone()).collect();
    order.sort();
    order.reverse();
    order.push("target".into());
    for id in order {
        let (pregrasp, contact) = approach(&s, &id);
        let robot = s.robots[0].clone();
        let mut d = MotionDomain::new(
            &s,
            GRIPPER_RADIUS + 0.02,
            GoalRegion::Point {
                center: pregrasp,
                tolerance: 0.01,
            },
        );
        d.obstacles.retain(|(o, _)| o != &id);
        d.bounds = motion_bounds(&s);
        let reachable = robot.arms.iter().any(|a| {
            let home = robot.home(a);
            robot.reaches(a, pregrasp)
                && robot.reaches(a, contact)
                && d.collision_free(home)
                && common::motion::grid_path_exists(&d, home)
        });
        if !reachable || !d.segment_free(pregrasp, contact, 0.005) {
            return false;
        }
        s.objects.retain(|o| o.id != id);
    }
    true
}

fn completeness() -> Outcome {
    let t = Instant::now();
    let mut instances = Vec::new();
    let mut rejected = 0;
    let mut seed = 0;
    while instances.len() < 50 {
        let sc = blocked_clutter(8, (seed % 4) as usize, seed).unwrap();
        if grid_certified(&sc) {
            instances.push((seed, sc));
        } else {
            rejected += 1;
        }
        seed += 1;
    }
    let deep = PlannerConfig {
        depth_limit: 64,
        motion_budget_ms: 2000,
        ..logical(0)
    };
    let solved = instances
        .iter()
        .filter(|(s, sc)| solve(sc, "clutter", &PlannerConfig { seed: *s, ..deep.clone() }).solved)
        .count();
    let shallow: Vec<&(u64, Scenario)> = instances.iter().filter(|(s, _)| s % 4 == 2).collect();
    let shallow_solved = shallow
        .iter()
        .filter(|(s, sc)| {
            let cfg = PlannerConfig {
                depth_limit: 1,
                ..deep.clone()
            };
            solve(sc, "clutter", &PlannerConfig { seed: *s, ..cfg }).solved
        })
        .count();
    let secs = t.elapsed().as_secs_f64();
    check(
        solved == 50 && shallow_solved == 0 && !shallow.is_empty() && secs < 300.0,
        format!(
            "depth 64: {solved}/50 solved ({rejected} generated instances not grid-certified); depth 1 with 2 blockers: {shallow_solved}/{} solved; {secs:.1}s",
            shallow.len()
        ),
    )
}

fn utility_law() -> Outcome {
    let exact = (0..=100usize).all(|k| utility(k) == 1.0 / (1.0 + k as f64) && (utility(k) == 1.0) == (k == 0));
    let mut bad = 0;
    for seed in 0..500 {
        let inst = common::alloc::instance(seed, 4, 8, false);
        let a = allocate(&inst.robots, &inst.tasks, &inst.ledger, seed).unwrap();
        let once = inst.tasks.iter().all(|t| a.order.values().filter(|q| q.contains(t)).count() == 1);
        let law = a
            .steps
            .iter()
            .all(|s| !inst.ledger.reachable(&s.task) || (s.utility == 1.0) == (s.corrected_count == 0));
        bad += usize::from(!(once && law && a.binding.len() == inst.tasks.len()));
    }
    check(
        exact && bad == 0,
        format!("U(k) exact for k in 0..=100: {exact}; {bad}/500 assignments break one-robot-per-task"),
    )
}

fn allocation_oracle() -> Outcome {
    let t = Instant::now();
    let mut above = 0;
    let mut gaps = 0;
    let mut disjoint_mismatch = 0;
    let per_task = |a: &Assignment| -> Vec<(String, f64)> { a.steps.iter().map(|s| (s.task.clone(), s.utility)).collect::<std::collections::BTreeMap<_, _>>().into_iter().collect() };
    for seed in 0..100 {
        let inst = common::alloc::instance(10_000 + seed, 3, 6, false);
        let g = allocate(&inst.robots, &inst.tasks, &inst.ledger, seed).unwrap();
        let o = exhaustive_allocate(&inst.robots, &inst.tasks, &inst.ledger).unwrap();
        above += usize::from(g.combined_utility > o.combined_utility + 1e-12);
        gaps += usize::from(g.combined_utility < o.combined_utility - 1e-12);
        let inst = common::alloc::instance(20_000 + seed, 3, 6, true);
        let g = allocate(&inst.robots, &inst.tasks, &inst.ledger, seed).unwrap();
        let o = exhaustive_allocate(&inst.robots, &inst.tasks, &inst.ledger).unwrap();
        disjoint_mismatch += usize::from(per_task(&g) != per_task(&o));
    }
    let secs = t.elapsed().as_secs_f64();
    check(
        above == 0 && disjoint_mismatch == 0 && secs < 60.0,
        format!(
            "greedy above oracle on {above}/100 (strictly below on {gaps}); disjoint sets differ on {disjoint_mismatch}/100; {secs:.1}s"
        ),
    )
}

fn heuristic_equivalence() -> Outcome {
    let mut mismatches = 0;
    let mut pairs = 0;
    for i in 0..200 {
        let sc = common::heuristic::scene(i);
        let s = sc.snapshot();
        let target = &sc.targets[0];
        for robot in &sc.robots {
            pairs += 1;
            let got = objects_to_rearrange(&s, robot, target, DEFAULT_STANDOFF).ok();
            mismatches += usize::from(got != common::heuristic::oracle(&s, robot, target));
        }
    }
    check(mismatches == 0, format!("{mismatches} mismatches over 200 scenes ({pairs} robot-target pairs)"))
}

fn motion_validity() -> Outcome {
    use common::motion::{corridor, domain, grid_path_exists, query, revalidate, R, START};
    let mut invalid = 0;
    let mut planned = 0;
    let (mut queries, mut seed) = (0, 0);
    while queries < 1000 {
        seed += 1;
        let Some(q) = query(seed) else { continue };
        queries += 1;
        if let Some(t) = MotionPlanner::default().plan(&domain(&q), q.start, 300, seed).unwrap() {
            planned += 1;
            invalid += usize::from(revalidate(&q, &t).is_err());
        }
    }
    let runs = |gap: f64| {
        let d = corridor(gap);
        let exists = grid_path_exists(&d, START);
        let ok = (0..100)
            .filter(|&s| MotionPlanner::default().plan(&d, START, 1000, s).unwrap().is_some())
            .count();
        (exists, ok)
    };
    let (wide_exists, wide) = runs(2.0 * R + 0.02);
    let (narrow_exists, narrow) = runs(2.0 * R - 0.02);
    check(
        invalid == 0 && wide_exists && !narrow_exists && wide >= 99 && narrow == 0,
        format!(
            "{invalid} invalid of {planned} plans over 1000 queries; corridor +0.02: {wide}/100 solved, -0.02: {}/100 failed",
            100 - narrow
        ),
    )
}

fn failure_inflation() -> Outcome {
    let sc = two_blocker_instance();
    let base = solve(&sc, "clutter", &logical(0));
    let runs: Vec<RunMetrics> = (0..50)
        .map(|s| {
            solve(
                &sc,
                "clutter",
                &PlannerConfig {
                    fail_prob: 0.3,
                    ..logical(s)
                },
            )
        })
        .collect();
    let mean_d = runs.iter().map(|m| m.depth as f64).sum::<f64>() / 50.0;
    let attempts: u64 = runs.iter().map(|m| m.motion_attempts).sum();
    let executions: u64 = runs.iter().map(|m| m.executions).sum();
    let solved = runs.iter().filter(|m| m.solved).count();
    check(
        base.depth == 3 && mean_d > 3.0 && attempts > executions,
        format!(
            "p=0: d={}; p=0.3: mean d={mean_d:.2} over 50 seeds ({solved} solved), attempts {attempts} > executions {executions}",
            base.depth
        ),
    )
}

fn golden(name: &str, actual: &str) -> Result<(), String> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let path = dir.join(name);
    if std::env::var_os("TMPIDAN_BLESS").is_some() {
        fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        fs::write(&path, actual).map_err(|e| e.to_string())?;
        return Ok(());
    }
    let expected = fs::read_to_string(&path).map_err(|e| format!("{name}: {e}"))?;
    if expected == actual {
        Ok(())
    } else {
        Err(format!("{name} differs from golden file"))
    }
}

fn metrics_schema() -> Outcome {
    let single = SweepSpec::new("clutter", vec![4, 8, 49], 3, 0, logical(0));
    let rows = tmpidan_core::run_sweep(&single).unwrap();
    let agg = aggregate_csv(&aggregate(&rows)).unwrap();
    let header: Vec<&str> = agg.lines().next().unwrap_or("").split(',').collect();
    let header_ok = header.len() >= 6 && header[..6] == AGGREGATE_HEADER;
    let mut multi = SweepSpec::new("clutter", vec![6, 12], 2, 1, logical(0));
    multi.robots = 2;
    let multi_rows = tmpidan_core::run_sweep(&multi).unwrap();
    let multi_agg = aggregate_csv(&aggregate(&multi_rows)).unwrap();
    let blocks = multi_agg.matches("# robot=").count();
    let block_headers = multi_agg.lines().filter(|l| l.starts_with("objects,avg_d,TP_s,MP_s,MP_attempts,objects_rearranged")).count();
    let goldens = [
        golden("sweep.csv", &agg),
        golden("sweep.raw.csv", &raw_csv(&rows).unwrap()),
        golden("two_robots.csv", &multi_agg),
    ];
    let errors: Vec<String> = goldens.into_iter().filter_map(Result::err).collect();
    let again = aggregate_csv(&aggregate(&tmpidan_core::run_sweep(&single).unwrap())).unwrap();
    check(
        header_ok && blocks == 2 && block_headers == 2 && errors.is_empty() && again == agg,
        format!(
            "header {:?}; {blocks} robot blocks; golden: {}; rerun identical: {}",
            &header[..header.len().min(6)],
            if errors.is_empty() { "3/3 match".to_string() } else { errors.join(", ") },
            again == agg
        ),
    )
}

fn kitchen_invariant() -> Outcome {
    let sc = kitchen_scenario();
    let (m, kb, _) = run_single_traced(&kitchen_template(), &sc.snapshot(), "pr2", None, &logical(5)).unwrap();
    let mut states: Vec<&WorkspaceSnapshot> = kb.history().iter().collect();
    states.push(kb.current());
    let mut symbolic_steps = 0;
    let mut moved_on_symbolic = 0;
    let (mut picks, mut places) = (0, 0);
    for w in states.windows(2) {
        let tags_changed = w[0].objects.iter().zip(&w[1].objects).any(|(a, b)| a.tags != b.tags);
        if tags_changed {
            symbolic_steps += 1;
            let same = w[0].objects.iter().zip(&w[1].objects).all(|(a, b)| {
                a.pose.x.to_bits() == b.pose.x.to_bits()
                    && a.pose.y.to_bits() == b.pose.y.to_bits()
                    && a.pose.yaw.to_bits() == b.pose.yaw.to_bits()
                    && a.location == b.location
            });
            moved_on_symbolic += usize::from(!same);
        }
        let loc = |s: &WorkspaceSnapshot| s.object("radish_1").map(|o| o.location.clone());
        match (loc(w[0]), loc(w[1])) {
            (Some(Location::Table), Some(Location::Held { .. })) => picks += 1,
            (Some(Location::Held { .. }), Some(Location::Table)) => places += 1,
            _ => {}
        }
    }
    let cooked = kb
        .current()
        .objects
        .iter()
        .filter(|o| o.tags.contains(&Tag::Cooked) && o.tags.contains(&Tag::Clean))
        .count();
    check(
        m.solved && moved_on_symbolic == 0 && symbolic_steps >= 6 && picks == 2 && places == 2 && cooked == 2,
        format!(
            "solved {}, {symbolic_steps} cook/wash steps with {moved_on_symbolic} pose changes; radish_1 picked {picks}x, placed {places}x"
            , m.solved
        ),
    )
}

fn main() {
    let checks: [(&str, fn() -> Outcome); 11] = [
        ("hanoi optimal depth", hanoi_optimal_depth),
        ("hanoi template shape", hanoi_template_shape),
        ("work bound and TP-d linearity", work_bound_and_linearity),
        ("completeness on certified instances", completeness),
        ("utility law", utility_law),
        ("allocation vs exhaustive oracle", allocation_oracle),
        ("obstacle heuristic vs brute force", heuristic_equivalence),
        ("motion validity", motion_validity),
        ("failure inflation", failure_inflation),
        ("metrics schema and golden files", metrics_schema),
        ("kitchen non-geometric actions", kitchen_invariant),
    ];
    let started = Instant::now();
    let results: Vec<(Outcome, Duration)> = std::thread::scope(|s| {
        let handles: Vec<_> = checks
            .iter()
            .map(|(_, f)| {
                let f = *f;
                s.spawn(move || {
                    let t = Instant::now();
                    let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
                        let msg = p
                            .downcast_ref::<String>()
                            .cloned()
                            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                            .unwrap_or_default();
                        Err(format!("panicked: {msg}"))
                    });
                    (r, t.elapsed())
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    let mut failed = Vec::new();
    for (i, ((name, _), (r, took))) in checks.iter().zip(&results).enumerate() {
        let (tag, detail) = match r {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed.push(*name);
                ("FAIL", d)
            }
        };
        println!("[{:02}] {tag} {name} ({:.1}s): {detail}", i + 1, took.as_secs_f64());
    }
    println!("acceptance: {}/11 passed in {:.1}s", 11 - failed.len(), started.elapsed().as_secs_f64());
    if !failed.is_empty() {
        eprintln!("failed: {failed:?}");
        std::process::exit(1);
    }
}
