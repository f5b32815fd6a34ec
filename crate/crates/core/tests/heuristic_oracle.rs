mod common;

use std::collections::BTreeSet;

use common::heuristic::{oracle, scene};
use tmpidan_core::domains::{generate_clutter_with, ClutterParams};
use tmpidan_core::heuristic::{build_triangle, feasible_angles, objects_to_rearrange, GraspAngleRange};
use tmpidan_core::motion::DEFAULT_STANDOFF;

#[test]
fn matches_brute_force_on_200_scenes() {
    let mut checked = 0;
    let mut nonempty = 0;
    for i in 0..200 {
        let sc = scene(i);
        let s = sc.snapshot();
        let target = &sc.targets[0];
        for robot in &sc.robots {
            let got = objects_to_rearrange(&s, robot, target, DEFAULT_STANDOFF).ok();
            let want = oracle(&s, robot, target);
            assert_eq!(got, want, "scene {i} robot {}", robot.id);
            if let Some(set) = got {
                assert!(!set.contains(target));
                checked += 1;
                nonempty += usize::from(!set.is_empty());
            }
        }
    }
    assert!(checked >= 200, "{checked}");
    assert!(nonempty > 20, "only {nonempty} scenes exercise a non-empty set");
}

#[test]
fn larger_inflation_never_shrinks_the_set() {
    for i in 0..60 {
        let sc = scene(i);
        let s = sc.snapshot();
        let target = &sc.targets[0];
        let robot = &sc.robots[0];
        let Ok(angles) = feasible_angles(&s, robot, target, DEFAULT_STANDOFF) else { continue };
        let tri = build_triangle(&s, robot, target, GraspAngleRange::from_angles(&angles).unwrap(), DEFAULT_STANDOFF).unwrap();
        let mut prev = BTreeSet::new();
        for k in 0..6 {
            let grown = tri.with_inflation(0.02 * k as f64);
            let set: BTreeSet<String> = s
                .objects
                .iter()
                .filter(|o| o.id != *target && grown.intersects(&o.footprint()))
                .map(|o| o.id.clone())
                .collect();
            assert!(prev.is_subset(&set), "scene {i} inflation step {k}");
            prev = set;
        }
    }
}

#[test]
fn robots_on_different_sides_see_different_sets() {
    let differing = (0..40)
        .filter(|&i| {
            let sc = generate_clutter_with(ClutterParams::new(30, 2, 500 + i)).unwrap();
            let s = sc.snapshot();
            let t = &sc.targets[0];
            let a = objects_to_rearrange(&s, &sc.robots[0], t, DEFAULT_STANDOFF);
            let b = objects_to_rearrange(&s, &sc.robots[1], t, DEFAULT_STANDOFF);
            matches!((a, b), (Ok(a), Ok(b)) if a != b)
        })
        .count();
    assert!(differing > 10, "{differing}");
}
