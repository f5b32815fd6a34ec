//! Brute-force rearrangement sets: rays re-intersected analytically and
//! every object tested against the grown triangle by point-in-triangle and
//! edge distances.

use std::collections::BTreeSet;

use tmpidan_core::domains::{generate_clutter_with, ClutterParams};
use tmpidan_core::heuristic::feasible_angles;
use tmpidan_core::motion::DEFAULT_STANDOFF;
use tmpidan_core::{Category, RobotModel, Scenario, Shape, Vec2, WorkspaceSnapshot};

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

fn seg_dist(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = b - a;
    let len2 = ab.x * ab.x + ab.y * ab.y;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p - a).x * ab.x + (p - a).y * ab.y) / len2).clamp(0.0, 1.0)
    };
    (p - (a + ab * t)).norm()
}

fn tri_dist(p: Vec2, v: [Vec2; 3]) -> f64 {
    let s = [cross(v[1] - v[0], p - v[0]), cross(v[2] - v[1], p - v[1]), cross(v[0] - v[2], p - v[2])];
    let inside = s.iter().all(|x| *x >= 0.0) || s.iter().all(|x| *x <= 0.0);
    let area = cross(v[1] - v[0], v[2] - v[0]).abs();
    if inside && area > 0.0 {
        return 0.0;
    }
    seg_dist(p, v[0], v[1]).min(seg_dist(p, v[1], v[2])).min(seg_dist(p, v[2], v[0]))
}

fn ray_end(s: &WorkspaceSnapshot, target: &str, origin: Vec2, dir: Vec2, cap: f64, pad: f64) -> Vec2 {
    let mut far: f64 = 0.0;
    for o in s.objects.iter().filter(|o| o.on_table() && o.id != target) {
        let Shape::Disc { radius } = o.shape else { panic!("disc scenes only") };
        let m = origin - o.center();
        let b = m.x * dir.x + m.y * dir.y;
        let disc = b * b - (m.x * m.x + m.y * m.y - radius * radius);
        if disc < 0.0 {
            continue;
        }
        let (t0, t1) = (-b - disc.sqrt(), -b + disc.sqrt());
        if t1 > 0.0 && t0 < cap {
            far = far.max(t1 + pad);
        }
    }
    let len = far.max(DEFAULT_STANDOFF).min(cap.max(DEFAULT_STANDOFF));
    origin + dir * len
}

pub fn oracle(s: &WorkspaceSnapshot, robot: &RobotModel, target: &str) -> Option<BTreeSet<String>> {
    let angles = feasible_angles(s, robot, target, DEFAULT_STANDOFF).ok()?;
    let alpha = angles.iter().copied().fold(f64::MIN, f64::max);
    let beta = angles.iter().copied().fold(f64::MAX, f64::min);
    let c = s.object(target).unwrap().center();
    let to_base = robot.base.position() - c;
    let cap = to_base.norm();
    let u = to_base * (1.0 / cap);
    let rot = |a: f64| Vec2::new(u.x * a.cos() - u.y * a.sin(), u.x * a.sin() + u.y * a.cos());
    let pad = robot.gripper_radius;
    let a = ray_end(s, target, c, rot(alpha), cap, pad);
    let b = ray_end(s, target, c, rot(beta), cap, pad);
    let v = [c, a, if alpha == beta { a } else { b }];
    Some(
        s.objects
            .iter()
            .filter(|o| o.on_table() && o.id != target && o.category != Category::Fixture)
            .filter(|o| tri_dist(o.center(), v) < o.shape.bounding_radius() + pad)
            .map(|o| o.id.clone())
            .collect(),
    )
}

pub fn scene(i: u64) -> Scenario {
    let objects = 4 + (i as usize * 7) % 40;
    (0..)
        .find_map(|k| {
            let mut p = ClutterParams::new(objects, 1 + (i as usize % 4), 1000 + 7919 * k + i);
            p.max_radius = if i % 3 == 0 { 0.07 } else { 0.04 };
            generate_clutter_with(p).ok()
        })
        .unwrap()
}
