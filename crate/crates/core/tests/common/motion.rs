//! Independent checks for motion plans: a sampling revalidator and a
//! grid search that decides whether any path exists at all.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tmpidan_core::geometry::{Rect, Vec2};
use tmpidan_core::motion::{GoalRegion, MotionDomain, Trajectory};
use tmpidan_core::workspace::Footprint;

pub const DELTA: f64 = 0.005;

#[derive(Debug)]
pub enum Obstacle {
    Disc(Vec2, f64),
    Box(Rect),
}

pub struct Query {
    pub bounds: Rect,
    pub radius: f64,
    pub obstacles: Vec<Obstacle>,
    pub start: Vec2,
    pub goal: GoalRegion,
}

pub fn clearance(o: &Obstacle, p: Vec2) -> f64 {
    match o {
        Obstacle::Disc(c, r) => p.dist(*c) - r,
        Obstacle::Box(b) => {
            let dx = (b.min.x - p.x).max(0.0).max(p.x - b.max.x);
            let dy = (b.min.y - p.y).max(0.0).max(p.y - b.max.y);
            (dx * dx + dy * dy).sqrt()
        }
    }
}

pub fn free(q: &Query, p: Vec2) -> bool {
    let b = q.bounds;
    p.x - q.radius >= b.min.x
        && p.x + q.radius <= b.max.x
        && p.y - q.radius >= b.min.y
        && p.y + q.radius <= b.max.y
        && q.obstacles.iter().all(|o| clearance(o, p) >= q.radius)
}

pub fn revalidate(q: &Query, t: &Trajectory) -> Result<(), String> {
    if t.waypoints.first() != Some(&q.start) {
        return Err("does not start at the start".into());
    }
    let end = *t.waypoints.last().unwrap();
    let at_goal = match &q.goal {
        GoalRegion::Point { center, tolerance } => end.dist(*center) <= *tolerance,
        GoalRegion::GraspApproach { pregrasp, contact, .. } => {
            end == *contact && t.waypoints.len() >= 2 && t.waypoints[t.waypoints.len() - 2] == *pregrasp
        }
    };
    if !at_goal {
        return Err(format!("ends at {end:?}, outside the goal"));
    }
    for w in t.waypoints.windows(2) {
        let n = (w[0].dist(w[1]) / DELTA).ceil().max(1.0) as usize;
        for i in 0..=n {
            let p = w[0] + (w[1] - w[0]) * (i as f64 / n as f64);
            if !free(q, p) {
                return Err(format!("collision at {p:?}"));
            }
        }
    }
    Ok(())
}

pub fn sample_free(rng: &mut ChaCha8Rng, q: &Query) -> Option<Vec2> {
    (0..500).find_map(|_| {
        let p = Vec2::new(
            rng.gen_range(q.bounds.min.x..q.bounds.max.x),
            rng.gen_range(q.bounds.min.y..q.bounds.max.y),
        );
        free(q, p).then_some(p)
    })
}

pub fn query(seed: u64) -> Option<Query> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = Query {
        bounds: Rect::new(0.0, 0.0, 1.0, 0.8),
        radius: rng.gen_range(0.02..0.08),
        obstacles: Vec::new(),
        start: Vec2::default(),
        goal: GoalRegion::Point {
            center: Vec2::default(),
            tolerance: 0.01,
        },
    };
    for _ in 0..rng.gen_range(0..14) {
        let c = Vec2::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..0.8));
        q.obstacles.push(Obstacle::Disc(c, rng.gen_range(0.02..0.08)));
    }
    for _ in 0..rng.gen_range(0..3) {
        let (x, y) = (rng.gen_range(0.0..0.9), rng.gen_range(0.0..0.7));
        q.obstacles.push(Obstacle::Box(Rect::new(x, y, x + rng.gen_range(0.02..0.3), y + rng.gen_range(0.02..0.1))));
    }
    q.start = sample_free(&mut rng, &q)?;
    let anchor = sample_free(&mut rng, &q)?;
    q.goal = if rng.gen_bool(0.3) {
        let dir = Vec2::new(1.0, 0.0).rotate(rng.gen_range(-3.1..3.1));
        let contact = anchor + dir * 0.05;
        if !free(&q, contact) {
            return None;
        }
        GoalRegion::GraspApproach {
            target: "t".into(),
            angle: 0.0,
            standoff: 0.05,
            pregrasp: anchor,
            contact,
        }
    } else {
        GoalRegion::Point {
            center: anchor,
            tolerance: 0.01,
        }
    };
    Some(q)
}

pub fn domain(q: &Query) -> MotionDomain {
    let obstacles = q
        .obstacles
        .iter()
        .enumerate()
        .map(|(i, o)| {
            let f = match o {
                Obstacle::Disc(center, radius) => Footprint::Disc {
                    center: *center,
                    radius: *radius,
                },
                Obstacle::Box(b) => Footprint::Polygon(vec![
                    b.min,
                    Vec2::new(b.max.x, b.min.y),
                    b.max,
                    Vec2::new(b.min.x, b.max.y),
                ]),
            };
            (format!("o{i}"), f)
        })
        .collect();
    MotionDomain {
        bounds: q.bounds,
        obstacles,
        moving_radius: q.radius,
        goal: q.goal.clone(),
    }
}

pub const R: f64 = 0.05;

pub fn block(x0: f64, y0: f64, x1: f64, y1: f64) -> Footprint {
    Footprint::Polygon(vec![Vec2::new(x0, y0), Vec2::new(x1, y0), Vec2::new(x1, y1), Vec2::new(x0, y1)])
}

/// A wall across the table with one gap of `gap` width near the left edge.
/// Start and goal sit on opposite sides, far to the right.
pub fn corridor(gap: f64) -> MotionDomain {
    let (gx, y0, y1) = (0.2, 0.35, 0.45);
    MotionDomain {
        bounds: Rect::new(0.0, 0.0, 1.0, 0.8),
        obstacles: vec![
            ("left".into(), block(-0.1, y0, gx - gap / 2.0, y1)),
            ("right".into(), block(gx + gap / 2.0, y0, 1.1, y1)),
        ],
        moving_radius: R,
        goal: GoalRegion::Point {
            center: Vec2::new(0.8, 0.65),
            tolerance: 0.01,
        },
    }
}

pub const START: Vec2 = Vec2::new(0.8, 0.15);

/// Breadth-first search over a 0.005 m grid of collision-free configurations.
pub fn grid_path_exists(d: &MotionDomain, start: Vec2) -> bool {
    let h = 0.005;
    let cols = (d.bounds.width() / h).round() as i64 + 1;
    let rows = (d.bounds.height() / h).round() as i64 + 1;
    let at = |i: i64, j: i64| d.bounds.min + Vec2::new(i as f64 * h, j as f64 * h);
    let mut seen = vec![false; (cols * rows) as usize];
    let si = ((start.x - d.bounds.min.x) / h).round() as i64;
    let sj = ((start.y - d.bounds.min.y) / h).round() as i64;
    let mut q = VecDeque::from([(si, sj)]);
    seen[(sj * cols + si) as usize] = true;
    while let Some((i, j)) = q.pop_front() {
        if d.goal.contains(at(i, j)) {
            return true;
        }
        for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || nj < 0 || ni >= cols || nj >= rows || seen[(nj * cols + ni) as usize] {
                continue;
            }
            seen[(nj * cols + ni) as usize] = true;
            if d.collision_free(at(ni, nj)) {
                q.push_back((ni, nj));
            }
        }
    }
    false
}
