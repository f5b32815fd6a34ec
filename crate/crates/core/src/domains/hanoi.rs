//! Tower of Hanoi played by two arms that each reach only two of the three
//! rods. Every graph moves one disk: sense, choose the move, pick, place
//! (through a handover when the picking arm cannot reach the destination),
//! then either finish or start over with a new graph.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{two_arm_robot, GraphBuilder};
use crate::geometry::{Rect, Vec2};
use crate::graph::{ActionSpec, AugmentedArcSpec, GraphTemplate, HyperArc, NodeKind, Verb};
use crate::planner::{Binding, DomainTemplate, Grounding, MotionGoal, Step, TaskContext};
use crate::workspace::{
    ActionEffect, Appliance, ArmModel, Category, Destination, Location, ObjectModel, Pose, RobotModel, Scenario,
    WorkspaceSnapshot,
};

pub const RODS: [char; 3] = ['A', 'B', 'C'];
const GOAL_ROD: usize = 2;

pub const INIT: &str = "INIT";
pub const UPDATED: &str = "updated";
pub const HANDED_OVER_LEFT: &str = "handed_over_left";
pub const HANDED_OVER_RIGHT: &str = "handed_over_right";
pub const HANDED_OVER: &str = "handed_over";
pub const STAGED: &str = "staged";
pub const ALL_DONE: &str = "all_done";
pub const NOT_DONE: &str = "not_done";
pub const END: &str = "END";

fn checked(i: usize, j: usize) -> String {
    format!("checked_{}{}", RODS[i], RODS[j])
}

fn picked(i: usize) -> String {
    format!("picked_{}", RODS[i])
}

fn placed(j: usize) -> String {
    format!("placed_to_rod_{}", RODS[j])
}

pub fn rod_id(i: usize) -> String {
    format!("rod_{}", RODS[i])
}

fn rod_index(label_suffix: char) -> Option<usize> {
    RODS.iter().position(|&c| c == label_suffix)
}

fn moves() -> impl Iterator<Item = (usize, usize)> {
    (0..3).flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j)))
}

pub fn hanoi_template() -> DomainTemplate {
    let mut b = GraphBuilder::default();
    let updated = b.node(UPDATED, NodeKind::Internal);
    for (i, j) in moves() {
        b.node(&checked(i, j), NodeKind::Internal);
    }
    for i in 0..3 {
        b.node(&picked(i), NodeKind::Internal);
    }
    for j in 0..3 {
        b.node(&placed(j), NodeKind::Internal);
    }
    let hl = b.node(HANDED_OVER_LEFT, NodeKind::Internal);
    let hr = b.node(HANDED_OVER_RIGHT, NodeKind::Internal);
    let ho = b.node(HANDED_OVER, NodeKind::Internal);
    let staged = b.node(STAGED, NodeKind::Internal);
    let all_done = b.node(ALL_DONE, NodeKind::Internal);
    let not_done = b.node(NOT_DONE, NodeKind::FailureTerminal);
    let end = b.node(END, NodeKind::SuccessTerminal);

    for (i, j) in moves() {
        b.arc(&[updated], b.id(&checked(i, j)), vec![], 1.0);
    }
    for (i, j) in moves() {
        let pick = vec![ActionSpec::geometric(Verb::Pick, format!("$top_{}", RODS[i]))];
        b.arc(&[b.id(&checked(i, j))], b.id(&picked(i)), pick, 1.0);
    }
    let place = || vec![ActionSpec::geometric(Verb::Place, "$held")];
    for (i, j) in moves() {
        b.arc(&[b.id(&picked(i))], b.id(&placed(j)), place(), 1.0);
    }
    for i in 0..3 {
        let give = vec![ActionSpec::geometric(Verb::Handover, "$held")];
        b.arc(&[b.id(&picked(i))], hl, give, 2.0);
    }
    b.arc(&[hl], hr, vec![ActionSpec::geometric(Verb::Handover, "$held")], 1.0);
    b.arc(&[hr], ho, vec![ActionSpec::geometric(Verb::Handover, "$held")], 1.0);
    for j in 0..3 {
        b.arc(&[ho], b.id(&placed(j)), place(), 1.0);
    }
    for j in 0..3 {
        b.arc(&[b.id(&placed(j))], staged, vec![], 1.0);
    }
    b.arc(&[staged], all_done, vec![], 1.0);
    b.arc(&[staged], not_done, vec![], 1.0);
    b.arc(&[all_done], end, vec![], 1.0);

    let template = GraphTemplate {
        root_label: INIT.to_string(),
        graph: b.build(),
        augmented: vec![AugmentedArcSpec::to(UPDATED).with_actions(vec![ActionSpec::symbolic(Verb::Sense, None)])],
    };
    DomainTemplate {
        name: "hanoi".into(),
        template,
        binding: Arc::new(HanoiBinding),
        agents: vec!["left".into(), "right".into()],
    }
}

/// Disk sizes by id; larger number, larger disk.
fn disk_size(id: &str) -> Option<u32> {
    id.strip_prefix("disk_")?.parse().ok()
}

/// Disk ids on each rod, bottom first.
fn stacks(s: &WorkspaceSnapshot) -> [Vec<u32>; 3] {
    std::array::from_fn(|i| s.stack(&rod_id(i)).iter().filter_map(|o| disk_size(&o.id)).collect())
}

fn legal(st: &[Vec<u32>; 3], i: usize, j: usize) -> bool {
    match (st[i].last(), st[j].last()) {
        (Some(d), Some(t)) => d < t,
        (Some(_), None) => true,
        _ => false,
    }
}

/// First move of the shortest solution from an arbitrary legal position to
/// every disk on the last rod.
pub fn optimal_move(st: &[Vec<u32>; 3]) -> Option<(usize, usize)> {
    let n = st.iter().flatten().copied().max().unwrap_or(0);
    let mut pos = BTreeMap::new();
    for (rod, s) in st.iter().enumerate() {
        for d in s {
            pos.insert(*d, rod);
        }
    }
    fn first(pos: &BTreeMap<u32, usize>, k: u32, target: usize) -> Option<(usize, usize)> {
        if k == 0 {
            return None;
        }
        // A disk in hand is off every rod; plan around it.
        let Some(&at) = pos.get(&k) else { return first(pos, k - 1, target) };
        if at == target {
            return first(pos, k - 1, target);
        }
        let spare = 3 - at - target;
        first(pos, k - 1, spare).or(Some((at, target)))
    }
    first(&pos, n, GOAL_ROD)
}

/// Legal moves, the optimal one first, then the rest in rod order.
fn ranked_moves(st: &[Vec<u32>; 3]) -> Vec<(usize, usize)> {
    let best = optimal_move(st);
    let mut out: Vec<(usize, usize)> = best.into_iter().collect();
    out.extend(moves().filter(|&(i, j)| legal(st, i, j) && Some((i, j)) != best));
    out
}

/// The move this graph commits to. After repeated dead ends the next-best
/// legal move is tried instead.
fn chosen(ctx: &TaskContext) -> Option<(usize, usize)> {
    let ranked = ranked_moves(&stacks(ctx.binding));
    if ranked.is_empty() {
        return None;
    }
    Some(ranked[ctx.exhausted_streak as usize % ranked.len()])
}

fn moving_disk(ctx: &TaskContext) -> Option<String> {
    let (i, _) = chosen(ctx)?;
    ctx.binding.stack(&rod_id(i)).last().map(|o| o.id.clone())
}

fn holder<'r>(r: &'r RobotModel) -> Option<(&'r ArmModel, &'r str)> {
    r.arms.iter().find_map(|a| a.holding.as_deref().map(|h| (a, h)))
}

fn other_arm<'r>(r: &'r RobotModel, a: &ArmModel) -> Option<&'r ArmModel> {
    r.arms.iter().find(|b| b.id != a.id)
}

/// Point in front of the robot where the arms meet for a handover.
pub fn handover_point(r: &RobotModel) -> Vec2 {
    r.base.transform(Vec2::new(0.0, 0.5))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct HanoiBinding;

impl HanoiBinding {
    fn place(&self, s: &WorkspaceSnapshot, r: &RobotModel, j: usize, ideal: bool) -> Vec<Grounding> {
        let Some((a, disk)) = holder(r) else { return Vec::new() };
        let rod = rod_id(j);
        let Some(rod_obj) = s.object(&rod) else { return Vec::new() };
        if !ideal && !r.reaches(a, rod_obj.center()) {
            return Vec::new();
        }
        if let (Some(top), Some(d)) = (s.stack(&rod).last(), disk_size(disk)) {
            if disk_size(&top.id).is_some_and(|t| t < d) {
                return Vec::new();
            }
        }
        vec![Grounding::new(
            format!("{}/{}", r.id, a.id),
            vec![Step::new(
                MotionGoal::Reach {
                    robot: r.id.clone(),
                    arm: a.id.clone(),
                    point: rod_obj.center(),
                    support: Some(rod.clone()),
                },
                ActionEffect::Place {
                    object: disk.to_string(),
                    robot: r.id.clone(),
                    arm: a.id.clone(),
                    dest: Destination::Support { id: rod },
                },
            )],
        )]
    }

    fn reach_meeting_point(&self, r: &RobotModel, a: &ArmModel) -> Grounding {
        Grounding::new(
            format!("{}/{}", r.id, a.id),
            vec![Step::new(
                MotionGoal::Reach {
                    robot: r.id.clone(),
                    arm: a.id.clone(),
                    point: handover_point(r),
                    support: None,
                },
                ActionEffect::Wait,
            )],
        )
    }
}

impl Binding for HanoiBinding {
    fn holds(&self, label: &str, s: &WorkspaceSnapshot, ctx: &TaskContext) -> bool {
        let Some(r) = ctx.robot_model(s) else { return false };
        let all_done = || {
            let st = stacks(s);
            st[0].is_empty() && st[1].is_empty() && holder(r).is_none()
        };
        let goal_rod = |j: usize| {
            chosen(ctx).is_some_and(|(_, to)| to == j)
                && holder(r).is_none()
                && s.stack(&rod_id(j)).last().map(|o| o.id.clone()) == moving_disk(ctx)
        };
        match label {
            INIT | UPDATED | STAGED => true,
            HANDED_OVER_LEFT | HANDED_OVER_RIGHT => holder(r).is_some(),
            HANDED_OVER => match (holder(r), chosen(ctx)) {
                (Some((a, _)), Some((_, j))) => {
                    ctx.ideal || s.object(&rod_id(j)).is_some_and(|rod| r.reaches(a, rod.center()))
                }
                _ => false,
            },
            ALL_DONE | END => all_done(),
            NOT_DONE => !all_done(),
            l => {
                if let Some(rest) = l.strip_prefix("checked_") {
                    let mut c = rest.chars();
                    let (Some(i), Some(j), None) = (c.next().and_then(rod_index), c.next().and_then(rod_index), c.next())
                    else {
                        return false;
                    };
                    chosen(ctx) == Some((i, j))
                } else if let Some(rest) = l.strip_prefix("picked_") {
                    let held = holder(r).map(|(_, h)| h.to_string());
                    rest.chars().next().and_then(rod_index).is_some()
                        && chosen(ctx).is_some_and(|(i, _)| Some(RODS[i]) == rest.chars().next())
                        && held.is_some()
                        && held == moving_disk(ctx)
                } else if let Some(rest) = l.strip_prefix("placed_to_rod_") {
                    rest.chars().next().and_then(rod_index).is_some_and(goal_rod)
                } else {
                    false
                }
            }
        }
    }

    fn ground(&self, arc: &HyperArc, parent: &str, s: &WorkspaceSnapshot, ctx: &TaskContext) -> Vec<Grounding> {
        let Some(r) = ctx.robot_model(s) else { return Vec::new() };
        let Some((from, to)) = chosen(ctx) else { return Vec::new() };
        if arc.actions.is_empty() {
            return vec![Grounding::empty()];
        }
        match parent {
            UPDATED => vec![Grounding::new(r.id.clone(), vec![Step::symbolic(ActionEffect::Sense)])],
            HANDED_OVER_LEFT => {
                let Some((a, _)) = holder(r) else { return Vec::new() };
                let Some(rod) = s.object(&rod_id(to)) else { return Vec::new() };
                let receiver_reaches = other_arm(r, a).is_some_and(|b| b.holding.is_none() && r.reaches(b, rod.center()));
                if ctx.ideal || r.reaches(a, rod.center()) || !receiver_reaches {
                    return Vec::new();
                }
                vec![self.reach_meeting_point(r, a)]
            }
            HANDED_OVER_RIGHT => {
                let Some((a, _)) = holder(r) else { return Vec::new() };
                match other_arm(r, a) {
                    Some(b) => vec![self.reach_meeting_point(r, b)],
                    None => Vec::new(),
                }
            }
            HANDED_OVER => {
                let Some((a, _)) = holder(r) else { return Vec::new() };
                let Some(b) = other_arm(r, a) else { return Vec::new() };
                vec![Grounding::new(
                    r.id.clone(),
                    vec![Step::symbolic(ActionEffect::Handover {
                        robot: r.id.clone(),
                        from_arm: a.id.clone(),
                        to_arm: b.id.clone(),
                    })],
                )]
            }
            l if l.starts_with("picked_") => {
                let Some(disk) = moving_disk(ctx) else { return Vec::new() };
                if holder(r).is_some() || l != picked(from) {
                    return Vec::new();
                }
                let dest = s.object(&rod_id(to)).map(|o| o.center());
                let mut arms: Vec<&ArmModel> = r.arms.iter().collect();
                // Prefer an arm that can finish the move without a handover.
                arms.sort_by_key(|a| !dest.is_some_and(|p| r.reaches(a, p)));
                arms.into_iter()
                    .map(|a| {
                        Grounding::new(
                            format!("{}/{}", r.id, a.id),
                            vec![Step::new(
                                MotionGoal::Grasp {
                                    robot: r.id.clone(),
                                    arm: a.id.clone(),
                                    object: disk.clone(),
                                },
                                ActionEffect::Pick {
                                    object: disk.clone(),
                                    robot: r.id.clone(),
                                    arm: a.id.clone(),
                                },
                            )],
                        )
                    })
                    .collect()
            }
            l if l.starts_with("placed_to_rod_") => {
                if l != placed(to) {
                    return Vec::new();
                }
                self.place(s, r, to, ctx.ideal)
            }
            _ => Vec::new(),
        }
    }

    fn knows_label(&self, label: &str) -> bool {
        matches!(
            label,
            INIT | UPDATED | HANDED_OVER_LEFT | HANDED_OVER_RIGHT | HANDED_OVER | STAGED | ALL_DONE | NOT_DONE | END
        ) || moves().any(|(i, j)| label == checked(i, j))
            || (0..3).any(|i| label == picked(i) || label == placed(i))
    }

    fn knows_verb(&self, verb: Verb) -> bool {
        matches!(verb, Verb::Pick | Verb::Place | Verb::Handover)
    }
}

/// Rod positions: a triangle with B nearest the robot.
pub fn rod_positions() -> [Vec2; 3] {
    [Vec2::new(0.1, 0.65), Vec2::new(0.5, 0.45), Vec2::new(0.9, 0.65)]
}

/// `n` disks on rod A, largest at the bottom, and one two-armed robot whose
/// left arm reaches rods A and B and right arm rods B and C.
pub fn hanoi_scenario(n: usize) -> Scenario {
    let rods = rod_positions();
    let mut objects: Vec<ObjectModel> = rods
        .iter()
        .enumerate()
        .map(|(i, p)| ObjectModel::disc(rod_id(i), p.x, p.y, 0.01, Category::Fixture).with_appliance(Appliance::Rod))
        .collect();
    for k in (1..=n).rev() {
        let radius = 0.02 + 0.015 * k as f64 / n as f64;
        let mut d = ObjectModel::disc(format!("disk_{k}"), rods[0].x, rods[0].y, radius, Category::Graspable);
        d.location = Location::On {
            support: rod_id(0),
            level: (n - k) as u32,
        };
        objects.push(d);
    }
    Scenario {
        table: Rect::new(0.0, 0.0, 1.0, 0.8),
        storage: Rect::new(1.05, 0.0, 1.35, 0.3),
        objects,
        robots: vec![two_arm_robot("r0", Pose::new(0.5, -0.3, 0.0), 0.3, 1.0)],
        targets: Vec::new(),
        seed: 0,
        stations: BTreeMap::new(),
    }
}

/// Checks every snapshot against the rule that a disk only ever rests on a
/// larger one.
#[derive(Debug, Clone, Copy, Default)]
pub struct HanoiMonitor;

impl HanoiMonitor {
    pub fn check(&self, s: &WorkspaceSnapshot) -> Result<(), String> {
        for (i, st) in stacks(s).iter().enumerate() {
            if st.windows(2).any(|w| w[0] < w[1]) {
                return Err(format!("rod {} holds {:?}", RODS[i], st));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn template_has_21_nodes_and_33_arcs() {
        let d = hanoi_template();
        assert_eq!(d.template.node_count(), 21);
        assert_eq!(d.template.arc_count(), 33);
        assert!(d.binding_gaps().is_empty(), "{:?}", d.binding_gaps());
    }

    #[test]
    fn optimal_move_from_start() {
        let st = [vec![3, 2, 1], vec![], vec![]];
        assert_eq!(optimal_move(&st), Some((0, 2)));
        let st = [vec![4, 3, 2, 1], vec![], vec![]];
        assert_eq!(optimal_move(&st), Some((0, 1)));
        assert_eq!(optimal_move(&[vec![], vec![], vec![2, 1]]), None);
        // disk 2 in hand
        assert_eq!(optimal_move(&[vec![3], vec![1], vec![]]), Some((0, 2)));
    }

    #[test]
    fn optimal_moves_take_two_to_the_n_minus_one_steps() {
        for n in 1..=6u32 {
            let mut st: [Vec<u32>; 3] = [(1..=n).rev().collect(), vec![], vec![]];
            let mut steps = 0;
            while let Some((i, j)) = optimal_move(&st) {
                assert!(legal(&st, i, j));
                let d = st[i].pop().unwrap();
                st[j].push(d);
                steps += 1;
            }
            assert_eq!(steps, (1 << n) - 1);
        }
    }

    #[test]
    fn arms_split_the_rods() {
        let s = hanoi_scenario(3).snapshot();
        let r = &s.robots[0];
        let reach = |arm: usize, rod: usize| r.reaches(&r.arms[arm], rod_positions()[rod]);
        assert!(reach(0, 0) && reach(0, 1) && !reach(0, 2));
        assert!(!reach(1, 0) && reach(1, 1) && reach(1, 2));
        assert!(s.violations(&crate::workspace::SimConfig::default()).is_empty());
        HanoiMonitor.check(&s).unwrap();
    }
}
