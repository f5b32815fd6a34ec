//! Meal preparation with a mobile two-armed robot, as one unfolded chain of
//! steps. Radishes hide the cabbages and are put back afterwards, so the
//! same object is handled twice; washing and cooking only flip tags.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{two_arm_robot, GraphBuilder};
use crate::geometry::{Rect, Vec2};
use crate::graph::{ActionSpec, AugmentedArcSpec, GraphTemplate, HyperArc, NodeKind, Verb};
use crate::planner::{Binding, DomainTemplate, Grounding, MotionGoal, Step, TaskContext};
use crate::workspace::{
    ActionEffect, Appliance, Category, Destination, Location, ObjectModel, Pose, Scenario, Tag, WorkspaceSnapshot,
};

pub const INIT: &str = "INIT";
pub const END: &str = "END";
pub const ROBOT: &str = "pr2";
pub const SERVINGS: usize = 2;

pub const WORKTABLE: &str = "worktable";
pub const MICROWAVE_STATION: &str = "microwave";
pub const DISHWASHER_STATION: &str = "dishwasher";
pub const MEAL_TABLE: &str = "meal_table";

const MICROWAVE: &str = "microwave";
const DISHWASHER: &str = "dishwasher";

/// One action of the chain.
#[derive(Debug, Clone, PartialEq)]
pub enum KitchenAction {
    Drive(&'static str),
    Pick(String),
    PlaceAt(String, Vec2),
    PlaceOn(String, &'static str),
    Wash(String),
    Cook(String),
    Wait,
}

impl KitchenAction {
    fn spec(&self) -> ActionSpec {
        match self {
            KitchenAction::Drive(st) => ActionSpec::geometric(Verb::MoveBase, *st).with_agent("base"),
            KitchenAction::Pick(o) => ActionSpec::geometric(Verb::Pick, o.as_str()),
            KitchenAction::PlaceAt(o, _) | KitchenAction::PlaceOn(o, _) => ActionSpec::geometric(Verb::Place, o.as_str()),
            KitchenAction::Wash(o) => ActionSpec::symbolic(Verb::Wash, Some(o)),
            KitchenAction::Cook(o) => ActionSpec::symbolic(Verb::Cook, Some(o)),
            KitchenAction::Wait => ActionSpec::symbolic(Verb::Wait, None),
        }
    }

    fn label(&self, index: usize) -> String {
        let what = match self {
            KitchenAction::Drive(st) => format!("at_{st}"),
            KitchenAction::Pick(o) => format!("picked_{o}"),
            KitchenAction::PlaceAt(o, _) => format!("placed_{o}"),
            KitchenAction::PlaceOn(o, s) => format!("placed_{o}_on_{s}"),
            KitchenAction::Wash(o) => format!("washed_{o}"),
            KitchenAction::Cook(o) => format!("cooked_{o}"),
            KitchenAction::Wait => "waited".to_string(),
        };
        format!("s{index:02}_{what}")
    }
}

fn radish(k: usize) -> String {
    format!("radish_{k}")
}
fn cabbage(k: usize) -> String {
    format!("cabbage_{k}")
}
fn glass(k: usize) -> String {
    format!("glass_{k}")
}

fn radish_home(k: usize) -> Vec2 {
    Vec2::new(0.35 + 0.2 * (k - 1) as f64, 0.35)
}
fn radish_aside(k: usize) -> Vec2 {
    Vec2::new(0.08, 0.3 + 0.15 * (k - 1) as f64)
}
fn cabbage_home(k: usize) -> Vec2 {
    Vec2::new(0.35 + 0.2 * (k - 1) as f64, 0.55)
}
fn cabbage_staging(_k: usize) -> Vec2 {
    Vec2::new(0.75, 0.25)
}
fn glass_home(k: usize) -> Vec2 {
    Vec2::new(2.3 + 0.4 * (k - 1) as f64, 0.6)
}
fn cabbage_served(k: usize) -> Vec2 {
    Vec2::new(2.35 + 0.3 * (k - 1) as f64, 0.3)
}
fn glass_served(k: usize) -> Vec2 {
    Vec2::new(2.48 + 0.3 * (k - 1) as f64, 0.3)
}

/// The full episode order for every serving.
pub fn kitchen_plan() -> Vec<KitchenAction> {
    use KitchenAction::*;
    let mut v = Vec::new();
    for k in 1..=SERVINGS {
        let (r, c, g) = (radish(k), cabbage(k), glass(k));
        v.extend([
            Drive(WORKTABLE),
            Pick(r.clone()),
            PlaceAt(r.clone(), radish_aside(k)),
            Pick(c.clone()),
            PlaceAt(c.clone(), cabbage_staging(k)),
            Pick(r.clone()),
            PlaceAt(r.clone(), radish_home(k)),
            Pick(c.clone()),
            Drive(DISHWASHER_STATION),
            PlaceOn(c.clone(), DISHWASHER),
            Wash(c.clone()),
            Wait,
            Pick(c.clone()),
            Drive(MICROWAVE_STATION),
            PlaceOn(c.clone(), MICROWAVE),
            Cook(c.clone()),
            Drive(MEAL_TABLE),
            Pick(g.clone()),
            Drive(DISHWASHER_STATION),
            PlaceOn(g.clone(), DISHWASHER),
            Wash(g.clone()),
            Drive(MICROWAVE_STATION),
            Pick(c.clone()),
            Drive(MEAL_TABLE),
            PlaceAt(c.clone(), cabbage_served(k)),
            Drive(DISHWASHER_STATION),
            Pick(g.clone()),
            Drive(MEAL_TABLE),
            PlaceAt(g.clone(), glass_served(k)),
        ]);
    }
    v
}

pub fn kitchen_template() -> DomainTemplate {
    let plan = kitchen_plan();
    let mut b = GraphBuilder::default();
    let mut labels = BTreeMap::new();
    let ids: Vec<u32> = plan
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let l = a.label(i + 1);
            labels.insert(l.clone(), a.clone());
            b.node(&l, NodeKind::Internal)
        })
        .collect();
    let end = b.node(END, NodeKind::SuccessTerminal);
    for (i, a) in plan.iter().enumerate().skip(1) {
        b.arc(&[ids[i - 1]], ids[i], vec![a.spec()], 1.0);
    }
    b.arc(&[*ids.last().expect("non-empty plan")], end, vec![], 1.0);
    let template = GraphTemplate {
        root_label: INIT.to_string(),
        graph: b.build(),
        augmented: vec![AugmentedArcSpec::to(plan[0].label(1)).with_actions(vec![plan[0].spec()])],
    };
    DomainTemplate {
        name: "kitchen".into(),
        template,
        binding: Arc::new(KitchenBinding { steps: labels }),
        agents: vec!["left".into(), "right".into(), "base".into()],
    }
}

#[derive(Debug, Clone)]
pub struct KitchenBinding {
    steps: BTreeMap<String, KitchenAction>,
}

fn served(s: &WorkspaceSnapshot) -> bool {
    (1..=SERVINGS).all(|k| {
        let at = |id: &str, p: Vec2| {
            s.object(id)
                .is_some_and(|o| o.location == Location::Table && o.center().dist(p) < 1e-9)
        };
        let c = s.object(&cabbage(k));
        let g = s.object(&glass(k));
        at(&cabbage(k), cabbage_served(k))
            && at(&glass(k), glass_served(k))
            && c.is_some_and(|o| o.tags.contains(&Tag::Cooked) && o.tags.contains(&Tag::Clean))
            && g.is_some_and(|o| o.tags.contains(&Tag::Clean))
    })
}

impl Binding for KitchenBinding {
    fn holds(&self, label: &str, s: &WorkspaceSnapshot, ctx: &TaskContext) -> bool {
        if label == INIT {
            return true;
        }
        if label == END {
            return served(s);
        }
        let Some(a) = self.steps.get(label) else { return false };
        let Some(r) = ctx.robot_model(s) else { return false };
        match a {
            KitchenAction::Drive(st) => s.stations.get(*st) == Some(&r.base),
            KitchenAction::Pick(o) => {
                s.object(o).is_some_and(|o| matches!(&o.location, Location::Held { robot, .. } if robot == &r.id))
            }
            KitchenAction::PlaceAt(o, p) => s
                .object(o)
                .is_some_and(|o| o.location == Location::Table && o.center().dist(*p) < 1e-9),
            KitchenAction::PlaceOn(o, sup) => s
                .object(o)
                .is_some_and(|o| matches!(&o.location, Location::On { support, .. } if support == sup)),
            KitchenAction::Wash(o) => s.object(o).is_some_and(|o| o.tags.contains(&Tag::Clean)),
            KitchenAction::Cook(o) => s.object(o).is_some_and(|o| o.tags.contains(&Tag::Cooked)),
            KitchenAction::Wait => true,
        }
    }

    fn ground(&self, _arc: &HyperArc, parent: &str, s: &WorkspaceSnapshot, ctx: &TaskContext) -> Vec<Grounding> {
        let Some(a) = self.steps.get(parent) else {
            return vec![Grounding::empty()];
        };
        let Some(r) = ctx.robot_model(s) else { return Vec::new() };
        let rid = r.id.clone();
        let holding = |o: &str| r.arms.iter().find(|a| a.holding.as_deref() == Some(o));
        let place = |o: &str, point: Vec2, support: Option<String>, dest: Destination| {
            let Some(arm) = holding(o) else { return Vec::new() };
            vec![Grounding::new(
                format!("{rid}/{}", arm.id),
                vec![Step::new(
                    MotionGoal::Reach {
                        robot: rid.clone(),
                        arm: arm.id.clone(),
                        point,
                        support,
                    },
                    ActionEffect::Place {
                        object: o.to_string(),
                        robot: rid.clone(),
                        arm: arm.id.clone(),
                        dest,
                    },
                )],
            )]
        };
        match a {
            KitchenAction::Drive(st) => vec![Grounding::new(
                "base",
                vec![Step::new(
                    MotionGoal::Base {
                        robot: rid.clone(),
                        station: st.to_string(),
                    },
                    ActionEffect::MoveBase {
                        robot: rid.clone(),
                        station: st.to_string(),
                    },
                )],
            )],
            KitchenAction::Pick(o) => r
                .arms
                .iter()
                .filter(|a| a.holding.is_none())
                .map(|a| {
                    Grounding::new(
                        format!("{rid}/{}", a.id),
                        vec![Step::new(
                            MotionGoal::Grasp {
                                robot: rid.clone(),
                                arm: a.id.clone(),
                                object: o.clone(),
                            },
                            ActionEffect::Pick {
                                object: o.clone(),
                                robot: rid.clone(),
                                arm: a.id.clone(),
                            },
                        )],
                    )
                })
                .collect(),
            KitchenAction::PlaceAt(o, p) => place(o, *p, None, Destination::Point { x: p.x, y: p.y }),
            KitchenAction::PlaceOn(o, sup) => {
                let Some(support) = s.object(sup) else { return Vec::new() };
                place(
                    o,
                    support.center(),
                    Some(sup.to_string()),
                    Destination::Support { id: sup.to_string() },
                )
            }
            KitchenAction::Wash(o) => vec![Grounding::new(rid, vec![Step::symbolic(ActionEffect::Wash { object: o.clone() })])],
            KitchenAction::Cook(o) => vec![Grounding::new(rid, vec![Step::symbolic(ActionEffect::Cook { object: o.clone() })])],
            KitchenAction::Wait => vec![Grounding::new(rid, vec![Step::symbolic(ActionEffect::Wait)])],
        }
    }

    fn knows_label(&self, label: &str) -> bool {
        label == INIT || label == END || self.steps.contains_key(label)
    }

    fn knows_verb(&self, verb: Verb) -> bool {
        matches!(verb, Verb::Pick | Verb::Place | Verb::MoveBase)
    }
}

/// Work table with radishes in front of cabbages and a microwave, a
/// dishwasher in the middle, and a meal table with dirty glasses.
pub fn kitchen_scenario() -> Scenario {
    let mut objects = vec![
        ObjectModel::cuboid(MICROWAVE, 0.85, 0.55, 0.08, 0.08, Category::Fixture).with_appliance(Appliance::Microwave),
        ObjectModel::cuboid(DISHWASHER, 1.5, 0.6, 0.12, 0.12, Category::Fixture).with_appliance(Appliance::Dishwasher),
    ];
    for k in 1..=SERVINGS {
        let (r, c, g) = (radish_home(k), cabbage_home(k), glass_home(k));
        objects.push(ObjectModel::disc(radish(k), r.x, r.y, 0.03, Category::Graspable));
        objects.push(ObjectModel::disc(cabbage(k), c.x, c.y, 0.035, Category::Graspable).with_tags(&[Tag::Raw, Tag::Dirty]));
        objects.push(ObjectModel::disc(glass(k), g.x, g.y, 0.03, Category::Graspable).with_tags(&[Tag::Dirty]));
    }
    let station = |x: f64| Pose::new(x, -0.3, 0.0);
    let stations = BTreeMap::from([
        (WORKTABLE.to_string(), station(0.5)),
        (MICROWAVE_STATION.to_string(), station(0.7)),
        (DISHWASHER_STATION.to_string(), station(1.5)),
        (MEAL_TABLE.to_string(), station(2.5)),
    ]);
    Scenario {
        table: Rect::new(0.0, 0.0, 3.0, 1.0),
        storage: Rect::new(3.0, 0.0, 3.2, 0.2),
        objects,
        robots: vec![two_arm_robot(ROBOT, Pose::new(2.5, -0.3, 0.0), 0.2, 1.0)],
        targets: Vec::new(),
        seed: 0,
        stations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plan_handles_radish_twice() {
        let picks = kitchen_plan()
            .iter()
            .filter(|a| matches!(a, KitchenAction::Pick(o) if o == "radish_1"))
            .count();
        assert_eq!(picks, 2);
    }

    #[test]
    fn template_is_total() {
        let d = kitchen_template();
        assert!(d.binding_gaps().is_empty(), "{:?}", d.binding_gaps());
        assert_eq!(d.agents.len(), 3);
        let cook = d
            .template
            .graph
            .arcs()
            .iter()
            .flat_map(|a| a.actions.iter())
            .find(|a| a.verb == Verb::Cook)
            .unwrap();
        assert!(!cook.geometric);
    }

    #[test]
    fn scenario_is_valid() {
        assert!(kitchen_scenario().violations(&crate::workspace::SimConfig::default()).is_empty());
    }
}
