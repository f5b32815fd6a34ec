//! AND/OR graphs, their augmentation with a workspace root, and the
//! iteratively deepened network of augmented graphs.
//!
//! Hyper-arcs map a conjunction of child nodes to a single parent node.
//! Several arcs entering the same parent are alternatives. Achievement is a
//! monotone flag: firing an enabled arc marks its parent achieved, and
//! nothing ever clears it.
//!
//! Each [`AugmentedGraph`] keeps, per arc, the number of children that are
//! still unachieved. Marking a node achieved walks the arcs it feeds once,
//! so a whole graph is processed with at most `|N| + |H|` units of work
//! regardless of how many arcs are fired. The [`WorkCounter`] records that
//! work so callers can check the bound.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::workspace::WorkspaceSnapshot;

/// Default depth limit of a network.
pub const DEFAULT_DEPTH_LIMIT: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ArcId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeKind {
    Internal,
    SuccessTerminal,
    FailureTerminal,
    AugmentedRoot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verb {
    Pick,
    Place,
    Push,
    Handover,
    MoveBase,
    Cook,
    Wash,
    Wait,
    Sense,
}

impl Verb {
    /// Whether the verb can be realized without moving anything.
    pub fn may_be_non_geometric(self) -> bool {
        matches!(self, Verb::Cook | Verb::Wash | Verb::Wait | Verb::Sense)
    }
}

/// One symbolic action carried by a hyper-arc.
///
/// `object` may name a concrete object or a role such as `$target` that the
/// domain binding resolves against the current snapshot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ActionSpec {
    pub verb: Verb,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub object: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub agent_hint: Option<String>,
    pub geometric: bool,
}

impl ActionSpec {
    pub fn geometric(verb: Verb, object: impl Into<String>) -> Self {
        ActionSpec {
            verb,
            object: Some(object.into()),
            agent_hint: None,
            geometric: true,
        }
    }

    pub fn symbolic(verb: Verb, object: Option<&str>) -> Self {
        ActionSpec {
            verb,
            object: object.map(str::to_string),
            agent_hint: None,
            geometric: false,
        }
    }

    pub fn with_agent(mut self, agent: impl Into<String>) -> Self {
        self.agent_hint = Some(agent.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub label: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub achieved: bool,
}

impl Node {
    pub fn new(id: u32, label: impl Into<String>, kind: NodeKind) -> Self {
        Node {
            id: NodeId(id),
            label: label.into(),
            kind,
            achieved: false,
        }
    }

    pub fn achieved(mut self) -> Self {
        self.achieved = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperArc {
    pub id: ArcId,
    pub parent: NodeId,
    pub children: Vec<NodeId>,
    #[serde(default)]
    pub actions: Vec<ActionSpec>,
    #[serde(default = "default_cost")]
    pub cost: f64,
}

fn default_cost() -> f64 {
    1.0
}

impl HyperArc {
    pub fn new(id: u32, children: &[u32], parent: u32) -> Self {
        HyperArc {
            id: ArcId(id),
            parent: NodeId(parent),
            children: children.iter().copied().map(NodeId).collect(),
            actions: Vec::new(),
            cost: 1.0,
        }
    }

    pub fn with_actions(mut self, actions: Vec<ActionSpec>) -> Self {
        self.actions = actions;
        self
    }

    pub fn with_cost(mut self, cost: f64) -> Self {
        self.cost = cost;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("hyper-arc {0:?} closes a cycle")]
    Cycle(ArcId),
    #[error("dangling reference: {0}")]
    DanglingRef(String),
    #[error("duplicate id: {0}")]
    Duplicate(String),
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("hyper-arc {0:?} is not enabled")]
    InfeasibleFire(ArcId),
    #[error("depth limit {0} reached")]
    DepthLimitReached(usize),
    #[error("network already solved")]
    AlreadySolved,
}

/// A validated, acyclic AND/OR graph. Node and arc ids are dense indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct AndOrGraph {
    nodes: Vec<Node>,
    arcs: Vec<HyperArc>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    nodes: Vec<Node>,
    arcs: Vec<HyperArc>,
}

impl TryFrom<RawGraph> for AndOrGraph {
    type Error = GraphError;
    fn try_from(raw: RawGraph) -> Result<Self, GraphError> {
        AndOrGraph::build(raw.nodes, raw.arcs)
    }
}

impl From<AndOrGraph> for RawGraph {
    fn from(g: AndOrGraph) -> Self {
        RawGraph {
            nodes: g.nodes,
            arcs: g.arcs,
        }
    }
}

impl AndOrGraph {
    /// Validates and builds a graph.
    ///
    /// Ids are dense: node `i` must carry `NodeId(i)` and arc `j` must carry
    /// `ArcId(j)`. Labels must be unique.
    pub fn build(nodes: Vec<Node>, arcs: Vec<HyperArc>) -> Result<Self, GraphError> {
        for (i, n) in nodes.iter().enumerate() {
            if n.id.0 as usize != i {
                return Err(if nodes[..i].iter().any(|m| m.id == n.id) {
                    GraphError::Duplicate(format!("node {:?}", n.id))
                } else {
                    GraphError::Invalid(format!("node id {:?} at position {i}", n.id))
                });
            }
        }
        let mut labels = BTreeSet::new();
        for n in &nodes {
            if !labels.insert(n.label.as_str()) {
                return Err(GraphError::Duplicate(format!("label {}", n.label)));
            }
        }
        for (i, a) in arcs.iter().enumerate() {
            if a.id.0 as usize != i {
                return Err(if arcs[..i].iter().any(|b| b.id == a.id) {
                    GraphError::Duplicate(format!("arc {:?}", a.id))
                } else {
                    GraphError::Invalid(format!("arc id {:?} at position {i}", a.id))
                });
            }
            let exists = |n: NodeId| (n.0 as usize) < nodes.len();
            if !exists(a.parent) {
                return Err(GraphError::DanglingRef(format!(
                    "arc {:?} parent {:?}",
                    a.id, a.parent
                )));
            }
            if a.children.is_empty() {
                return Err(GraphError::Invalid(format!("arc {:?} has no children", a.id)));
            }
            if let Some(c) = a.children.iter().find(|c| !exists(**c)) {
                return Err(GraphError::DanglingRef(format!("arc {:?} child {:?}", a.id, c)));
            }
            if a.children.contains(&a.parent) {
                return Err(GraphError::Cycle(a.id));
            }
            if !(a.cost >= 0.0 && a.cost.is_finite()) {
                return Err(GraphError::Invalid(format!("arc {:?} cost {}", a.id, a.cost)));
            }
            for act in &a.actions {
                if !act.geometric && !act.verb.may_be_non_geometric() {
                    return Err(GraphError::Invalid(format!(
                        "arc {:?}: {:?} cannot be non-geometric",
                        a.id, act.verb
                    )));
                }
            }
        }
        for a in &arcs {
            for c in &a.children {
                let kind = nodes[c.0 as usize].kind;
                if matches!(kind, NodeKind::SuccessTerminal | NodeKind::FailureTerminal) {
                    return Err(GraphError::Invalid(format!(
                        "terminal {:?} has an outgoing arc {:?}",
                        c, a.id
                    )));
                }
            }
        }
        let g = AndOrGraph { nodes, arcs };
        g.check_acyclic()?;
        Ok(g)
    }

    /// Kahn's algorithm over child -> parent edges; reports the first arc
    /// left unprocessed when a cycle exists.
    fn check_acyclic(&self) -> Result<(), GraphError> {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut out: Vec<Vec<usize>> = vec![Vec::new(); n];
        for a in &self.arcs {
            for c in &a.children {
                out[c.0 as usize].push(a.parent.0 as usize);
                indegree[a.parent.0 as usize] += 1;
            }
        }
        let mut queue: VecDeque<usize> = (0..n).filter(|i| indegree[*i] == 0).collect();
        let mut seen = 0;
        while let Some(u) = queue.pop_front() {
            seen += 1;
            for &v in &out[u] {
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    queue.push_back(v);
                }
            }
        }
        if seen == n {
            return Ok(());
        }
        let culprit = self
            .arcs
            .iter()
            .find(|a| indegree[a.parent.0 as usize] > 0)
            .map(|a| a.id)
            .unwrap_or(ArcId(0));
        Err(GraphError::Cycle(culprit))
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn arcs(&self) -> &[HyperArc] {
        &self.arcs
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0 as usize]
    }

    pub fn arc(&self, id: ArcId) -> &HyperArc {
        &self.arcs[id.0 as usize]
    }

    pub fn node_by_label(&self, label: &str) -> Option<&Node> {
        self.nodes.iter().find(|n| n.label == label)
    }

    pub fn arcs_into(&self, parent: NodeId) -> impl Iterator<Item = &HyperArc> {
        self.arcs.iter().filter(move |a| a.parent == parent)
    }

    /// Leaves: nodes without incoming arcs, other than an augmented root.
    pub fn leaves(&self) -> Vec<NodeId> {
        let mut has_incoming = vec![false; self.nodes.len()];
        for a in &self.arcs {
            has_incoming[a.parent.0 as usize] = true;
        }
        self.nodes
            .iter()
            .filter(|n| !has_incoming[n.id.0 as usize] && n.kind != NodeKind::AugmentedRoot)
            .map(|n| n.id)
            .collect()
    }
}

/// How the augmented root connects into the base graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedArcSpec {
    /// Label of the node the arc leads to.
    pub parent: String,
    /// Other children besides the root, by label.
    #[serde(default)]
    pub extra_children: Vec<String>,
    #[serde(default)]
    pub actions: Vec<ActionSpec>,
    #[serde(default = "default_cost")]
    pub cost: f64,
}

impl AugmentedArcSpec {
    pub fn to(parent: impl Into<String>) -> Self {
        AugmentedArcSpec {
            parent: parent.into(),
            extra_children: Vec::new(),
            actions: Vec::new(),
            cost: 1.0,
        }
    }

    pub fn with_actions(mut self, actions: Vec<ActionSpec>) -> Self {
        self.actions = actions;
        self
    }

    pub fn with_cost(mut self, cost: f64) -> Self {
        self.cost = cost;
        self
    }
}

/// A base graph together with the arcs its augmented root feeds; the unit
/// the network replicates at every deepening step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphTemplate {
    pub root_label: String,
    pub graph: AndOrGraph,
    pub augmented: Vec<AugmentedArcSpec>,
}

impl GraphTemplate {
    pub fn node_count(&self) -> usize {
        self.graph.nodes().len() + 1
    }

    pub fn arc_count(&self) -> usize {
        self.graph.arcs().len() + self.augmented.len()
    }
}

/// Node-visit and arc-evaluation tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkCounter {
    pub node_visits: u64,
    pub arc_evaluations: u64,
}

impl WorkCounter {
    pub fn total(&self) -> u64 {
        self.node_visits + self.arc_evaluations
    }

    fn add(&mut self, other: &WorkCounter) {
        self.node_visits += other.node_visits;
        self.arc_evaluations += other.arc_evaluations;
    }
}

/// An AND/OR graph with an extra root bound to a workspace snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedGraph {
    base: AndOrGraph,
    root: NodeId,
    binding: WorkspaceSnapshot,
    augmented_arcs: Vec<ArcId>,
    /// Unachieved-children count per arc.
    pending: Vec<u32>,
    /// Arcs fed by each node.
    feeds: Vec<Vec<ArcId>>,
    /// Arcs whose children are all achieved, whether or not fired yet.
    enabled: BTreeSet<ArcId>,
    /// Arcs tried and found unexecutable in this graph.
    #[serde(default)]
    rejected: BTreeSet<ArcId>,
    work: WorkCounter,
}

impl AugmentedGraph {
    /// Adds the root bound to `snapshot` plus the arcs of `spec`. The input
    /// graph is left untouched.
    pub fn augment(
        graph: &AndOrGraph,
        root_label: &str,
        snapshot: WorkspaceSnapshot,
        spec: &[AugmentedArcSpec],
    ) -> Result<Self, GraphError> {
        let mut nodes = graph.nodes.clone();
        let root = NodeId(nodes.len() as u32);
        let mut root_node = Node::new(root.0, root_label, NodeKind::AugmentedRoot);
        root_node.achieved = true;
        nodes.push(root_node);
        let mut arcs = graph.arcs.clone();
        let mut augmented_arcs = Vec::with_capacity(spec.len());
        let lookup = |label: &str| {
            graph
                .node_by_label(label)
                .map(|n| n.id)
                .ok_or_else(|| GraphError::DanglingRef(format!("no node labelled {label}")))
        };
        for s in spec {
            let parent = lookup(&s.parent)?;
            let mut children = vec![root];
            for c in &s.extra_children {
                children.push(lookup(c)?);
            }
            let id = ArcId(arcs.len() as u32);
            arcs.push(HyperArc {
                id,
                parent,
                children,
                actions: s.actions.clone(),
                cost: s.cost,
            });
            augmented_arcs.push(id);
        }
        let base = AndOrGraph::build(nodes, arcs)?;
        Ok(Self::index(base, root, snapshot, augmented_arcs))
    }

    pub fn from_template(template: &GraphTemplate, snapshot: WorkspaceSnapshot) -> Result<Self, GraphError> {
        Self::augment(&template.graph, &template.root_label, snapshot, &template.augmented)
    }

    fn index(base: AndOrGraph, root: NodeId, binding: WorkspaceSnapshot, augmented_arcs: Vec<ArcId>) -> Self {
        let mut feeds = vec![Vec::new(); base.nodes.len()];
        let mut pending = Vec::with_capacity(base.arcs.len());
        let mut enabled = BTreeSet::new();
        for a in &base.arcs {
            let mut unachieved = 0;
            for c in &a.children {
                feeds[c.0 as usize].push(a.id);
                if !base.node(*c).achieved {
                    unachieved += 1;
                }
            }
            pending.push(unachieved);
            if unachieved == 0 {
                enabled.insert(a.id);
            }
        }
        AugmentedGraph {
            base,
            root,
            binding,
            augmented_arcs,
            pending,
            feeds,
            enabled,
            rejected: BTreeSet::new(),
            work: WorkCounter::default(),
        }
    }

    pub fn graph(&self) -> &AndOrGraph {
        &self.base
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn binding(&self) -> &WorkspaceSnapshot {
        &self.binding
    }

    pub fn augmented_arcs(&self) -> &[ArcId] {
        &self.augmented_arcs
    }

    pub fn work(&self) -> WorkCounter {
        self.work
    }

    pub fn is_achieved(&self, n: NodeId) -> bool {
        self.base.node(n).achieved
    }

    /// Enabled, unrejected arcs whose parent is not yet achieved, ordered
    /// by `(cost, ArcId)`.
    pub fn feasible_transitions(&self) -> Vec<(ArcId, NodeId)> {
        let mut out: Vec<(ArcId, NodeId)> = self
            .enabled
            .iter()
            .filter(|id| !self.rejected.contains(id))
            .map(|id| self.base.arc(*id))
            .filter(|a| !self.is_achieved(a.parent))
            .map(|a| (a.id, a.parent))
            .collect();
        out.sort_by(|x, y| {
            let cx = self.base.arc(x.0).cost;
            let cy = self.base.arc(y.0).cost;
            cx.total_cmp(&cy).then(x.0.cmp(&y.0))
        });
        out
    }

    /// Marks the arc's parent achieved.
    pub fn fire_in_place(&mut self, arc: ArcId) -> Result<(), GraphError> {
        if arc.0 as usize >= self.base.arcs.len() {
            return Err(GraphError::DanglingRef(format!("arc {arc:?}")));
        }
        let a = self.base.arc(arc);
        let parent = a.parent;
        if self.pending[arc.0 as usize] != 0 || self.is_achieved(parent) || self.rejected.contains(&arc) {
            return Err(GraphError::InfeasibleFire(arc));
        }
        self.work.arc_evaluations += 1;
        self.mark(parent);
        Ok(())
    }

    /// Records that `arc` could not be executed. It is counted as one arc
    /// evaluation and never offered again in this graph, so every arc costs
    /// at most one evaluation per graph whether it fires or not.
    pub fn reject(&mut self, arc: ArcId) -> Result<(), GraphError> {
        if arc.0 as usize >= self.base.arcs.len() {
            return Err(GraphError::DanglingRef(format!("arc {arc:?}")));
        }
        if self.rejected.insert(arc) {
            self.work.arc_evaluations += 1;
        }
        Ok(())
    }

    pub fn rejected(&self) -> &BTreeSet<ArcId> {
        &self.rejected
    }

    pub fn fire(&self, arc: ArcId) -> Result<Self, GraphError> {
        let mut next = self.clone();
        next.fire_in_place(arc)?;
        Ok(next)
    }

    fn mark(&mut self, n: NodeId) {
        self.base.nodes[n.0 as usize].achieved = true;
        self.work.node_visits += 1;
        for &a in &self.feeds[n.0 as usize] {
            let p = &mut self.pending[a.0 as usize];
            *p -= 1;
            if *p == 0 {
                self.enabled.insert(a);
            }
        }
    }

    /// True iff some success terminal is achieved.
    pub fn is_solved(&self) -> bool {
        self.base
            .nodes
            .iter()
            .any(|n| n.kind == NodeKind::SuccessTerminal && n.achieved)
    }

    /// True iff some failure terminal is achieved.
    pub fn hit_failure(&self) -> bool {
        self.base
            .nodes
            .iter()
            .any(|n| n.kind == NodeKind::FailureTerminal && n.achieved)
    }

    pub fn achieved_labels(&self) -> Vec<&str> {
        self.base
            .nodes
            .iter()
            .filter(|n| n.achieved)
            .map(|n| n.label.as_str())
            .collect()
    }

    /// Hash of the graph structure, achievement flags and bound snapshot.
    pub fn structural_hash(&self) -> u64 {
        let text = serde_json::to_string(&(&self.base, self.root, &self.binding, &self.augmented_arcs))
            .expect("graph serializes");
        let mut h = DefaultHasher::new();
        text.hash(&mut h);
        h.finish()
    }
}

/// Why the network moved on from a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionReason {
    /// The graph ended in a failure terminal.
    FailureTerminal,
    /// No feasible transition could be executed.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub from: usize,
    pub reason: TransitionReason,
}

/// Ordered augmented graphs linked by transitions; its length is the depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNetwork {
    graphs: Vec<AugmentedGraph>,
    transitions: Vec<Transition>,
    depth_limit: usize,
}

impl GraphNetwork {
    pub fn new(template: &GraphTemplate, snapshot: WorkspaceSnapshot, depth_limit: usize) -> Result<Self, GraphError> {
        if depth_limit == 0 {
            return Err(GraphError::Invalid("depth limit must be positive".into()));
        }
        let first = AugmentedGraph::from_template(template, snapshot)?;
        Ok(GraphNetwork {
            graphs: vec![first],
            transitions: Vec::new(),
            depth_limit,
        })
    }

    pub fn depth(&self) -> usize {
        self.graphs.len()
    }

    pub fn depth_limit(&self) -> usize {
        self.depth_limit
    }

    pub fn graphs(&self) -> &[AugmentedGraph] {
        &self.graphs
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn active(&self) -> &AugmentedGraph {
        self.graphs.last().expect("network is never empty")
    }

    pub fn active_mut(&mut self) -> &mut AugmentedGraph {
        self.graphs.last_mut().expect("network is never empty")
    }

    /// Appends a fresh augmented graph bound to `snapshot`.
    pub fn expand_in_place(
        &mut self,
        snapshot: WorkspaceSnapshot,
        template: &GraphTemplate,
        reason: TransitionReason,
    ) -> Result<(), GraphError> {
        if self.active().is_solved() {
            return Err(GraphError::AlreadySolved);
        }
        if self.graphs.len() >= self.depth_limit {
            return Err(GraphError::DepthLimitReached(self.depth_limit));
        }
        let next = AugmentedGraph::from_template(template, snapshot)?;
        self.transitions.push(Transition {
            from: self.graphs.len() - 1,
            reason,
        });
        self.graphs.push(next);
        Ok(())
    }

    pub fn expand(
        &self,
        snapshot: WorkspaceSnapshot,
        template: &GraphTemplate,
        reason: TransitionReason,
    ) -> Result<Self, GraphError> {
        let mut next = self.clone();
        next.expand_in_place(snapshot, template, reason)?;
        Ok(next)
    }

    /// One-based index of the first solved graph.
    pub fn solved_at_depth(&self) -> Option<usize> {
        self.graphs.iter().position(|g| g.is_solved()).map(|i| i + 1)
    }

    pub fn work(&self) -> WorkCounter {
        let mut w = WorkCounter::default();
        for g in &self.graphs {
            w.add(&g.work());
        }
        w
    }

    /// Per-label achievement map of the active graph; handy for reports.
    pub fn active_state(&self) -> BTreeMap<String, bool> {
        self.active()
            .graph()
            .nodes()
            .iter()
            .map(|n| (n.label.clone(), n.achieved))
            .collect()
    }
}
