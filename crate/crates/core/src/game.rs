//! Game graph, strategies, value vectors and structural predicates.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Index;

use itertools::Either;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsgError};
use crate::scalar::Scalar;

/// Dense node index inside one game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Max,
    Min,
    Random,
    Sink,
}

impl NodeKind {
    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Max => "max",
            NodeKind::Min => "min",
            NodeKind::Random => "ran",
            NodeKind::Sink => "sink",
        }
    }
}

/// One node record. Sinks carry their (self-loop) arc list explicitly so that
/// malformed inputs can be represented and reported by [`validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Node<S> {
    Max(Vec<NodeId>),
    Min(Vec<NodeId>),
    Random(Vec<(NodeId, S)>),
    Sink { value: S, arcs: Vec<NodeId> },
}

impl<S> Node<S> {
    pub fn kind(&self) -> NodeKind {
        match self {
            Node::Max(_) => NodeKind::Max,
            Node::Min(_) => NodeKind::Min,
            Node::Random(_) => NodeKind::Random,
            Node::Sink { .. } => NodeKind::Sink,
        }
    }
}

/// A simple stochastic game.
#[derive(Clone, Debug, PartialEq)]
pub struct Ssg<S> {
    nodes: Vec<Node<S>>,
    labels: Vec<String>,
}

impl<S: Scalar> Ssg<S> {
    /// Builds a game without validating it. Missing labels default to the index.
    pub fn from_parts(nodes: Vec<Node<S>>, mut labels: Vec<String>) -> Self {
        for i in labels.len()..nodes.len() {
            labels.push(format!("n{i}"));
        }
        labels.truncate(nodes.len());
        Ssg { nodes, labels }
    }

    /// Builds and validates a game.
    pub fn new(nodes: Vec<Node<S>>, labels: Vec<String>) -> Result<Self> {
        let game = Self::from_parts(nodes, labels);
        let violations = validate(&game);
        if let Some(v) = violations.first() {
            return Err(SsgError::InvalidGame(v.to_string()));
        }
        Ok(game)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Node<S>] {
        &self.nodes
    }

    pub fn node(&self, x: NodeId) -> &Node<S> {
        &self.nodes[x.0]
    }

    pub fn kind(&self, x: NodeId) -> NodeKind {
        self.nodes[x.0].kind()
    }

    pub fn label(&self, x: NodeId) -> &str {
        &self.labels[x.0]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn ids(&self) -> impl Iterator<Item = NodeId> {
        (0..self.nodes.len()).map(NodeId)
    }

    pub fn successors(&self, x: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        match &self.nodes[x.0] {
            Node::Max(s) | Node::Min(s) | Node::Sink { arcs: s, .. } => Either::Left(s.iter().copied()),
            Node::Random(d) => Either::Right(d.iter().map(|(y, _)| *y)),
        }
    }

    pub fn out_degree(&self, x: NodeId) -> usize {
        match &self.nodes[x.0] {
            Node::Max(s) | Node::Min(s) | Node::Sink { arcs: s, .. } => s.len(),
            Node::Random(d) => d.len(),
        }
    }

    pub fn nodes_of(&self, kind: NodeKind) -> Vec<NodeId> {
        self.ids().filter(|&x| self.kind(x) == kind).collect()
    }

    pub fn max_nodes(&self) -> Vec<NodeId> {
        self.nodes_of(NodeKind::Max)
    }

    pub fn min_nodes(&self) -> Vec<NodeId> {
        self.nodes_of(NodeKind::Min)
    }

    /// Random nodes in index order; position `i-1` is the random node `r_i`.
    pub fn random_nodes(&self) -> Vec<NodeId> {
        self.nodes_of(NodeKind::Random)
    }

    pub fn sinks(&self) -> Vec<NodeId> {
        self.nodes_of(NodeKind::Sink)
    }

    pub fn sink_value(&self, x: NodeId) -> Option<&S> {
        match &self.nodes[x.0] {
            Node::Sink { value, .. } => Some(value),
            _ => None,
        }
    }

    pub fn is_player(&self, x: NodeId) -> bool {
        matches!(self.kind(x), NodeKind::Max | NodeKind::Min)
    }

    pub fn find(&self, label: &str) -> Option<NodeId> {
        self.labels.iter().position(|l| l == label).map(NodeId)
    }

    pub fn predecessors(&self) -> Vec<Vec<NodeId>> {
        let mut pred = vec![Vec::new(); self.len()];
        for x in self.ids() {
            for y in self.successors(x) {
                if y.0 < self.len() {
                    pred[y.0].push(x);
                }
            }
        }
        pred
    }

    /// Same game over another scalar type.
    pub fn map_scalar<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Ssg<T> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| match n {
                Node::Max(s) => Node::Max(s.clone()),
                Node::Min(s) => Node::Min(s.clone()),
                Node::Random(d) => Node::Random(d.iter().map(|(y, p)| (*y, f(p))).collect()),
                Node::Sink { value, arcs } => Node::Sink { value: f(value), arcs: arcs.clone() },
            })
            .collect();
        Ssg { nodes, labels: self.labels.clone() }
    }

    /// Number of MAX strategies, saturating.
    pub fn max_strategy_count(&self) -> u128 {
        self.strategy_count(NodeKind::Max)
    }

    pub fn min_strategy_count(&self) -> u128 {
        self.strategy_count(NodeKind::Min)
    }

    fn strategy_count(&self, kind: NodeKind) -> u128 {
        self.nodes_of(kind)
            .into_iter()
            .fold(1u128, |acc, x| acc.saturating_mul(self.out_degree(x) as u128))
    }
}

/// Incremental construction with index-addressed successors.
#[derive(Debug, Default)]
pub struct SsgBuilder<S> {
    nodes: Vec<Node<S>>,
    labels: Vec<String>,
}

impl<S: Scalar> SsgBuilder<S> {
    pub fn new() -> Self {
        SsgBuilder { nodes: Vec::new(), labels: Vec::new() }
    }

    fn push(&mut self, label: &str, node: Node<S>) -> NodeId {
        self.nodes.push(node);
        self.labels.push(label.to_string());
        NodeId(self.nodes.len() - 1)
    }

    pub fn max(&mut self, label: &str, succ: impl IntoIterator<Item = usize>) -> NodeId {
        self.push(label, Node::Max(succ.into_iter().map(NodeId).collect()))
    }

    pub fn min(&mut self, label: &str, succ: impl IntoIterator<Item = usize>) -> NodeId {
        self.push(label, Node::Min(succ.into_iter().map(NodeId).collect()))
    }

    pub fn random(&mut self, label: &str, dist: impl IntoIterator<Item = (usize, S)>) -> NodeId {
        self.push(label, Node::Random(dist.into_iter().map(|(y, p)| (NodeId(y), p)).collect()))
    }

    pub fn sink(&mut self, label: &str, value: S) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.push(label, Node::Sink { value, arcs: vec![id] })
    }

    pub fn build_unchecked(self) -> Ssg<S> {
        Ssg::from_parts(self.nodes, self.labels)
    }

    pub fn build(self) -> Result<Ssg<S>> {
        Ssg::new(self.nodes, self.labels)
    }
}

/// Stationary pure strategy for one player: owned node -> chosen successor.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Strategy {
    choice: BTreeMap<NodeId, NodeId>,
}

impl Strategy {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every node of `kind` plays its first listed successor.
    pub fn first_choice<S: Scalar>(game: &Ssg<S>, kind: NodeKind) -> Self {
        let choice = game
            .nodes_of(kind)
            .into_iter()
            .filter_map(|x| game.successors(x).next().map(|y| (x, y)))
            .collect();
        Strategy { choice }
    }

    pub fn get(&self, x: NodeId) -> Option<NodeId> {
        self.choice.get(&x).copied()
    }

    pub fn set(&mut self, x: NodeId, y: NodeId) {
        self.choice.insert(x, y);
    }

    pub fn with(mut self, x: NodeId, y: NodeId) -> Self {
        self.set(x, y);
        self
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.choice.iter().map(|(x, y)| (*x, *y))
    }

    pub fn len(&self) -> usize {
        self.choice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.choice.is_empty()
    }

    /// Checks that the strategy is defined exactly on nodes of `kind` and follows arcs.
    pub fn check<S: Scalar>(&self, game: &Ssg<S>, kind: NodeKind) -> Result<()> {
        for x in game.nodes_of(kind) {
            let y = self.get(x).ok_or(SsgError::IncompleteStrategy(x))?;
            if !game.successors(x).any(|s| s == y) {
                return Err(SsgError::InvalidGame(format!("{y} is not a successor of {x}")));
            }
        }
        for (x, _) in self.iter() {
            if x.0 >= game.len() || game.kind(x) != kind {
                return Err(SsgError::InvalidGame(format!(
                    "strategy assigns {x}, which is not a {} node",
                    kind.name()
                )));
            }
        }
        Ok(())
    }

    /// Human-readable `label->label` list.
    pub fn describe<S: Scalar>(&self, game: &Ssg<S>) -> String {
        self.iter()
            .map(|(x, y)| format!("{}->{}", game.label(x), game.label(y)))
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Enumerates all strategies of `kind` in odometer order.
    pub fn enumerate<S: Scalar>(game: &Ssg<S>, kind: NodeKind) -> Vec<Strategy> {
        let owned = game.nodes_of(kind);
        let succ: Vec<Vec<NodeId>> = owned.iter().map(|&x| game.successors(x).collect()).collect();
        let mut out = Vec::new();
        let mut digits = vec![0usize; owned.len()];
        loop {
            let mut s = Strategy::new();
            for (i, &x) in owned.iter().enumerate() {
                s.set(x, succ[i][digits[i]]);
            }
            out.push(s);
            let mut pos = 0;
            loop {
                if pos == owned.len() {
                    return out;
                }
                digits[pos] += 1;
                if digits[pos] < succ[pos].len() {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
        }
    }
}

impl FromIterator<(NodeId, NodeId)> for Strategy {
    fn from_iter<T: IntoIterator<Item = (NodeId, NodeId)>>(iter: T) -> Self {
        Strategy { choice: iter.into_iter().collect() }
    }
}

/// One value per node of the game it was computed for.
#[derive(Clone, Debug, PartialEq)]
pub struct Values<S>(pub Vec<S>);

impl<S: Scalar> Values<S> {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[S] {
        &self.0
    }

    /// Componentwise `self <= other`.
    pub fn dominated_by(&self, other: &Self) -> bool {
        self.0.len() == other.0.len()
            && self.0.iter().zip(&other.0).all(|(a, b)| !b.strictly_less(a))
    }

    /// `self <= other` with strict inequality somewhere.
    pub fn strictly_improved_by(&self, other: &Self) -> bool {
        self.dominated_by(other) && self.0.iter().zip(&other.0).any(|(a, b)| a.strictly_less(b))
    }
}

impl<S> Index<NodeId> for Values<S> {
    type Output = S;
    fn index(&self, x: NodeId) -> &S {
        &self.0[x.0]
    }
}

/// Which structural rule a node breaks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rule {
    NoSuccessor,
    SuccessorOutOfRange,
    SinkArcs,
    NonPositiveProbability,
    DistributionSum,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub node: NodeId,
    pub rule: Rule,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "node {}: {}", self.node.0, self.message)
    }
}

/// Lists every structural violation; empty iff the game is well formed.
pub fn validate<S: Scalar>(game: &Ssg<S>) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = game.len();
    let mut report = |node: NodeId, rule: Rule, message: String| {
        out.push(Violation { node, rule, message });
    };
    for x in game.ids() {
        for y in game.successors(x) {
            if y.0 >= n {
                report(x, Rule::SuccessorOutOfRange, format!("successor {} out of range", y.0));
            }
        }
        match game.node(x) {
            Node::Max(s) | Node::Min(s) if s.is_empty() => {
                report(x, Rule::NoSuccessor, "no outgoing arc".into())
            }
            Node::Random(d) => {
                if d.is_empty() {
                    report(x, Rule::NoSuccessor, "no outgoing arc".into());
                    continue;
                }
                for (y, p) in d {
                    if !p.is_positive() {
                        report(x, Rule::NonPositiveProbability, format!("probability {p} towards {} is not positive", y.0));
                    }
                }
                let sum = d.iter().fold(S::zero(), |acc, (_, p)| acc + p.clone());
                if !sum.same_value(&S::one()) {
                    report(x, Rule::DistributionSum, format!("distribution sums to {sum}"));
                }
            }
            Node::Sink { arcs, .. } if arcs.as_slice() != [x] => report(
                x,
                Rule::SinkArcs,
                format!("sink must have exactly one self-loop, has {} arcs", arcs.len()),
            ),
            _ => {}
        }
    }
    out
}

/// Sinks with a negative value. Such games are accepted but nonstandard: plays
/// that are never absorbed pay 0, which MIN may then prefer.
pub fn nonstandard_sinks<S: Scalar>(game: &Ssg<S>) -> Vec<NodeId> {
    game.sinks().into_iter().filter(|&s| game.sink_value(s).is_some_and(|v| v.is_negative())).collect()
}

pub fn is_max_binary<S: Scalar>(game: &Ssg<S>) -> bool {
    game.max_nodes().into_iter().all(|x| game.out_degree(x) == 2)
}

/// Greatest set of non-sink nodes closed under `stays`, computed by peeling.
fn closed_set<S: Scalar>(game: &Ssg<S>, stays: impl Fn(NodeId, &[bool]) -> bool) -> Vec<bool> {
    let mut inside: Vec<bool> = game.ids().map(|x| game.kind(x) != NodeKind::Sink).collect();
    let mut changed = true;
    while changed {
        changed = false;
        for x in game.ids() {
            if inside[x.0] && !stays(x, &inside) {
                inside[x.0] = false;
                changed = true;
            }
        }
    }
    inside
}

fn some_inside<S: Scalar>(game: &Ssg<S>, x: NodeId, inside: &[bool]) -> bool {
    game.successors(x).any(|y| inside[y.0])
}

fn all_inside<S: Scalar>(game: &Ssg<S>, x: NodeId, inside: &[bool]) -> bool {
    game.successors(x).all(|y| inside[y.0])
}

/// True iff every play consistent with `sigma` reaches a sink almost surely,
/// whatever MIN does.
pub fn check_stopping<S: Scalar>(game: &Ssg<S>, sigma: &Strategy) -> bool {
    let trap = closed_set(game, |x, inside| match game.kind(x) {
        NodeKind::Max => sigma.get(x).is_some_and(|y| inside[y.0]),
        NodeKind::Min => some_inside(game, x, inside),
        NodeKind::Random => all_inside(game, x, inside),
        NodeKind::Sink => false,
    });
    !trap.iter().any(|&b| b)
}

/// True iff every strategy pair is stopping.
pub fn check_globally_stopping<S: Scalar>(game: &Ssg<S>) -> bool {
    let trap = closed_set(game, |x, inside| match game.kind(x) {
        NodeKind::Max | NodeKind::Min => some_inside(game, x, inside),
        NodeKind::Random => all_inside(game, x, inside),
        NodeKind::Sink => false,
    });
    !trap.iter().any(|&b| b)
}

/// Deterministic attractor of `target` for MAX over MAX/MIN nodes: random
/// nodes and sinks only belong to it when they are targets. Returns membership
/// and, for MAX nodes added by the attractor, the successor that leads inward.
pub fn max_attractor<S: Scalar>(game: &Ssg<S>, target: &[bool]) -> (Vec<bool>, Strategy) {
    let mut inside = target.to_vec();
    let mut moves = Strategy::new();
    let mut changed = true;
    while changed {
        changed = false;
        for x in game.ids() {
            if inside[x.0] {
                continue;
            }
            match game.kind(x) {
                NodeKind::Max => {
                    if let Some(y) = game.successors(x).find(|y| inside[y.0]) {
                        inside[x.0] = true;
                        moves.set(x, y);
                        changed = true;
                    }
                }
                NodeKind::Min => {
                    if all_inside(game, x, &inside) {
                        inside[x.0] = true;
                        changed = true;
                    }
                }
                _ => {}
            }
        }
    }
    (inside, moves)
}

/// Almost-sure reachability of the sinks for MAX against MIN. Returns the
/// winning membership and a MAX strategy that is stopping from every winning
/// node (MAX nodes outside the region keep their first successor).
pub fn stopping_region<S: Scalar>(game: &Ssg<S>) -> (Vec<bool>, Strategy) {
    let n = game.len();
    let mut winning = vec![true; n];
    loop {
        // positive attractor of the sinks, staying inside the current region
        let mut reach: Vec<bool> = game.ids().map(|x| winning[x.0] && game.kind(x) == NodeKind::Sink).collect();
        let mut moves = Strategy::first_choice(game, NodeKind::Max);
        let mut changed = true;
        while changed {
            changed = false;
            for x in game.ids() {
                if reach[x.0] || !winning[x.0] {
                    continue;
                }
                let joins = match game.kind(x) {
                    NodeKind::Max => match game.successors(x).find(|y| reach[y.0]) {
                        Some(y) => {
                            moves.set(x, y);
                            true
                        }
                        None => false,
                    },
                    NodeKind::Min => all_inside(game, x, &reach),
                    NodeKind::Random => some_inside(game, x, &reach),
                    NodeKind::Sink => false,
                };
                if joins {
                    reach[x.0] = true;
                    changed = true;
                }
            }
        }
        // nodes from which MIN or chance can push the play out of `reach`
        let mut losing: Vec<bool> = reach.iter().map(|r| !r).collect();
        let mut changed = true;
        while changed {
            changed = false;
            for x in game.ids() {
                if losing[x.0] {
                    continue;
                }
                let leaks = match game.kind(x) {
                    NodeKind::Max => all_inside(game, x, &losing),
                    NodeKind::Min | NodeKind::Random => some_inside(game, x, &losing),
                    NodeKind::Sink => false,
                };
                if leaks {
                    losing[x.0] = true;
                    changed = true;
                }
            }
        }
        let next: Vec<bool> = losing.iter().map(|l| !l).collect();
        if next == winning {
            return (winning, moves);
        }
        winning = next;
    }
}

/// Outcome of the canonical-form test.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CanonicalForm {
    /// Canonical; carries a stopping MAX strategy.
    Canonical(Strategy),
    /// A MAX/MIN node with an arc into a sink.
    SinkArc { from: NodeId, to: NodeId },
    /// Nodes from which MIN (with chance) can avoid the sinks forever.
    Avoiding(Vec<NodeId>),
}

impl CanonicalForm {
    pub fn is_canonical(&self) -> bool {
        matches!(self, CanonicalForm::Canonical(_))
    }
}

/// Only random nodes point to sinks, and MAX has a stopping strategy.
pub fn check_canonical_form<S: Scalar>(game: &Ssg<S>) -> CanonicalForm {
    for x in game.ids().filter(|&x| game.is_player(x)) {
        if let Some(to) = game.successors(x).find(|&y| game.kind(y) == NodeKind::Sink) {
            return CanonicalForm::SinkArc { from: x, to };
        }
    }
    let (winning, sigma) = stopping_region(game);
    let losing: Vec<NodeId> = game.ids().filter(|x| !winning[x.0]).collect();
    if !losing.is_empty() {
        return CanonicalForm::Avoiding(losing);
    }
    debug_assert!(check_stopping(game, &sigma));
    CanonicalForm::Canonical(sigma)
}

/// The game from the worked example: one MAX node `M`, one MIN node `m`,
/// random nodes `r1`, `r2`, `r3` and sinks of value 0, 1/2 and 1.
pub fn fig2_game<S: Scalar>() -> Ssg<S> {
    let p = S::from_ratio;
    let mut b = SsgBuilder::new();
    b.max("M", [2, 3]);
    b.min("m", [0, 4]);
    b.random("r1", [(5, p(9, 100)), (7, p(1, 100)), (1, p(9, 10))]);
    b.random("r2", [(6, S::one())]);
    b.random("r3", [(5, p(1, 100)), (7, p(9, 100)), (1, p(9, 10))]);
    b.sink("0", S::zero());
    b.sink("1/2", p(1, 2));
    b.sink("1", S::one());
    b.build_unchecked()
}
