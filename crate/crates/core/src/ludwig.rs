//! Strategy iteration for MAX driven by a node order fixed before the run,
//! in iterative and recursive form, plus the switch-everything baseline.

use std::collections::BTreeSet;
use std::fmt;

use rand::seq::SliceRandom;

use crate::error::{Result, SsgError};
use crate::game::{check_globally_stopping, check_stopping, is_max_binary, Node, NodeId, NodeKind, Ssg, Strategy, Values};
use crate::orders::seeded_rng;
use crate::scalar::Scalar;
use crate::valuation::{best_response_min, best_successor, switch_with_values, switchable_from_values};

/// A permutation of the MAX nodes.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NodeOrder(Vec<NodeId>);

impl NodeOrder {
    pub fn new<S: Scalar>(game: &Ssg<S>, sequence: Vec<NodeId>) -> Result<Self> {
        let mut expected = game.max_nodes();
        let mut got = sequence.clone();
        expected.sort();
        got.sort();
        if expected != got {
            return Err(SsgError::InvalidOrder(format!("node order must list every MAX node once, got {sequence:?}")));
        }
        Ok(NodeOrder(sequence))
    }

    /// MAX nodes in id order.
    pub fn natural<S: Scalar>(game: &Ssg<S>) -> Self {
        NodeOrder(game.max_nodes())
    }

    pub fn sequence(&self) -> &[NodeId] {
        &self.0
    }

    pub fn parse<S: Scalar>(game: &Ssg<S>, text: &str) -> Result<Self> {
        let inner = text
            .trim()
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| SsgError::InvalidOrder(format!("expected [id,...], got {text:?}")))?;
        let mut seq = Vec::new();
        for part in inner.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let id: usize = part.parse().map_err(|_| SsgError::InvalidOrder(format!("bad node id {part:?}")))?;
            seq.push(NodeId(id));
        }
        Self::new(game, seq)
    }
}

impl fmt::Display for NodeOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.0.iter().map(|x| x.0.to_string()).collect();
        write!(f, "[{}]", items.join(","))
    }
}

/// Uniform shuffle of `max_nodes`.
pub fn sample_node_order(max_nodes: &[NodeId], seed: u64) -> NodeOrder {
    let mut seq = max_nodes.to_vec();
    seq.shuffle(&mut seeded_rng(seed));
    NodeOrder(seq)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwitchStep<S> {
    /// Nodes switched in this step (one for Bland's rule).
    pub switched: Vec<NodeId>,
    /// `Val_{sigma,*}` of the strategy before the step.
    pub values: Values<S>,
    /// Strategy after the step.
    pub strategy: Strategy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwitchTrace<S> {
    pub steps: Vec<SwitchStep<S>>,
    pub final_values: Values<S>,
    pub seed: Option<u64>,
    pub order_used: Option<NodeOrder>,
}

impl<S: Scalar> SwitchTrace<S> {
    pub fn switch_count(&self) -> usize {
        self.steps.iter().map(|s| s.switched.len()).sum()
    }

    pub fn switched_sequence(&self) -> Vec<NodeId> {
        self.steps.iter().flat_map(|s| s.switched.iter().copied()).collect()
    }

    /// Value vectors in order: before each step, then the final one.
    pub fn value_chain(&self) -> impl Iterator<Item = &Values<S>> {
        self.steps.iter().map(|s| &s.values).chain(std::iter::once(&self.final_values))
    }
}

fn require_ludwig_game<S: Scalar>(game: &Ssg<S>) -> Result<()> {
    if !is_max_binary(game) {
        return Err(SsgError::NotMaxBinary);
    }
    if !check_globally_stopping(game) {
        return Err(SsgError::NotStopping("game is not globally stopping".into()));
    }
    Ok(())
}

/// The game where every node of `frozen` becomes a random node moving to
/// `sigma(x)` with probability 1.
pub fn freeze<S: Scalar>(game: &Ssg<S>, sigma: &Strategy, frozen: &BTreeSet<NodeId>) -> Result<Ssg<S>> {
    let mut nodes = game.nodes().to_vec();
    for &x in frozen {
        if game.kind(x) != NodeKind::Max {
            return Err(SsgError::InvalidParams(format!("frozen node {x} is not a MAX node")));
        }
        let y = sigma.get(x).ok_or(SsgError::IncompleteStrategy(x))?;
        nodes[x.0] = Node::Random(vec![(y, S::one())]);
    }
    Ok(Ssg::from_parts(nodes, game.labels().to_vec()))
}

fn bland_loop<S: Scalar>(
    game: &Ssg<S>,
    sigma0: &Strategy,
    order: &[NodeId],
    check_each: bool,
) -> Result<(Strategy, Vec<SwitchStep<S>>, Values<S>)> {
    let mut sigma = sigma0.clone();
    let mut steps = Vec::new();
    let cap = 1u128.checked_shl(order.len() as u32).unwrap_or(u128::MAX);
    loop {
        if check_each && !check_stopping(game, &sigma) {
            return Err(SsgError::NotStopping(format!("strategy {} is not stopping", sigma.describe(game))));
        }
        let (_, values) = best_response_min(game, &sigma)?;
        let switchable = switchable_from_values(game, &sigma, &values)?;
        let Some(&x) = order.iter().find(|x| switchable.contains(x)) else {
            return Ok((sigma, steps, values));
        };
        if steps.len() as u128 >= cap {
            return Err(SsgError::Invariant("more switches than strategies".into()));
        }
        sigma = switch_with_values(game, &sigma, x, &values)?;
        steps.push(SwitchStep { switched: vec![x], values, strategy: sigma.clone() });
    }
}

/// Bland's rule: repeatedly switch the first switchable node of `theta`.
pub fn solve_bland<S: Scalar>(game: &Ssg<S>, sigma0: &Strategy, theta: &NodeOrder) -> Result<(Strategy, SwitchTrace<S>)> {
    require_ludwig_game(game)?;
    sigma0.check(game, NodeKind::Max)?;
    let (sigma, steps, final_values) = bland_loop(game, sigma0, theta.sequence(), false)?;
    Ok((sigma, SwitchTrace { steps, final_values, seed: None, order_used: Some(theta.clone()) }))
}

/// Bland's rule under the weaker requirement that only `sigma0` be stopping.
/// Every intermediate strategy is checked and the run fails if one is not.
pub fn solve_bland_relaxed<S: Scalar>(game: &Ssg<S>, sigma0: &Strategy, theta: &NodeOrder) -> Result<(Strategy, SwitchTrace<S>)> {
    if !is_max_binary(game) {
        return Err(SsgError::NotMaxBinary);
    }
    sigma0.check(game, NodeKind::Max)?;
    let (sigma, steps, final_values) = bland_loop(game, sigma0, theta.sequence(), true)?;
    Ok((sigma, SwitchTrace { steps, final_values, seed: None, order_used: Some(theta.clone()) }))
}

/// Best strategy agreeing with `sigma0` on `frozen`, found by Bland's rule on
/// the free nodes of the frozen game.
pub fn opt_partial<S: Scalar>(
    game: &Ssg<S>,
    sigma0: &Strategy,
    frozen: &BTreeSet<NodeId>,
    theta: &NodeOrder,
) -> Result<(Strategy, SwitchTrace<S>)> {
    require_ludwig_game(game)?;
    sigma0.check(game, NodeKind::Max)?;
    let reduced = freeze(game, sigma0, frozen)?;
    let free: Vec<NodeId> = theta.sequence().iter().copied().filter(|x| !frozen.contains(x)).collect();
    let (sigma, steps, final_values) = bland_loop(&reduced, sigma0, &free, false)?;
    Ok((sigma, SwitchTrace { steps, final_values, seed: None, order_used: Some(theta.clone()) }))
}

/// Recursive form of [`opt_partial`]: fix the last free node of `theta`,
/// solve, and switch it only if that leaves something to improve.
pub fn opt_partial_recursive<S: Scalar>(
    game: &Ssg<S>,
    sigma0: &Strategy,
    frozen: &BTreeSet<NodeId>,
    theta: &NodeOrder,
) -> Result<(Strategy, SwitchTrace<S>)> {
    require_ludwig_game(game)?;
    sigma0.check(game, NodeKind::Max)?;
    let mut fixed = frozen.clone();
    let mut steps = Vec::new();
    let sigma = recurse(game, sigma0.clone(), &mut fixed, theta.sequence(), &mut steps)?;
    let (_, final_values) = best_response_min(game, &sigma)?;
    Ok((sigma, SwitchTrace { steps, final_values, seed: None, order_used: Some(theta.clone()) }))
}

fn recurse<S: Scalar>(
    game: &Ssg<S>,
    sigma0: Strategy,
    fixed: &mut BTreeSet<NodeId>,
    theta: &[NodeId],
    steps: &mut Vec<SwitchStep<S>>,
) -> Result<Strategy> {
    let Some(&v0) = theta.iter().rev().find(|x| !fixed.contains(x)) else {
        return Ok(sigma0);
    };
    fixed.insert(v0);
    let sigma1 = recurse(game, sigma0, fixed, theta, steps);
    fixed.remove(&v0);
    let sigma1 = sigma1?;
    // frozen nodes follow sigma1, so these are also the frozen game's values
    let (_, values) = best_response_min(game, &sigma1)?;
    let switchable = switchable_from_values(game, &sigma1, &values)?;
    let mut open = switchable.iter().filter(|x| !fixed.contains(x));
    match open.next() {
        None => Ok(sigma1),
        Some(&x) if x == v0 && open.next().is_none() => {
            let sigma2 = switch_with_values(game, &sigma1, v0, &values)?;
            steps.push(SwitchStep { switched: vec![v0], values, strategy: sigma2.clone() });
            fixed.insert(v0);
            let result = recurse(game, sigma2, fixed, theta, steps);
            fixed.remove(&v0);
            result
        }
        Some(_) => Err(SsgError::Invariant(format!(
            "recursive call left switchable nodes other than {v0}: {switchable:?}"
        ))),
    }
}

/// Switches every switchable node to its best successor at once.
pub fn solve_hoffman_karp<S: Scalar>(game: &Ssg<S>, sigma0: &Strategy) -> Result<(Strategy, SwitchTrace<S>)> {
    if !check_globally_stopping(game) {
        return Err(SsgError::NotStopping("game is not globally stopping".into()));
    }
    sigma0.check(game, NodeKind::Max)?;
    let mut sigma = sigma0.clone();
    let mut steps = Vec::new();
    let cap = game.max_strategy_count();
    loop {
        let (_, values) = best_response_min(game, &sigma)?;
        let switchable = switchable_from_values(game, &sigma, &values)?;
        if switchable.is_empty() {
            return Ok((sigma, SwitchTrace { steps, final_values: values, seed: None, order_used: None }));
        }
        if steps.len() as u128 >= cap {
            return Err(SsgError::Invariant("more rounds than strategies".into()));
        }
        for &x in &switchable {
            sigma.set(x, best_successor(game, x, &values, true));
        }
        steps.push(SwitchStep { switched: switchable.into_iter().collect(), values, strategy: sigma.clone() });
    }
}
