//! Games with control nodes: for an order on the random nodes, every random
//! node `r_i` gets a MIN control node `i` in front of it, and control nodes
//! may defer to one another along the order.
//!
//! Solving such a game splits in two parts. The MAX and MIN nodes of the base
//! game play forcing strategies computed by attractors over the control nodes
//! ranked by the order. What is left is a MIN-only process over the control
//! nodes, solved exactly by policy iteration.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Result, SsgError};
use crate::game::{check_canonical_form, CanonicalForm, Node, NodeId, NodeKind, Ssg, Strategy, Values};
use crate::orders::{extends, PretotalOrder, TotalOrder};
use crate::scalar::Scalar;
use crate::valuation::LinearSystem;

/// Position of every random node as a control index (1-based).
fn control_index<S: Scalar>(game: &Ssg<S>) -> (Vec<NodeId>, Vec<Option<usize>>) {
    let ran = game.random_nodes();
    let mut index = vec![None; game.len()];
    for (pos, r) in ran.iter().enumerate() {
        index[r.0] = Some(pos + 1);
    }
    (ran, index)
}

/// A derived game `G[p]`. Base nodes keep their ids; control `i` is node
/// `base_len + i - 1`.
#[derive(Clone, Debug)]
pub struct ControlGame<S> {
    pub game: Ssg<S>,
    pub base_len: usize,
    pub k: usize,
    pub arcs: PretotalOrder,
}

impl<S: Scalar> ControlGame<S> {
    pub fn control_node(&self, i: usize) -> NodeId {
        NodeId(self.base_len + i - 1)
    }

    /// Rewrites a strategy on base nodes so that arcs into `r_i` point to
    /// control `i` instead.
    pub fn lift_strategy(&self, base: &Ssg<S>, strategy: &Strategy) -> Strategy {
        let (_, index) = control_index(base);
        strategy
            .iter()
            .map(|(x, y)| (x, index[y.0].map_or(y, |i| self.control_node(i))))
            .collect()
    }
}

pub fn build_control_game<S: Scalar>(game: &Ssg<S>, p: &PretotalOrder) -> Result<ControlGame<S>> {
    if let CanonicalForm::SinkArc { from, to } = check_canonical_form(game) {
        return Err(SsgError::NotCanonicalForm(format!("arc {from} -> {to} enters a sink")));
    }
    if let CanonicalForm::Avoiding(nodes) = check_canonical_form(game) {
        return Err(SsgError::NotCanonicalForm(format!("MIN can avoid every sink from {nodes:?}")));
    }
    let (ran, index) = control_index(game);
    let k = ran.len();
    if p.k() != k {
        return Err(SsgError::InvalidOrder(format!("order over 1..={} for a game with {k} random nodes", p.k())));
    }
    let n = game.len();
    let redirect = |y: NodeId| index[y.0].map_or(y, |i| NodeId(n + i - 1));
    let mut nodes: Vec<Node<S>> = game
        .nodes()
        .iter()
        .map(|node| match node {
            Node::Max(s) => Node::Max(s.iter().copied().map(redirect).collect()),
            Node::Min(s) => Node::Min(s.iter().copied().map(redirect).collect()),
            Node::Random(d) => Node::Random(d.iter().map(|(y, q)| (redirect(*y), q.clone())).collect()),
            sink => sink.clone(),
        })
        .collect();
    let mut labels = game.labels().to_vec();
    for (pos, r) in ran.iter().enumerate() {
        let i = pos + 1;
        let mut succ = vec![*r];
        succ.extend(p.out_neighbors(i).map(|j| NodeId(n + j - 1)));
        nodes.push(Node::Min(succ));
        labels.push(format!("c{i}"));
    }
    Ok(ControlGame { game: Ssg::from_parts(nodes, labels), base_len: n, k, arcs: p.clone() })
}

/// Forcing strategies for an order, stated on the base game: a choice of
/// `r_i` stands for control `i`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ForcingData {
    pub sigma_t: Strategy,
    pub tau_t: Strategy,
    /// `forcing_set[i - 1]`: MAX and MIN nodes whose forcing play reaches control `i`.
    pub forcing_set: Vec<BTreeSet<NodeId>>,
    /// Control index reached from each MAX or MIN node, `None` elsewhere.
    pub reach: Vec<Option<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Arc {
    Player(NodeId),
    Control(usize),
}

fn player_arcs<S: Scalar>(game: &Ssg<S>, index: &[Option<usize>], x: NodeId) -> Result<Vec<Arc>> {
    game.successors(x)
        .map(|y| match game.kind(y) {
            NodeKind::Random => Ok(Arc::Control(index[y.0].expect("random node has an index"))),
            NodeKind::Sink => Err(SsgError::NotCanonicalForm(format!("arc {x} -> {y} enters a sink"))),
            _ => Ok(Arc::Player(y)),
        })
        .collect()
}

/// Attractor peeling by descending rank in `t`. Higher-ranked attractors are
/// removed from the subgame before the next one is computed; each node's
/// move is fixed when it joins.
pub fn compute_forcing<S: Scalar>(game: &Ssg<S>, t: &TotalOrder) -> Result<ForcingData> {
    let (ran, index) = control_index(game);
    if t.k() != ran.len() {
        return Err(SsgError::InvalidOrder(format!("order {t} for a game with {} random nodes", ran.len())));
    }
    let players: Vec<NodeId> = game.ids().filter(|&x| game.is_player(x)).collect();
    let arcs: Vec<Vec<Arc>> = {
        let mut arcs = vec![Vec::new(); game.len()];
        for &x in &players {
            arcs[x.0] = player_arcs(game, &index, x)?;
        }
        arcs
    };
    let mut reach: Vec<Option<usize>> = vec![None; game.len()];
    let mut sigma_t = Strategy::new();
    let mut tau_t = Strategy::new();
    let mut forcing_set = vec![BTreeSet::new(); t.k()];
    let succ_node = |a: Arc| match a {
        Arc::Player(y) => y,
        Arc::Control(i) => ran[i - 1],
    };

    for rank in (1..=t.k()).rev() {
        let c = t.ascending()[rank - 1];
        // in the subgame: unassigned players and controls of rank <= current
        let in_subgame = |a: Arc, reach: &[Option<usize>]| match a {
            Arc::Player(y) => reach[y.0].map_or(true, |r| r == c),
            Arc::Control(i) => t.rank(i) <= rank,
        };
        let in_target = |a: Arc, reach: &[Option<usize>]| match a {
            Arc::Player(y) => reach[y.0] == Some(c),
            Arc::Control(i) => i == c,
        };
        loop {
            let mut changed = false;
            for &x in &players {
                if reach[x.0].is_some() {
                    continue;
                }
                let choice = if game.kind(x) == NodeKind::Max {
                    arcs[x.0].iter().copied().find(|&a| in_target(a, &reach))
                } else {
                    let sub: Vec<Arc> = arcs[x.0].iter().copied().filter(|&a| in_subgame(a, &reach)).collect();
                    if !sub.is_empty() && sub.iter().all(|&a| in_target(a, &reach)) {
                        Some(sub[0])
                    } else {
                        None
                    }
                };
                if let Some(a) = choice {
                    reach[x.0] = Some(c);
                    forcing_set[c - 1].insert(x);
                    if game.kind(x) == NodeKind::Max {
                        sigma_t.set(x, succ_node(a));
                    } else {
                        tau_t.set(x, succ_node(a));
                    }
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
    }
    if let Some(&x) = players.iter().find(|x| reach[x.0].is_none()) {
        return Err(SsgError::NotCanonicalForm(format!("{x} reaches no control node under forcing play")));
    }
    Ok(ForcingData { sigma_t, tau_t, forcing_set, reach })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    Sink(NodeId),
    Control(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ControlAction {
    Enter,
    Defer(usize),
}

/// The MIN-only process left once forcing strategies are fixed.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapsedMdp<S> {
    pub k: usize,
    /// `enter[i - 1]`: where entering `r_i` leads, duplicates merged.
    pub enter: Vec<Vec<(Target, S)>>,
    /// `defer[i - 1]`: controls `i` may move to, ascending.
    pub defer: Vec<Vec<usize>>,
    pub sink_value: BTreeMap<NodeId, S>,
}

pub fn collapse<S: Scalar>(game: &Ssg<S>, t: &TotalOrder, forcing: &ForcingData) -> Result<CollapsedMdp<S>> {
    collapse_with(game, &t.pairs(), forcing)
}

/// Collapse using the defer arcs of `p`.
pub fn collapse_with<S: Scalar>(game: &Ssg<S>, p: &PretotalOrder, forcing: &ForcingData) -> Result<CollapsedMdp<S>> {
    let (ran, index) = control_index(game);
    let mut enter = Vec::with_capacity(ran.len());
    let mut sink_value = BTreeMap::new();
    for &r in &ran {
        let Node::Random(dist) = game.node(r) else { unreachable!() };
        let mut merged: BTreeMap<Target, S> = BTreeMap::new();
        for (y, q) in dist {
            let target = match game.kind(*y) {
                NodeKind::Sink => {
                    sink_value.insert(*y, game.sink_value(*y).expect("sink").clone());
                    Target::Sink(*y)
                }
                NodeKind::Random => Target::Control(index[y.0].expect("random node has an index")),
                _ => Target::Control(
                    forcing.reach[y.0].ok_or_else(|| SsgError::Invariant(format!("{y} has no forcing target")))?,
                ),
            };
            let entry = merged.entry(target).or_insert_with(S::zero);
            *entry = entry.clone() + q.clone();
        }
        enter.push(merged.into_iter().collect());
    }
    let defer = (1..=ran.len()).map(|i| p.out_neighbors(i).collect()).collect();
    Ok(CollapsedMdp { k: ran.len(), enter, defer, sink_value })
}

impl<S: Scalar> CollapsedMdp<S> {
    fn action_value(&self, i: usize, action: ControlAction, values: &[S]) -> S {
        match action {
            ControlAction::Defer(j) => values[j - 1].clone(),
            ControlAction::Enter => self.enter_value(i, values),
        }
    }

    /// One-step expectation of entering `r_i` given control values.
    pub fn enter_value(&self, i: usize, values: &[S]) -> S {
        self.enter[i - 1].iter().fold(S::zero(), |acc, (target, q)| {
            let v = match target {
                Target::Sink(s) => self.sink_value[s].clone(),
                Target::Control(j) => values[j - 1].clone(),
            };
            acc + q.clone() * v
        })
    }

    fn evaluate(&self, policy: &[ControlAction]) -> Result<Vec<S>> {
        let k = self.k;
        // which states can reach a sink under the policy
        let mut absorbs = vec![false; k];
        loop {
            let mut changed = false;
            for i in 1..=k {
                if absorbs[i - 1] {
                    continue;
                }
                let ok = match policy[i - 1] {
                    ControlAction::Defer(j) => absorbs[j - 1],
                    ControlAction::Enter => self.enter[i - 1].iter().any(|(t, _)| match t {
                        Target::Sink(_) => true,
                        Target::Control(j) => absorbs[j - 1],
                    }),
                };
                if ok {
                    absorbs[i - 1] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if let Some(pos) = absorbs.iter().position(|&a| !a) {
            return Err(SsgError::NonAbsorbing(pos + 1));
        }
        let mut matrix = vec![vec![S::zero(); k]; k];
        let mut rhs = vec![S::zero(); k];
        for i in 0..k {
            matrix[i][i] = S::one();
            match policy[i] {
                ControlAction::Defer(j) => matrix[i][j - 1] = matrix[i][j - 1].clone() - S::one(),
                ControlAction::Enter => {
                    for (target, q) in &self.enter[i] {
                        match target {
                            Target::Sink(s) => rhs[i] = rhs[i].clone() + q.clone() * self.sink_value[s].clone(),
                            Target::Control(j) => matrix[i][j - 1] = matrix[i][j - 1].clone() - q.clone(),
                        }
                    }
                }
            }
        }
        LinearSystem { matrix, rhs }.solve()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollapsedSolution<S> {
    pub values: Vec<S>,
    pub policy: Vec<ControlAction>,
}

/// Minimum expected sink value per control, by policy iteration from the
/// all-enter policy. Ties prefer entering, then the lowest defer target.
pub fn solve_collapsed<S: Scalar>(mdp: &CollapsedMdp<S>) -> Result<CollapsedSolution<S>> {
    let mut policy = vec![ControlAction::Enter; mdp.k];
    // each step strictly lowers the value vector, so no policy repeats
    let mut budget: u128 = (1..=mdp.k).fold(1u128, |acc, i| acc.saturating_mul(mdp.defer[i - 1].len() as u128 + 1));
    loop {
        let values = mdp.evaluate(&policy)?;
        let mut improved = false;
        for i in 1..=mdp.k {
            let current = mdp.action_value(i, policy[i - 1], &values);
            let mut best = (ControlAction::Enter, mdp.enter_value(i, &values));
            for &j in &mdp.defer[i - 1] {
                let v = values[j - 1].clone();
                if v.strictly_less(&best.1) {
                    best = (ControlAction::Defer(j), v);
                }
            }
            if best.1.strictly_less(&current) {
                policy[i - 1] = best.0;
                improved = true;
            }
        }
        if !improved {
            return Ok(CollapsedSolution { values, policy });
        }
        budget = budget.saturating_sub(1);
        if budget == 0 {
            return Err(SsgError::Invariant("control policy iteration did not terminate".into()));
        }
    }
}

/// Values of a derived game together with how they were obtained.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderValuation<S> {
    /// `control[i - 1]`: value of control `i`.
    pub control: Vec<S>,
    /// `ran[i - 1]`: value of `r_i`.
    pub ran: Vec<S>,
    /// Every node of the derived game, base nodes first.
    pub values: Values<S>,
    pub forcing: ForcingData,
    pub policy: Vec<ControlAction>,
}

fn expand<S: Scalar>(game: &Ssg<S>, mdp: &CollapsedMdp<S>, forcing: ForcingData, solution: CollapsedSolution<S>) -> OrderValuation<S> {
    let (ran_nodes, index) = control_index(game);
    let control = solution.values;
    let ran: Vec<S> = (1..=mdp.k).map(|i| mdp.enter_value(i, &control)).collect();
    let mut values = Vec::with_capacity(game.len() + mdp.k);
    for x in game.ids() {
        values.push(match game.kind(x) {
            NodeKind::Sink => game.sink_value(x).expect("sink").clone(),
            NodeKind::Random => ran[index[x.0].expect("indexed") - 1].clone(),
            _ => control[forcing.reach[x.0].expect("player reaches a control") - 1].clone(),
        });
    }
    values.extend(control.iter().cloned());
    debug_assert_eq!(ran_nodes.len(), mdp.k);
    OrderValuation { control, ran, values: Values(values), forcing, policy: solution.policy }
}

/// `Val[t]`: optimal values of the derived game for the total order `t`.
pub fn values_of_order<S: Scalar>(game: &Ssg<S>, t: &TotalOrder) -> Result<OrderValuation<S>> {
    let forcing = compute_forcing(game, t)?;
    let mdp = collapse(game, t, &forcing)?;
    let solution = solve_collapsed(&mdp)?;
    Ok(expand(game, &mdp, forcing, solution))
}

/// `Val[p](t)`: forcing strategies of `t`, defer arcs of `p`.
pub fn val_p_t<S: Scalar>(game: &Ssg<S>, p: &PretotalOrder, t: &TotalOrder) -> Result<OrderValuation<S>> {
    if !extends(t, p) {
        return Err(SsgError::InvalidOrder(format!("{t} does not extend {p}")));
    }
    let forcing = compute_forcing(game, t)?;
    let mdp = collapse_with(game, p, &forcing)?;
    let solution = solve_collapsed(&mdp)?;
    Ok(expand(game, &mdp, forcing, solution))
}

/// Controls whose value is strictly below that of their random node.
pub fn constrained_nodes<S: Scalar>(valuation: &OrderValuation<S>) -> BTreeSet<usize> {
    (1..=valuation.control.len())
        .filter(|&i| valuation.control[i - 1].strictly_less(&valuation.ran[i - 1]))
        .collect()
}
