//! Exact evaluation of strategy pairs, MIN best responses and switches.

use std::collections::BTreeSet;

use crate::error::{Result, SsgError};
use crate::game::{Node, NodeId, NodeKind, Ssg, Strategy, Values};
use crate::scalar::Scalar;

/// Square system `matrix * x = rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearSystem<S> {
    pub matrix: Vec<Vec<S>>,
    pub rhs: Vec<S>,
}

impl<S: Scalar> LinearSystem<S> {
    pub fn dim(&self) -> usize {
        self.rhs.len()
    }

    /// Gaussian elimination. Exact scalars pivot on the first nonzero entry;
    /// inexact ones on the largest magnitude.
    pub fn solve(&self) -> Result<Vec<S>> {
        let n = self.dim();
        let mut a: Vec<Vec<S>> = self.matrix.clone();
        let mut b: Vec<S> = self.rhs.clone();
        for col in 0..n {
            let pivot = if S::EXACT {
                (col..n).find(|&r| !a[r][col].is_zero())
            } else {
                (col..n)
                    .filter(|&r| !a[r][col].is_zero())
                    .max_by(|&r, &s| a[r][col].abs().partial_cmp(&a[s][col].abs()).unwrap_or(std::cmp::Ordering::Equal))
            };
            let pivot = pivot.ok_or_else(|| SsgError::Invariant(format!("singular system at column {col}")))?;
            a.swap(col, pivot);
            b.swap(col, pivot);
            for r in col + 1..n {
                if a[r][col].is_zero() {
                    continue;
                }
                let factor = a[r][col].clone() / a[col][col].clone();
                for c in col..n {
                    if a[col][c].is_zero() {
                        continue;
                    }
                    let delta = factor.clone() * a[col][c].clone();
                    a[r][c] = a[r][c].clone() - delta;
                }
                let delta = factor * b[col].clone();
                b[r] = b[r].clone() - delta;
            }
        }
        let mut x = vec![S::zero(); n];
        for row in (0..n).rev() {
            let mut acc = b[row].clone();
            for c in row + 1..n {
                if !a[row][c].is_zero() {
                    acc = acc - a[row][c].clone() * x[c].clone();
                }
            }
            x[row] = acc / a[row][row].clone();
        }
        Ok(x)
    }

    /// `rhs - matrix * x`.
    pub fn residual(&self, x: &[S]) -> Vec<S> {
        self.matrix
            .iter()
            .zip(&self.rhs)
            .map(|(row, b)| {
                row.iter().zip(x).fold(b.clone(), |acc, (m, xi)| {
                    if m.is_zero() {
                        acc
                    } else {
                        acc - m.clone() * xi.clone()
                    }
                })
            })
            .collect()
    }
}

/// One-step distribution of the Markov chain induced by `(sigma, tau)`.
pub fn transitions<S: Scalar>(
    game: &Ssg<S>,
    sigma: &Strategy,
    tau: &Strategy,
    x: NodeId,
) -> Result<Vec<(NodeId, S)>> {
    Ok(match game.node(x) {
        Node::Max(_) => vec![(sigma.get(x).ok_or(SsgError::IncompleteStrategy(x))?, S::one())],
        Node::Min(_) => vec![(tau.get(x).ok_or(SsgError::IncompleteStrategy(x))?, S::one())],
        Node::Random(d) => d.clone(),
        Node::Sink { .. } => vec![(x, S::one())],
    })
}

/// The absorbing-chain system of a strategy pair, restricted to the non-sink
/// nodes that can reach a sink. Returns the system and the node of each row.
pub fn absorbing_system<S: Scalar>(
    game: &Ssg<S>,
    sigma: &Strategy,
    tau: &Strategy,
) -> Result<(LinearSystem<S>, Vec<NodeId>)> {
    let n = game.len();
    let mut step = Vec::with_capacity(n);
    for x in game.ids() {
        step.push(transitions(game, sigma, tau, x)?);
    }
    // backward search from the sinks along chain arcs
    let mut pred = vec![Vec::new(); n];
    for x in game.ids() {
        for (y, _) in &step[x.0] {
            pred[y.0].push(x);
        }
    }
    let mut reaches = vec![false; n];
    let mut stack: Vec<NodeId> = game.sinks();
    for s in &stack {
        reaches[s.0] = true;
    }
    while let Some(y) = stack.pop() {
        for &x in &pred[y.0] {
            if !reaches[x.0] {
                reaches[x.0] = true;
                stack.push(x);
            }
        }
    }
    let live: Vec<NodeId> = game.ids().filter(|&x| reaches[x.0] && game.kind(x) != NodeKind::Sink).collect();
    let mut row_of = vec![usize::MAX; n];
    for (i, x) in live.iter().enumerate() {
        row_of[x.0] = i;
    }
    let m = live.len();
    let mut matrix = vec![vec![S::zero(); m]; m];
    let mut rhs = vec![S::zero(); m];
    for (i, &x) in live.iter().enumerate() {
        matrix[i][i] = S::one();
        for (y, p) in &step[x.0] {
            if let Some(v) = game.sink_value(*y) {
                rhs[i] = rhs[i].clone() + p.clone() * v.clone();
            } else if row_of[y.0] != usize::MAX {
                let j = row_of[y.0];
                matrix[i][j] = matrix[i][j].clone() - p.clone();
            }
            // successors that never reach a sink contribute 0
        }
    }
    Ok((LinearSystem { matrix, rhs }, live))
}

/// Exact values of every node under `(sigma, tau)`; plays that are never
/// absorbed pay 0.
pub fn evaluate_pair<S: Scalar>(game: &Ssg<S>, sigma: &Strategy, tau: &Strategy) -> Result<Values<S>> {
    let (system, live) = absorbing_system(game, sigma, tau)?;
    let solution = system.solve()?;
    let mut values: Vec<S> = game.ids().map(|x| game.sink_value(x).cloned().unwrap_or_else(S::zero)).collect();
    for (x, v) in live.into_iter().zip(solution) {
        values[x.0] = v;
    }
    Ok(Values(values))
}

/// `iterations` rounds of value iteration for a fixed pair, starting from
/// sink values and 0 elsewhere. Converges to [`evaluate_pair`] from below
/// for nonnegative sinks; used only as an approximate cross-check.
pub fn power_iteration<S: Scalar>(game: &Ssg<S>, sigma: &Strategy, tau: &Strategy, iterations: usize) -> Result<Values<S>> {
    let mut step = Vec::with_capacity(game.len());
    for x in game.ids() {
        step.push(transitions(game, sigma, tau, x)?);
    }
    let mut v: Vec<S> = game.ids().map(|x| game.sink_value(x).cloned().unwrap_or_else(S::zero)).collect();
    for _ in 0..iterations {
        v = game
            .ids()
            .map(|x| match game.sink_value(x) {
                Some(value) => value.clone(),
                None => step[x.0].iter().fold(S::zero(), |acc, (y, p)| acc + p.clone() * v[y.0].clone()),
            })
            .collect();
    }
    Ok(Values(v))
}

/// Position of the best successor of `x` under `values`; ties go to the
/// earliest listed successor.
pub(crate) fn best_successor<S: Scalar>(game: &Ssg<S>, x: NodeId, values: &Values<S>, maximize: bool) -> NodeId {
    let mut best: Option<NodeId> = None;
    for y in game.successors(x) {
        best = match best {
            None => Some(y),
            Some(b) => {
                let better = if maximize {
                    values[y].strictly_greater(&values[b])
                } else {
                    values[y].strictly_less(&values[b])
                };
                Some(if better { y } else { b })
            }
        };
    }
    best.expect("player node without successors")
}

/// MIN's best response to `sigma` by policy iteration, starting from every MIN
/// node playing its first successor. Intended for stopping `sigma`; for other
/// strategies the result is the fixed point of the same iteration.
pub fn best_response_min<S: Scalar>(game: &Ssg<S>, sigma: &Strategy) -> Result<(Strategy, Values<S>)> {
    let mut tau = Strategy::first_choice(game, NodeKind::Min);
    let mins = game.min_nodes();
    let cap = game.min_strategy_count().min(1 << 20) as usize + 1;
    for _ in 0..=cap {
        let values = evaluate_pair(game, sigma, &tau)?;
        let mut improved = false;
        for &x in &mins {
            let current = tau.get(x).ok_or(SsgError::IncompleteStrategy(x))?;
            let best = best_successor(game, x, &values, false);
            if values[best].strictly_less(&values[current]) {
                tau.set(x, best);
                improved = true;
            }
        }
        if !improved {
            return Ok((tau, values));
        }
    }
    Err(SsgError::Invariant("MIN policy iteration did not terminate".into()))
}

/// MAX nodes with a successor strictly better than their current choice,
/// under the given `Val_{sigma,*}`.
pub fn switchable_from_values<S: Scalar>(game: &Ssg<S>, sigma: &Strategy, values: &Values<S>) -> Result<BTreeSet<NodeId>> {
    let mut out = BTreeSet::new();
    for x in game.max_nodes() {
        let current = sigma.get(x).ok_or(SsgError::IncompleteStrategy(x))?;
        if game.successors(x).any(|y| values[y].strictly_greater(&values[current])) {
            out.insert(x);
        }
    }
    Ok(out)
}

pub fn switchable_nodes<S: Scalar>(game: &Ssg<S>, sigma: &Strategy) -> Result<BTreeSet<NodeId>> {
    let (_, values) = best_response_min(game, sigma)?;
    switchable_from_values(game, sigma, &values)
}

/// Switches `x` given precomputed `Val_{sigma,*}`: a binary node flips, a
/// wider node moves to its best successor.
pub fn switch_with_values<S: Scalar>(game: &Ssg<S>, sigma: &Strategy, x: NodeId, values: &Values<S>) -> Result<Strategy> {
    if game.kind(x) != NodeKind::Max {
        return Err(SsgError::NotSwitchable(x));
    }
    let current = sigma.get(x).ok_or(SsgError::IncompleteStrategy(x))?;
    let succ: Vec<NodeId> = game.successors(x).collect();
    if !succ.iter().any(|&y| values[y].strictly_greater(&values[current])) {
        return Err(SsgError::NotSwitchable(x));
    }
    let target = if succ.len() == 2 {
        if succ[0] == current { succ[1] } else { succ[0] }
    } else {
        best_successor(game, x, values, true)
    };
    Ok(sigma.clone().with(x, target))
}

pub fn switch<S: Scalar>(game: &Ssg<S>, sigma: &Strategy, x: NodeId) -> Result<Strategy> {
    let (_, values) = best_response_min(game, sigma)?;
    switch_with_values(game, sigma, x, &values)
}

/// Local optimality conditions: every MAX node takes the maximum of its
/// successors' values, every MIN node the minimum.
pub fn optimality_holds<S: Scalar>(game: &Ssg<S>, values: &Values<S>) -> bool {
    game.ids().all(|x| match game.kind(x) {
        NodeKind::Max => {
            let best = best_successor(game, x, values, true);
            values[x].same_value(&values[best])
        }
        NodeKind::Min => {
            let best = best_successor(game, x, values, false);
            values[x].same_value(&values[best])
        }
        _ => true,
    })
}

pub fn check_optimal<S: Scalar>(game: &Ssg<S>, sigma: &Strategy, tau: &Strategy) -> Result<bool> {
    let values = evaluate_pair(game, sigma, tau)?;
    Ok(optimality_holds(game, &values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{fig2_game, SsgBuilder};
    use crate::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    const M: NodeId = NodeId(0);
    const LOW_M: NodeId = NodeId(1);
    const R1: NodeId = NodeId(2);
    const R2: NodeId = NodeId(3);
    const R3: NodeId = NodeId(4);

    #[test]
    fn power_iteration_approaches_exact_values() {
        let g = fig2_game::<Rational>();
        let gf = g.map_scalar(|x| x.to_f64());
        let sigma = Strategy::new().with(M, R1);
        let tau = Strategy::new().with(LOW_M, R3);
        let exact = evaluate_pair(&g, &sigma, &tau).unwrap();
        let approx = power_iteration(&gf, &sigma, &tau, 10_000).unwrap();
        for x in g.ids() {
            assert!((exact[x].to_f64() - approx[x]).abs() < 1e-9);
        }
    }

    #[test]
    fn fig2_pair_values() {
        let g = fig2_game::<Rational>();
        let sigma = Strategy::new().with(M, R2);
        let tau = Strategy::new().with(LOW_M, R3);
        let v = evaluate_pair(&g, &sigma, &tau).unwrap();
        assert_eq!(v[R3], q(9, 10));
        assert_eq!(v[LOW_M], q(9, 10));
        assert_eq!(v[M], q(1, 2));
        assert_eq!(v[R2], q(1, 2));
        assert_eq!(v[R1], q(41, 50));
    }

    #[test]
    fn residual_is_exactly_zero() {
        let g = fig2_game::<Rational>();
        let (sys, _) = absorbing_system(&g, &Strategy::new().with(M, R1), &Strategy::new().with(LOW_M, M)).unwrap();
        let x = sys.solve().unwrap();
        assert!(sys.residual(&x).iter().all(|r| *r == q(0, 1)));
    }

    #[test]
    fn self_loop_has_zero_value() {
        let mut b = SsgBuilder::<Rational>::new();
        b.min("m", [0, 1]);
        b.sink("s", q(1, 1));
        let g = b.build().unwrap();
        let v = evaluate_pair(&g, &Strategy::new(), &Strategy::new().with(NodeId(0), NodeId(0))).unwrap();
        assert_eq!(v[NodeId(0)], q(0, 1));
    }

    #[test]
    fn direct_sink_successor() {
        let mut b = SsgBuilder::<Rational>::new();
        b.max("x", [1]);
        b.sink("s", q(1, 2));
        let g = b.build().unwrap();
        let v = evaluate_pair(&g, &Strategy::new().with(NodeId(0), NodeId(1)), &Strategy::new()).unwrap();
        assert_eq!(v[NodeId(0)], q(1, 2));
    }

    #[test]
    fn fig2_best_responses() {
        let g = fig2_game::<Rational>();
        let (tau, v) = best_response_min(&g, &Strategy::new().with(M, R2)).unwrap();
        assert_eq!(tau.get(LOW_M), Some(M));
        assert_eq!(
            v.0[..5].to_vec(),
            vec![q(1, 2), q(1, 2), q(23, 50), q(1, 2), q(27, 50)]
        );
        let (tau, v) = best_response_min(&g, &Strategy::new().with(M, R1)).unwrap();
        assert_eq!(tau.get(LOW_M), Some(M));
        assert_eq!(v.0[..5].to_vec(), vec![q(1, 10), q(1, 10), q(1, 10), q(1, 2), q(9, 50)]);
    }

    #[test]
    fn best_response_matches_enumeration_on_fig2() {
        let g = fig2_game::<Rational>();
        for sigma in Strategy::enumerate(&g, NodeKind::Max) {
            let (_, v) = best_response_min(&g, &sigma).unwrap();
            for x in g.ids() {
                let min = Strategy::enumerate(&g, NodeKind::Min)
                    .iter()
                    .map(|tau| evaluate_pair(&g, &sigma, tau).unwrap()[x].clone())
                    .min()
                    .unwrap();
                assert_eq!(v[x], min);
            }
        }
    }

    #[test]
    fn no_min_nodes_best_response() {
        let mut b = SsgBuilder::<Rational>::new();
        b.max("x", [1, 2]);
        b.sink("a", q(1, 3));
        b.sink("b", q(2, 3));
        let g = b.build().unwrap();
        let sigma = Strategy::new().with(NodeId(0), NodeId(2));
        let (tau, v) = best_response_min(&g, &sigma).unwrap();
        assert!(tau.is_empty());
        assert_eq!(v, evaluate_pair(&g, &sigma, &Strategy::new()).unwrap());
    }

    #[test]
    fn fig2_switchable() {
        let g = fig2_game::<Rational>();
        let s: Vec<_> = switchable_nodes(&g, &Strategy::new().with(M, R1)).unwrap().into_iter().collect();
        assert_eq!(s, vec![M]);
        assert!(switchable_nodes(&g, &Strategy::new().with(M, R2)).unwrap().is_empty());
        let sw = switch(&g, &Strategy::new().with(M, R1), M).unwrap();
        assert_eq!(sw.get(M), Some(R2));
        assert_eq!(switch(&g, &Strategy::new().with(M, R2), M), Err(SsgError::NotSwitchable(M)));
    }

    #[test]
    fn switchable_empty_without_max_nodes() {
        let mut b = SsgBuilder::<Rational>::new();
        b.min("m", [1]);
        b.sink("s", q(0, 1));
        assert!(switchable_nodes(&b.build().unwrap(), &Strategy::new()).unwrap().is_empty());
    }

    #[test]
    fn wide_switch_breaks_ties_by_position() {
        let mut b = SsgBuilder::<Rational>::new();
        b.max("x", [1, 2, 3]);
        b.sink("zero", q(0, 1));
        b.sink("half-a", q(1, 2));
        b.sink("half-b", q(1, 2));
        let g = b.build().unwrap();
        let sigma = Strategy::new().with(NodeId(0), NodeId(1));
        assert_eq!(switch(&g, &sigma, NodeId(0)).unwrap().get(NodeId(0)), Some(NodeId(2)));
    }

    #[test]
    fn fig2_optimality() {
        let g = fig2_game::<Rational>();
        assert!(check_optimal(&g, &Strategy::new().with(M, R2), &Strategy::new().with(LOW_M, M)).unwrap());
        assert!(!check_optimal(&g, &Strategy::new().with(M, R1), &Strategy::new().with(LOW_M, M)).unwrap());
        let mut b = SsgBuilder::<Rational>::new();
        b.sink("s", q(1, 1));
        assert!(check_optimal(&b.build().unwrap(), &Strategy::new(), &Strategy::new()).unwrap());
    }

    #[test]
    fn float_evaluation_agrees() {
        let g = fig2_game::<Rational>();
        let gf = g.map_scalar(|r| Scalar::to_f64(r));
        let sigma = Strategy::new().with(M, R2);
        let tau = Strategy::new().with(LOW_M, R3);
        let exact = evaluate_pair(&g, &sigma, &tau).unwrap();
        let approx = evaluate_pair(&gf, &sigma, &tau).unwrap();
        for x in g.ids() {
            assert!((Scalar::to_f64(&exact[x]) - approx[x]).abs() < 1e-12);
        }
    }
}
