//! Order iteration over the random nodes: evaluate the derived game of the
//! current order, pick a constrained control node with the pair order, pivot,
//! repeat. Also the recursive form over pretotal orders.

use std::collections::{BTreeSet, HashMap};

use crate::control::{constrained_nodes, values_of_order, OrderValuation};
use crate::error::{Result, SsgError};
use crate::game::{check_canonical_form, CanonicalForm, Ssg, Strategy, Values};
use crate::orders::{extends, pivot, value_intervals, IntervalPartition, PairOrder, PretotalOrder, TotalOrder};
use crate::scalar::Scalar;
use crate::valuation::{evaluate_pair, optimality_holds};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PivotChoice {
    pub node: usize,
    /// Index in the pair order of the pair that completed the countdown, or
    /// `None` when the node had nothing after it in its interval.
    pub theta_position: Option<usize>,
}

/// Walks the pair order, counting down for every constrained node the pairs
/// joining it to later members of its value interval. The first node whose
/// count reaches zero is the pivot.
pub fn select_pivot<S: Scalar>(
    _t: &TotalOrder,
    partition: &IntervalPartition<S>,
    constrained: &BTreeSet<usize>,
    theta: &PairOrder,
) -> Option<PivotChoice> {
    let mut remaining = vec![0usize; theta.k() + 1];
    let mut after: Vec<&[usize]> = vec![&[]; theta.k() + 1];
    for &i in constrained {
        after[i] = partition.after(i);
        remaining[i] = after[i].len();
        if remaining[i] == 0 {
            return Some(PivotChoice { node: i, theta_position: None });
        }
    }
    for (pos, &(a, b)) in theta.sequence().iter().enumerate() {
        for (i, x) in [(a, b), (b, a)] {
            if constrained.contains(&i) && after[i].contains(&x) {
                remaining[i] -= 1;
                if remaining[i] == 0 {
                    return Some(PivotChoice { node: i, theta_position: Some(pos) });
                }
            }
        }
    }
    None
}

#[derive(Clone, Debug, PartialEq)]
pub struct PivotStep<S> {
    pub order: TotalOrder,
    pub control: Vec<S>,
    pub ran: Vec<S>,
    /// Values of every node of the derived game, base nodes first.
    pub values: Values<S>,
    pub constrained: BTreeSet<usize>,
    pub partition: IntervalPartition<S>,
    pub pivot: Option<PivotChoice>,
    pub sigma_t: Strategy,
    pub tau_t: Strategy,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PivotTrace<S> {
    pub steps: Vec<PivotStep<S>>,
    pub theta: PairOrder,
    pub seed: Option<u64>,
}

impl<S: Scalar> PivotTrace<S> {
    pub fn pivot_count(&self) -> usize {
        self.steps.iter().filter(|s| s.pivot.is_some()).count()
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.steps.iter().filter_map(|s| s.pivot.map(|p| p.node)).collect()
    }

    pub fn orders(&self) -> Vec<TotalOrder> {
        self.steps.iter().map(|s| s.order.clone()).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PivotOutcome<S> {
    pub order: TotalOrder,
    pub sigma: Strategy,
    pub tau: Strategy,
    /// Values of the base game.
    pub values: Values<S>,
    pub trace: PivotTrace<S>,
}

fn require_canonical<S: Scalar>(game: &Ssg<S>) -> Result<()> {
    match check_canonical_form(game) {
        CanonicalForm::Canonical(_) => Ok(()),
        CanonicalForm::SinkArc { from, to } => Err(SsgError::NotCanonicalForm(format!("arc {from} -> {to} enters a sink"))),
        CanonicalForm::Avoiding(nodes) => Err(SsgError::NotCanonicalForm(format!("MIN can avoid every sink from {nodes:?}"))),
    }
}

fn factorial(k: usize) -> u128 {
    (1..=k as u128).fold(1u128, |acc, x| acc.saturating_mul(x))
}

fn make_step<S: Scalar>(order: &TotalOrder, val: &OrderValuation<S>, pivot: Option<PivotChoice>) -> Result<PivotStep<S>> {
    Ok(PivotStep {
        order: order.clone(),
        control: val.control.clone(),
        ran: val.ran.clone(),
        values: val.values.clone(),
        constrained: constrained_nodes(val),
        partition: value_intervals(order, &val.control)?,
        pivot,
        sigma_t: val.forcing.sigma_t.clone(),
        tau_t: val.forcing.tau_t.clone(),
    })
}

/// Pivots until the order has no constrained control node.
pub fn solve_iterative<S: Scalar>(game: &Ssg<S>, t0: &TotalOrder, theta: &PairOrder) -> Result<PivotOutcome<S>> {
    require_canonical(game)?;
    let k = game.random_nodes().len();
    if t0.k() != k || theta.k().max(1) != k.max(1) {
        return Err(SsgError::InvalidOrder(format!("orders must range over 1..={k}")));
    }
    let mut t = t0.clone();
    let mut steps = Vec::new();
    let cap = factorial(k);
    loop {
        let val = values_of_order(game, &t)?;
        let mut step = make_step(&t, &val, None)?;
        if step.constrained.is_empty() {
            steps.push(step);
            let trace = PivotTrace { steps, theta: theta.clone(), seed: None };
            let (sigma, tau, values) = strategies_from_valuation(game, &val)?;
            return Ok(PivotOutcome { order: t, sigma, tau, values, trace });
        }
        let choice = select_pivot(&t, &step.partition, &step.constrained, theta)
            .ok_or_else(|| SsgError::Invariant("constrained nodes but no pivot".into()))?;
        let next = pivot(&t, choice.node, &step.partition);
        if next == t {
            return Err(SsgError::Invariant(format!("pivot on {} leaves {t} unchanged", choice.node)));
        }
        step.pivot = Some(choice);
        steps.push(step);
        if steps.len() as u128 > cap {
            return Err(SsgError::Invariant("more pivots than orders".into()));
        }
        t = next;
    }
}

/// Recursive form starting from the pretotal order `p0`.
pub fn solve_recursive<S: Scalar>(
    game: &Ssg<S>,
    p0: &PretotalOrder,
    t0: &TotalOrder,
    theta: &PairOrder,
) -> Result<(TotalOrder, PivotTrace<S>)> {
    require_canonical(game)?;
    let k = game.random_nodes().len();
    if t0.k() != k || p0.k() != k {
        return Err(SsgError::InvalidOrder(format!("orders must range over 1..={k}")));
    }
    if !extends(t0, p0) {
        return Err(SsgError::InvalidOrder(format!("{t0} does not extend {p0}")));
    }
    let mut run = Recursion { game, theta, cache: HashMap::new(), steps: Vec::new() };
    let t = run.solve(p0.clone(), t0.clone())?;
    let val = run.valuation(&t)?;
    let last = make_step(&t, &val, None)?;
    run.steps.push(last);
    Ok((t, PivotTrace { steps: run.steps, theta: theta.clone(), seed: None }))
}

struct Recursion<'a, S: Scalar> {
    game: &'a Ssg<S>,
    theta: &'a PairOrder,
    cache: HashMap<TotalOrder, OrderValuation<S>>,
    steps: Vec<PivotStep<S>>,
}

impl<S: Scalar> Recursion<'_, S> {
    fn valuation(&mut self, t: &TotalOrder) -> Result<OrderValuation<S>> {
        if let Some(v) = self.cache.get(t) {
            return Ok(v.clone());
        }
        let v = values_of_order(self.game, t)?;
        self.cache.insert(t.clone(), v.clone());
        Ok(v)
    }

    fn solve(&mut self, p0: PretotalOrder, t0: TotalOrder) -> Result<TotalOrder> {
        let Some(&(a, b)) = self.theta.sequence().iter().rev().find(|&&(a, b)| !p0.relates(a, b)) else {
            return Ok(t0);
        };
        let (i, j) = if t0.precedes(a, b) { (a, b) } else { (b, a) };
        let p1 = p0.add_pair(i, j)?;
        let t1 = self.solve(p1.clone(), t0)?;
        let val = self.valuation(&t1)?;
        let partition = value_intervals(&t1, &val.control)?;
        let after = partition.after(i);
        let constraining = constrained_nodes(&val).contains(&i)
            && after.contains(&j)
            && after.iter().filter(|&&x| p1.contains(i, x)).count() == 1;
        if !constraining {
            return Ok(t1);
        }
        let t2 = pivot(&t1, i, &partition);
        let p2 = p0.add_pair(j, i)?;
        if !extends(&t2, &p2) {
            return Err(SsgError::Invariant(format!("pivoted order {t2} does not extend {p2}")));
        }
        let position = self.theta.position(i, j);
        self.steps.push(make_step(&t1, &val, Some(PivotChoice { node: i, theta_position: Some(position) }))?);
        self.solve(p2, t2)
    }
}

fn strategies_from_valuation<S: Scalar>(game: &Ssg<S>, val: &OrderValuation<S>) -> Result<(Strategy, Strategy, Values<S>)> {
    let sigma = val.forcing.sigma_t.clone();
    let tau = val.forcing.tau_t.clone();
    let values = evaluate_pair(game, &sigma, &tau)?;
    let merged = &val.values.as_slice()[..game.len()];
    if values.as_slice() != merged {
        return Err(SsgError::Invariant("forcing strategies do not realise the order values".into()));
    }
    if !optimality_holds(game, &values) {
        return Err(SsgError::Invariant("forcing strategies violate the optimality conditions".into()));
    }
    Ok((sigma, tau, values))
}

/// Forcing strategies of an order with no constrained node, and the values
/// they yield in the base game.
pub fn optimal_strategies_from_order<S: Scalar>(game: &Ssg<S>, t_star: &TotalOrder) -> Result<(Strategy, Strategy, Values<S>)> {
    let val = values_of_order(game, t_star)?;
    let constrained = constrained_nodes(&val);
    if !constrained.is_empty() {
        return Err(SsgError::ConstrainedOrder(format!("{t_star} has constrained nodes {constrained:?}")));
    }
    strategies_from_valuation(game, &val)
}
