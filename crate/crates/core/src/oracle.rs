//! Exhaustive reference solvers. Nothing here prunes; each answer follows
//! directly from enumerating strategies or orders.

use serde::{Deserialize, Serialize};

use crate::control::{build_control_game, constrained_nodes, values_of_order};
use crate::error::{Result, SsgError};
use crate::format::{game_hash, values_text};
use crate::game::{check_canonical_form, NodeKind, Ssg, Strategy, Values};
use crate::orders::{PretotalOrder, TotalOrder};
use crate::pivot::optimal_strategies_from_order;
use crate::scalar::Scalar;
use crate::valuation::evaluate_pair;
use crate::Rational;

/// Largest number of MAX strategies the brute-force oracle will enumerate.
pub const MAX_STRATEGY_GUARD: u128 = 1_000_000;
/// Largest number of strategy pairs the brute-force oracle will evaluate.
pub const PAIR_GUARD: u128 = 4_000_000;
/// Largest number of random nodes for order enumeration.
pub const ORDER_ENUMERATION_MAX_K: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult<S> {
    pub values: Values<S>,
    pub witness_sigma: Strategy,
    pub witness_tau: Strategy,
    /// Number of strategy pairs evaluated.
    pub strategies_enumerated: u64,
}

fn guard<S: Scalar>(game: &Ssg<S>) -> Result<()> {
    let max = game.max_strategy_count();
    let pairs = max.saturating_mul(game.min_strategy_count());
    if max > MAX_STRATEGY_GUARD {
        return Err(SsgError::OracleGuard(format!("{max} MAX strategies exceed {MAX_STRATEGY_GUARD}")));
    }
    if pairs > PAIR_GUARD {
        return Err(SsgError::OracleGuard(format!("{pairs} strategy pairs exceed {PAIR_GUARD}")));
    }
    Ok(())
}

fn pointwise<S: Scalar>(acc: &mut Values<S>, v: &Values<S>, keep_larger: bool) {
    for (a, b) in acc.0.iter_mut().zip(v.as_slice()) {
        let replace = if keep_larger { b.strictly_greater(a) } else { b.strictly_less(a) };
        if replace {
            *a = b.clone();
        }
    }
}

/// The first candidate whose vector equals the pointwise extremum.
fn uniform_witness<S: Scalar>(candidates: &[(Strategy, Values<S>)], keep_larger: bool) -> Result<(Strategy, Values<S>)> {
    let mut best = candidates[0].1.clone();
    for (_, v) in candidates {
        pointwise(&mut best, v, keep_larger);
    }
    candidates
        .iter()
        .find(|(_, v)| v == &best)
        .cloned()
        .ok_or_else(|| SsgError::Invariant("no strategy attains the pointwise optimum".into()))
}

/// max over MAX strategies of the pointwise min over MIN strategies.
pub fn solve_bruteforce<S: Scalar>(game: &Ssg<S>) -> Result<OracleResult<S>> {
    guard(game)?;
    let sigmas = Strategy::enumerate(game, NodeKind::Max);
    let taus = Strategy::enumerate(game, NodeKind::Min);
    let mut count = 0u64;
    let mut per_sigma = Vec::with_capacity(sigmas.len());
    for sigma in sigmas {
        let mut responses = Vec::with_capacity(taus.len());
        for tau in &taus {
            responses.push((tau.clone(), evaluate_pair(game, &sigma, tau)?));
            count += 1;
        }
        let (_, lower) = uniform_witness(&responses, false)?;
        per_sigma.push((sigma, lower));
    }
    let (sigma, values) = uniform_witness(&per_sigma, true)?;
    let mut witness_tau = None;
    for tau in &taus {
        if evaluate_pair(game, &sigma, tau)? == values {
            witness_tau = Some(tau.clone());
            break;
        }
    }
    let witness_tau = witness_tau.ok_or_else(|| SsgError::Invariant("no best response attains the value".into()))?;
    Ok(OracleResult { values, witness_sigma: sigma, witness_tau, strategies_enumerated: count })
}

/// min over MIN strategies of the pointwise max over MAX strategies.
pub fn solve_bruteforce_dual<S: Scalar>(game: &Ssg<S>) -> Result<Values<S>> {
    guard(game)?;
    let sigmas = Strategy::enumerate(game, NodeKind::Max);
    let taus = Strategy::enumerate(game, NodeKind::Min);
    let mut per_tau = Vec::with_capacity(taus.len());
    for tau in taus {
        let mut responses = Vec::with_capacity(sigmas.len());
        for sigma in &sigmas {
            responses.push((sigma.clone(), evaluate_pair(game, sigma, &tau)?));
        }
        let (_, upper) = uniform_witness(&responses, true)?;
        per_tau.push((tau, upper));
    }
    Ok(uniform_witness(&per_tau, false)?.1)
}

/// Tries every order of the random nodes and returns the first one with no
/// constrained control node, with its forcing strategies.
pub fn solve_order_enumeration<S: Scalar>(game: &Ssg<S>) -> Result<(TotalOrder, OracleResult<S>)> {
    if !check_canonical_form(game).is_canonical() {
        return Err(SsgError::NotCanonicalForm("order enumeration needs canonical form".into()));
    }
    let k = game.random_nodes().len();
    if k > ORDER_ENUMERATION_MAX_K {
        return Err(SsgError::OracleGuard(format!("k = {k} exceeds {ORDER_ENUMERATION_MAX_K}")));
    }
    let mut count = 0u64;
    for t in TotalOrder::all(k) {
        count += 1;
        let val = values_of_order(game, &t)?;
        if constrained_nodes(&val).is_empty() {
            let (sigma, tau, values) = optimal_strategies_from_order(game, &t)?;
            let result = OracleResult { values, witness_sigma: sigma, witness_tau: tau, strategies_enumerated: count };
            return Ok((t, result));
        }
    }
    Err(SsgError::Invariant("no order is free of constrained nodes".into()))
}

/// Optimal values of the derived game of `p`, base nodes first, then the
/// control nodes.
pub fn val_star_pretotal<S: Scalar>(game: &Ssg<S>, p: &PretotalOrder) -> Result<Values<S>> {
    let derived = build_control_game(game, p)?;
    Ok(solve_bruteforce(&derived.game)?.values)
}

/// Machine-readable account of an oracle run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub oracle: String,
    pub game_hash: String,
    pub enumerated: u64,
    pub values: Vec<String>,
    pub sigma: String,
    pub tau: String,
}

impl Provenance {
    pub fn new(oracle: &str, game: &Ssg<Rational>, result: &OracleResult<Rational>) -> Self {
        Provenance {
            oracle: oracle.into(),
            game_hash: game_hash(game),
            enumerated: result.strategies_enumerated,
            values: values_text(result.values.as_slice()),
            sigma: result.witness_sigma.describe(game),
            tau: result.witness_tau.describe(game),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{fig2_game, SsgBuilder};
    use crate::valuation::check_optimal;
    use crate::NodeId;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from_ratio(n, d)
    }

    #[test]
    fn fig2_bruteforce() {
        let g: Ssg<Rational> = fig2_game();
        let r = solve_bruteforce(&g).unwrap();
        assert_eq!(&r.values.as_slice()[2..5], &[q(23, 50), q(1, 2), q(27, 50)]);
        assert_eq!(r.witness_sigma.describe(&g), "M->r2");
        assert_eq!(r.witness_tau.describe(&g), "m->M");
        assert_eq!(r.strategies_enumerated, 4);
        assert!(check_optimal(&g, &r.witness_sigma, &r.witness_tau).unwrap());
        assert_eq!(solve_bruteforce_dual(&g).unwrap(), r.values);
    }

    #[test]
    fn single_sink() {
        let mut b = SsgBuilder::<Rational>::new();
        b.sink("s", q(3, 4));
        let g = b.build().unwrap();
        let r = solve_bruteforce(&g).unwrap();
        assert_eq!(r.values.as_slice(), &[q(3, 4)]);
        assert!(r.witness_sigma.is_empty() && r.witness_tau.is_empty());
    }

    #[test]
    fn fig2_order_enumeration() {
        let g: Ssg<Rational> = fig2_game();
        let (t, r) = solve_order_enumeration(&g).unwrap();
        assert_eq!(t.to_string(), "[1,2,3]");
        assert_eq!(r.values, solve_bruteforce(&g).unwrap().values);
        assert_eq!(r.strategies_enumerated, 1);
    }

    #[test]
    fn pretotal_values_of_fig2() {
        let g: Ssg<Rational> = fig2_game();
        for t in TotalOrder::all(3) {
            let v = val_star_pretotal(&g, &t.pairs()).unwrap();
            assert_eq!(v.as_slice(), values_of_order(&g, &t).unwrap().values.as_slice(), "{t}");
        }
        let v = val_star_pretotal(&g, &PretotalOrder::empty(3)).unwrap();
        assert_eq!(&v.as_slice()[8..], &[q(23, 50), q(1, 2), q(27, 50)]);
    }

    #[test]
    fn guard_rejects_wide_games() {
        let mut b = SsgBuilder::<Rational>::new();
        for i in 0..13 {
            b.max(&format!("x{i}"), [13, 14, 15]);
        }
        b.sink("a", q(0, 1));
        b.sink("b", q(1, 2));
        b.sink("c", q(1, 1));
        let g = b.build().unwrap();
        assert!(matches!(solve_bruteforce(&g), Err(SsgError::OracleGuard(_))));
    }

    #[test]
    fn provenance_record() {
        let g: Ssg<Rational> = fig2_game();
        let r = solve_bruteforce(&g).unwrap();
        let p = Provenance::new("bruteforce", &g, &r);
        assert_eq!(p.values[2], "23/50");
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<Provenance>(&text).unwrap(), p);
        assert_eq!(r.witness_sigma.get(NodeId(0)), Some(NodeId(3)));
    }
}
