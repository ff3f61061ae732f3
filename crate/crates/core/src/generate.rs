//! Seeded random games.
//!
//! MAX and MIN nodes are placed on levels. Every MIN node, and at least one
//! arc of every MAX node, points strictly down or into a random node, so MAX
//! can always force the play into the random layer. Every random node sends
//! some mass to a sink. Together this yields canonical form without any
//! post-processing.

use num_bigint::BigInt;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SsgError};
use crate::game::{Node, NodeId, Ssg};
use crate::orders::seeded_rng;
use crate::scalar::rational_text;
use crate::Rational;

pub use crate::game::fig2_game;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenParams {
    pub n_max: usize,
    pub n_min: usize,
    /// Number of random nodes.
    pub k: usize,
    pub n_sinks: usize,
    /// Largest outdegree of MAX and MIN nodes, and largest number of
    /// non-sink successors of a random node plus one.
    pub max_outdegree: usize,
    /// Every probability has a denominator dividing some `d <= bound`.
    pub prob_denominator_bound: u64,
    #[serde(with = "rational_text")]
    pub sink_value_min: Rational,
    #[serde(with = "rational_text")]
    pub sink_value_max: Rational,
    /// Lower bound on the total sink probability of each random node.
    #[serde(with = "rational_text")]
    pub min_sink_mass: Rational,
    pub seed: u64,
    /// Wire the game so that it is in canonical form. When unset, MAX nodes
    /// may also point straight at sinks.
    pub canonical: bool,
    /// Every MAX node gets exactly two successors.
    pub max_binary: bool,
    /// Every MAX and MIN arc points down or into a random node, so that every
    /// strategy pair stops.
    pub globally_stopping: bool,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            n_max: 3,
            n_min: 3,
            k: 3,
            n_sinks: 2,
            max_outdegree: 3,
            prob_denominator_bound: 16,
            sink_value_min: Rational::from_integer(BigInt::from(0)),
            sink_value_max: Rational::from_integer(BigInt::from(1)),
            min_sink_mass: Rational::new(BigInt::from(1), BigInt::from(10)),
            seed: 0,
            canonical: true,
            max_binary: false,
            globally_stopping: false,
        }
    }
}

impl GenParams {
    pub fn check(&self) -> Result<()> {
        let bad = |m: &str| Err(SsgError::InvalidParams(m.to_string()));
        if self.n_max + self.n_min + self.k > 0 && self.n_sinks == 0 {
            return bad("at least one sink is needed");
        }
        if self.max_outdegree == 0 {
            return bad("max_outdegree must be positive");
        }
        if self.prob_denominator_bound == 0 {
            return bad("prob_denominator_bound must be positive");
        }
        if self.sink_value_min > self.sink_value_max {
            return bad("empty sink value range");
        }
        let one = Rational::from_integer(BigInt::from(1));
        if self.min_sink_mass < Rational::from_integer(BigInt::from(0)) || self.min_sink_mass > one {
            return bad("min_sink_mass outside [0, 1]");
        }
        if self.canonical && self.k == 0 && self.n_max + self.n_min > 0 {
            return bad("a game with MAX or MIN nodes needs a random node to be in canonical form");
        }
        Ok(())
    }
}

/// Positive integer parts of `total` in `parts` pieces, uniformly over
/// compositions.
fn composition(rng: &mut ChaCha8Rng, total: u64, parts: usize) -> Vec<u64> {
    debug_assert!(parts as u64 <= total && parts > 0);
    let mut cuts: Vec<u64> = (1..total).collect::<Vec<_>>().choose_multiple(rng, parts - 1).copied().collect();
    cuts.sort();
    let mut out = Vec::with_capacity(parts);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(total)) {
        out.push(c - prev);
        prev = c;
    }
    out
}

fn ceil_mul(eps: &Rational, d: u64) -> u64 {
    let x = eps * Rational::from_integer(BigInt::from(d));
    let c = x.ceil().to_integer();
    u64::try_from(c).unwrap_or(d)
}

/// A random game; a pure function of `params`.
pub fn generate(params: &GenParams) -> Result<Ssg<Rational>> {
    params.check()?;
    let rng = &mut seeded_rng(params.seed);
    let n_players = params.n_max + params.n_min;
    let first_ran = n_players;
    let first_sink = n_players + params.k;
    let total = first_sink + params.n_sinks;
    let ran: Vec<NodeId> = (first_ran..first_sink).map(NodeId).collect();
    let sinks: Vec<NodeId> = (first_sink..total).map(NodeId).collect();
    // the bottom layer that player paths lead into
    let bottom: &[NodeId] = if params.k > 0 { &ran } else { &sinks };

    let mut level: Vec<usize> = (0..n_players).collect();
    level.shuffle(rng);
    let mut by_level = vec![NodeId(0); n_players];
    for (x, &l) in level.iter().enumerate() {
        by_level[l] = NodeId(x);
    }

    let mut nodes: Vec<Node<Rational>> = Vec::with_capacity(total);
    let mut labels = Vec::with_capacity(total);
    for x in 0..n_players {
        let is_max = x < params.n_max;
        let lower: Vec<NodeId> = by_level[..level[x]].iter().copied().chain(bottom.iter().copied()).collect();
        let mut anywhere: Vec<NodeId> = (0..n_players).map(NodeId).chain(bottom.iter().copied()).collect();
        if !params.canonical && params.k > 0 {
            anywhere.extend(sinks.iter().copied());
        }
        let degree = if is_max && params.max_binary { 2 } else { rng.gen_range(1..=params.max_outdegree) };
        let mut succ = vec![*lower.choose(rng).expect("bottom layer is nonempty")];
        let pool = if is_max && !params.globally_stopping { &anywhere } else { &lower };
        let mut rest: Vec<NodeId> = pool.iter().copied().filter(|y| !succ.contains(y)).collect();
        rest.shuffle(rng);
        succ.extend(rest.into_iter().take(degree - 1));
        while succ.len() < degree && params.max_binary && is_max {
            succ.push(succ[0]);
        }
        succ.shuffle(rng);
        if is_max {
            nodes.push(Node::Max(succ));
            labels.push(format!("x{x}"));
        } else {
            nodes.push(Node::Min(succ));
            labels.push(format!("n{}", x - params.n_max));
        }
    }

    for (pos, &r) in ran.iter().enumerate() {
        let d = rng.gen_range(1..=params.prob_denominator_bound);
        let sink_floor = ceil_mul(&params.min_sink_mass, d).max(1);
        let others: Vec<NodeId> = (0..n_players).map(NodeId).chain(ran.iter().copied().filter(|&y| y != r)).collect();
        let max_others = (params.max_outdegree.saturating_sub(1)).min(others.len()) as u64;
        let n_others = rng.gen_range(0..=max_others.min(d - sink_floor)) as usize;
        let n_sink_targets = rng.gen_range(1..=params.n_sinks.min(2)).min(sink_floor.max(1) as usize).max(1);
        let sink_weight = if n_others == 0 { d } else { rng.gen_range(sink_floor.max(n_sink_targets as u64)..=d - n_others as u64) };
        let n_sink_targets = n_sink_targets.min(sink_weight as usize);
        let mut dist: Vec<(NodeId, Rational)> = Vec::new();
        let q = |w: u64| Rational::new(BigInt::from(w), BigInt::from(d));
        let chosen_sinks: Vec<NodeId> = sinks.choose_multiple(rng, n_sink_targets).copied().collect();
        for (s, w) in chosen_sinks.into_iter().zip(composition(rng, sink_weight, n_sink_targets)) {
            dist.push((s, q(w)));
        }
        if n_others > 0 {
            let chosen: Vec<NodeId> = others.choose_multiple(rng, n_others).copied().collect();
            for (y, w) in chosen.into_iter().zip(composition(rng, d - sink_weight, n_others)) {
                dist.push((y, q(w)));
            }
        }
        dist.shuffle(rng);
        nodes.push(Node::Random(dist));
        labels.push(format!("r{}", pos + 1));
    }

    let span = &params.sink_value_max - &params.sink_value_min;
    let steps = params.prob_denominator_bound;
    for (pos, &s) in sinks.iter().enumerate() {
        let a = rng.gen_range(0..=steps);
        let value = &params.sink_value_min + &span * Rational::new(BigInt::from(a), BigInt::from(steps));
        nodes.push(Node::Sink { value, arcs: vec![s] });
        labels.push(format!("s{pos}"));
    }
    Ssg::new(nodes, labels)
}
