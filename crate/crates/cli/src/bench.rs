//! Step-count campaigns over seeded random games.

use serde::Serialize;

use ssg_core::generate::{generate, GenParams};
use ssg_core::ludwig::{sample_node_order, solve_bland};
use ssg_core::orders::{sample_pair_order, sample_total_order};
use ssg_core::pivot::solve_iterative;
use ssg_core::{NodeKind, Strategy};

use crate::CliResult;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub algorithm: String,
    /// Number of random nodes (pivot) or MAX nodes (ludwig).
    pub size: usize,
    pub games: usize,
    pub runs_per_game: usize,
    pub mean_steps: f64,
    /// Largest per-game mean.
    pub worst_game_mean: f64,
    pub max_steps: usize,
    /// `exp(sqrt(2 k))` for pivot, `exp(2 sqrt(n))` for ludwig.
    pub bound: f64,
    /// `k!` for pivot.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order_count: Option<f64>,
    pub exceeds_bound: bool,
}

impl BenchRow {
    pub const HEADER: &'static str = "algorithm  size  games  runs  mean_steps  worst_game_mean  max_steps  bound  flag";

    pub fn to_text(&self) -> String {
        format!(
            "{:<9}  {:>4}  {:>5}  {:>4}  {:>10.3}  {:>15.3}  {:>9}  {:>5.1}  {}",
            self.algorithm,
            self.size,
            self.games,
            self.runs_per_game,
            self.mean_steps,
            self.worst_game_mean,
            self.max_steps,
            self.bound,
            if self.exceeds_bound { "EXCEEDS" } else { "ok" }
        )
    }
}

/// Seed of run `r` on game `g` of a campaign.
pub fn run_seed(seed: u64, g: usize, r: usize) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ ((g as u64) << 32) ^ r as u64
}

fn summarize(algorithm: &str, size: usize, per_game: Vec<Vec<usize>>, bound: f64, order_count: Option<f64>) -> BenchRow {
    let games = per_game.len();
    let runs = per_game.first().map_or(0, Vec::len);
    let total: usize = per_game.iter().flatten().sum();
    let count = per_game.iter().map(Vec::len).sum::<usize>().max(1);
    let worst = per_game
        .iter()
        .map(|v| v.iter().sum::<usize>() as f64 / v.len().max(1) as f64)
        .fold(0.0, f64::max);
    let ceiling = order_count.map_or(bound, |c| c.min(bound));
    BenchRow {
        algorithm: algorithm.into(),
        size,
        games,
        runs_per_game: runs,
        mean_steps: total as f64 / count as f64,
        worst_game_mean: worst,
        max_steps: per_game.iter().flatten().copied().max().unwrap_or(0),
        bound,
        order_count,
        exceeds_bound: worst > ceiling,
    }
}

/// Pivot counts on `games` canonical games with `k` random nodes, each
/// solved from `runs` random (pair order, start order) pairs.
pub fn bench_pivot(k: usize, games: usize, runs: usize, seed: u64) -> CliResult<BenchRow> {
    let mut per_game = Vec::with_capacity(games);
    for g in 0..games {
        let params = GenParams { k, seed: run_seed(seed, g, usize::MAX), ..GenParams::default() };
        let game = generate(&params)?;
        let mut counts = Vec::with_capacity(runs);
        for r in 0..runs {
            let s = run_seed(seed, g, r);
            let out = solve_iterative(&game, &sample_total_order(k, s), &sample_pair_order(k, s))?;
            counts.push(out.trace.pivot_count());
        }
        per_game.push(counts);
    }
    let factorial = (1..=k).map(|x| x as f64).product();
    Ok(summarize("pivot", k, per_game, (2.0 * k as f64).sqrt().exp(), Some(factorial)))
}

/// Switch counts of Bland's rule on `games` globally stopping max-binary
/// games with `n` MAX nodes, each solved under `runs` random node orders.
pub fn bench_ludwig(n: usize, games: usize, runs: usize, seed: u64) -> CliResult<BenchRow> {
    let mut per_game = Vec::with_capacity(games);
    for g in 0..games {
        let params = GenParams {
            n_max: n,
            n_min: 2,
            k: 3,
            max_binary: true,
            globally_stopping: true,
            seed: run_seed(seed, g, usize::MAX),
            ..GenParams::default()
        };
        let game = generate(&params)?;
        let sigma0 = Strategy::first_choice(&game, NodeKind::Max);
        let mut counts = Vec::with_capacity(runs);
        for r in 0..runs {
            let order = sample_node_order(&game.max_nodes(), run_seed(seed, g, r));
            let (_, trace) = solve_bland(&game, &sigma0, &order)?;
            counts.push(trace.switch_count());
        }
        per_game.push(counts);
    }
    Ok(summarize("ludwig", n, per_game, (2.0 * (n as f64).sqrt()).exp(), None))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_random_node_never_pivots() {
        let row = bench_pivot(1, 5, 10, 0).unwrap();
        assert_eq!(row.max_steps, 0);
        assert!(!row.exceeds_bound);
    }

    #[test]
    fn single_max_node_switches_at_most_once() {
        let row = bench_ludwig(1, 10, 5, 0).unwrap();
        assert!(row.max_steps <= 1);
    }

    #[test]
    fn small_pivot_campaign_is_deterministic() {
        let a = bench_pivot(3, 4, 20, 9).unwrap();
        assert_eq!(a, bench_pivot(3, 4, 20, 9).unwrap());
        assert!(a.max_steps < 6);
    }
}
