//! The solve, gen, check and transform commands as plain functions.

use serde::Serialize;

use ssg_core::format::{
    game_to_text, parse_game_unchecked, parse_strategy, pivot_steps, result_record, switch_steps, TraceFile, TraceHeader,
    TraceStep,
};
use ssg_core::game::{check_canonical_form, check_globally_stopping, is_max_binary, nonstandard_sinks, validate, CanonicalForm};
use ssg_core::generate::{generate, GenParams};
use ssg_core::ludwig::{sample_node_order, solve_bland, solve_hoffman_karp, NodeOrder};
use ssg_core::oracle::{solve_bruteforce, solve_order_enumeration};
use ssg_core::orders::{sample_pair_order, PairOrder, TotalOrder};
use ssg_core::pivot::solve_iterative;
use ssg_core::scalar::format_rational;
use ssg_core::transforms::{to_canonical_form, to_max_binary};
use ssg_core::valuation::best_response_min;
use ssg_core::{Game, NodeKind, Rational, Scalar, Strategy, Values};

use crate::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Pivot,
    Ludwig,
    HoffmanKarp,
    Oracle,
    OrderEnum,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pivot => "pivot",
            Algorithm::Ludwig => "ludwig",
            Algorithm::HoffmanKarp => "hoffman-karp",
            Algorithm::Oracle => "oracle",
            Algorithm::OrderEnum => "order-enum",
        }
    }

    pub fn from_name(name: &str) -> CliResult<Self> {
        Ok(match name {
            "pivot" => Algorithm::Pivot,
            "ludwig" => Algorithm::Ludwig,
            "hoffman-karp" => Algorithm::HoffmanKarp,
            "oracle" => Algorithm::Oracle,
            "order-enum" => Algorithm::OrderEnum,
            other => return Err(CliError::parse(format!("unknown algorithm {other:?}"))),
        })
    }
}

/// Everything that determines a solver run besides the game.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveRequest {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub t0: Option<String>,
    pub theta: Option<String>,
    pub sigma0: Option<String>,
    pub node_order: Option<String>,
}

impl SolveRequest {
    pub fn new(algorithm: Algorithm, seed: u64) -> Self {
        SolveRequest { algorithm, seed, t0: None, theta: None, sigma0: None, node_order: None }
    }

    pub fn from_header(header: &TraceHeader) -> CliResult<Self> {
        Ok(SolveRequest {
            algorithm: Algorithm::from_name(&header.algorithm)?,
            seed: header.seed.unwrap_or(0),
            t0: header.t0.clone(),
            theta: header.theta.clone(),
            sigma0: header.sigma0.clone(),
            node_order: header.node_order.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeValue {
    pub label: String,
    pub kind: String,
    pub value: String,
    /// Display only.
    pub approx: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub algorithm: String,
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<String>,
    pub values: Vec<NodeValue>,
    pub sigma: String,
    pub tau: String,
}

impl Summary {
    fn new(game: &Game, algorithm: Algorithm, steps: usize, values: &Values<Rational>, sigma: &Strategy, tau: &Strategy) -> Self {
        Summary {
            algorithm: algorithm.name().into(),
            steps,
            order: None,
            values: game
                .ids()
                .map(|x| NodeValue {
                    label: game.label(x).into(),
                    kind: game.kind(x).name().into(),
                    value: format_rational(&values[x]),
                    approx: values[x].to_f64(),
                })
                .collect(),
            sigma: sigma.describe(game),
            tau: tau.describe(game),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("algorithm  {}\nsteps      {}\n", self.algorithm, self.steps);
        if let Some(t) = &self.order {
            out.push_str(&format!("order      {t}\n"));
        }
        let width = self.values.iter().map(|v| v.label.len()).max().unwrap_or(4).max(4);
        out.push_str(&format!("{:<width$}  {:<6}  {:<12}  approx\n", "node", "kind", "value"));
        for v in &self.values {
            out.push_str(&format!("{:<width$}  {:<6}  {:<12}  {:.6}\n", v.label, v.kind, v.value, v.approx));
        }
        out.push_str(&format!("sigma      {}\ntau        {}\n", self.sigma, self.tau));
        out
    }
}

pub fn read_input(path: &str) -> CliResult<String> {
    if path == "-" {
        let mut s = String::new();
        std::io::Read::read_to_string(&mut std::io::stdin(), &mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path).map_err(|e| CliError::parse(format!("{path}: {e}")))
    }
}

/// Parses and validates a game file: syntax problems exit 1, an invalid game 2.
pub fn load_game(text: &str) -> CliResult<Game> {
    let game = parse_game_unchecked(text).map_err(CliError::parse)?;
    if let Some(v) = validate(&game).first() {
        return Err(CliError::precondition(format!("invalid game: {v}")));
    }
    Ok(game)
}

fn parse_arg<T>(what: &str, r: ssg_core::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::parse(format!("{what}: {e}")))
}

/// Runs one solver and records the full trace.
pub fn solve(game: &Game, req: &SolveRequest) -> CliResult<(TraceFile, Summary)> {
    let mut header = TraceHeader::new(req.algorithm.name(), game);
    header.seed = Some(req.seed);
    let k = game.random_nodes().len();
    let mut summary_order = None;
    let finish = |count: usize, values: &Values<Rational>, sigma: &Strategy, tau: &Strategy| {
        (Summary::new(game, req.algorithm, count, values, sigma, tau), result_record(game, values, sigma, tau, count))
    };
    let (steps, (mut summary, result)) = match req.algorithm {
        Algorithm::Pivot => {
            let theta = match &req.theta {
                Some(text) if k > 1 => parse_arg("--theta", PairOrder::parse(text))?,
                _ => sample_pair_order(k, req.seed),
            };
            let t0 = match &req.t0 {
                Some(text) => parse_arg("--t0", text.parse::<TotalOrder>())?,
                None => TotalOrder::identity(k),
            };
            header.theta = Some(theta.to_string());
            header.t0 = Some(t0.to_string());
            let out = solve_iterative(game, &t0, &theta)?;
            summary_order = Some(out.order.to_string());
            (pivot_steps(game, &out.trace), finish(out.trace.pivot_count(), &out.values, &out.sigma, &out.tau))
        }
        Algorithm::Ludwig | Algorithm::HoffmanKarp => {
            let sigma0 = match &req.sigma0 {
                Some(text) => parse_arg("--sigma0", parse_strategy(game, text))?,
                None => Strategy::first_choice(game, NodeKind::Max),
            };
            header.sigma0 = Some(sigma0.describe(game));
            let (sigma, trace) = if req.algorithm == Algorithm::Ludwig {
                let order = match &req.node_order {
                    Some(text) => parse_arg("--node-order", NodeOrder::parse(game, text))?,
                    None => sample_node_order(&game.max_nodes(), req.seed),
                };
                header.node_order = Some(order.to_string());
                solve_bland(game, &sigma0, &order)?
            } else {
                solve_hoffman_karp(game, &sigma0)?
            };
            let (tau, values) = best_response_min(game, &sigma)?;
            let steps = switch_steps(game, &sigma0, &trace);
            (steps, finish(trace.switch_count(), &values, &sigma, &tau))
        }
        Algorithm::Oracle => {
            let r = solve_bruteforce(game)?;
            (Vec::new(), finish(0, &r.values, &r.witness_sigma, &r.witness_tau))
        }
        Algorithm::OrderEnum => {
            let (t, r) = solve_order_enumeration(game)?;
            let step = TraceStep {
                index: 0,
                order: Some(t.to_string()),
                strategy: None,
                values: game.random_nodes().iter().map(|&x| format_rational(&r.values[x])).collect(),
                control_values: None,
                forcing: None,
                pivot: None,
                switched: None,
            };
            summary_order = Some(t.to_string());
            (vec![step], finish(r.strategies_enumerated as usize, &r.values, &r.witness_sigma, &r.witness_tau))
        }
    };
    summary.order = summary_order;
    Ok((TraceFile { header, steps, result: Some(result) }, summary))
}

/// Re-runs the recorded inputs of a trace and compares the output byte for
/// byte. Returns the number of steps replayed.
pub fn replay(game: &Game, trace_text: &str) -> CliResult<usize> {
    let recorded = TraceFile::parse(trace_text).map_err(CliError::parse)?;
    if recorded.header.game_hash != ssg_core::format::game_hash(game) {
        return Err(CliError::precondition("replay: trace was recorded on a different game"));
    }
    let req = SolveRequest::from_header(&recorded.header)?;
    let (fresh, _) = solve(game, &req)?;
    let (a, b) = (recorded.to_text(), fresh.to_text());
    if a != b {
        let line = a.lines().zip(b.lines()).position(|(x, y)| x != y).unwrap_or(a.lines().count().min(b.lines().count()));
        return Err(CliError::precondition(format!("replay diverges at trace line {}", line + 1)));
    }
    Ok(recorded.steps.len())
}

pub fn gen(params: &GenParams) -> CliResult<String> {
    let game = generate(params)?;
    Ok(game_to_text(&game))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CheckReport {
    pub nodes: usize,
    pub max: usize,
    pub min: usize,
    pub random: usize,
    pub sinks: usize,
    pub valid: bool,
    pub violations: Vec<String>,
    pub canonical: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub canonical_witness: Option<String>,
    pub max_binary: bool,
    pub globally_stopping: bool,
    /// Labels of sinks with a negative value.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub nonstandard_sinks: Vec<String>,
}

impl CheckReport {
    pub fn to_text(&self) -> String {
        let yes = |b: bool| if b { "yes" } else { "no" };
        let mut out = format!(
            "nodes              {} (max {}, min {}, random {}, sinks {})\nvalid              {}\n",
            self.nodes, self.max, self.min, self.random, self.sinks, yes(self.valid)
        );
        for v in &self.violations {
            out.push_str(&format!("  violation        {v}\n"));
        }
        out.push_str(&format!("canonical form     {}\n", yes(self.canonical)));
        if let Some(w) = &self.canonical_witness {
            out.push_str(&format!("  witness          {w}\n"));
        }
        out.push_str(&format!("max-binary         {}\nglobally stopping  {}\n", yes(self.max_binary), yes(self.globally_stopping)));
        if !self.nonstandard_sinks.is_empty() {
            out.push_str(&format!("nonstandard        negative sinks {}\n", self.nonstandard_sinks.join(",")));
        }
        out
    }
}

/// Property report; only a syntax error fails.
pub fn check(text: &str) -> CliResult<CheckReport> {
    let game = parse_game_unchecked(text).map_err(CliError::parse)?;
    let violations: Vec<String> = validate(&game)
        .iter()
        .map(|v| format!("{} ({}): {}", game.label(v.node), v.node.0, v.message))
        .collect();
    let valid = violations.is_empty();
    let (canonical, canonical_witness) = if !valid {
        (false, None)
    } else {
        match check_canonical_form(&game) {
            CanonicalForm::Canonical(_) => (true, None),
            CanonicalForm::SinkArc { from, to } => {
                (false, Some(format!("arc {} -> {} enters a sink", game.label(from), game.label(to))))
            }
            CanonicalForm::Avoiding(nodes) => {
                let labels: Vec<&str> = nodes.iter().map(|&x| game.label(x)).collect();
                (false, Some(format!("MIN can avoid every sink from {}", labels.join(","))))
            }
        }
    };
    Ok(CheckReport {
        nodes: game.len(),
        max: game.max_nodes().len(),
        min: game.min_nodes().len(),
        random: game.random_nodes().len(),
        sinks: game.sinks().len(),
        valid,
        violations,
        canonical,
        canonical_witness,
        max_binary: valid && is_max_binary(&game),
        globally_stopping: valid && check_globally_stopping(&game),
        nonstandard_sinks: nonstandard_sinks(&game).into_iter().map(|x| game.label(x).to_string()).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Transform {
    Canonical,
    MaxBinary,
}

/// Transformed game text and the old-to-new node mapping.
pub fn transform(game: &Game, which: Transform, epsilon: &Rational) -> CliResult<(String, Vec<Option<usize>>)> {
    let t = match which {
        Transform::Canonical => to_canonical_form(game, epsilon)?,
        Transform::MaxBinary => to_max_binary(game).transformed,
    };
    let mapping = t.mapping.iter().map(|m| m.map(|x| x.0)).collect();
    Ok((game_to_text(&t.game), mapping))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ssg_core::game::fig2_game;

    #[test]
    fn fig2_pivot_summary() {
        let g: Game = fig2_game();
        let req = SolveRequest { t0: Some("[3,1,2]".into()), ..SolveRequest::new(Algorithm::Pivot, 0) };
        let (trace, summary) = solve(&g, &req).unwrap();
        assert_eq!(summary.steps, 2);
        assert_eq!(trace.steps.len(), 3);
        assert_eq!(summary.values[2].value, "23/50");
        assert_eq!(summary.order.as_deref(), Some("[1,2,3]"));
        assert_eq!(replay(&g, &trace.to_text()).unwrap(), 3);
    }

    #[test]
    fn every_algorithm_agrees_on_fig2() {
        let g: Game = fig2_game();
        let reference = solve(&g, &SolveRequest::new(Algorithm::Oracle, 0)).unwrap().1.values;
        for alg in [Algorithm::Pivot, Algorithm::Ludwig, Algorithm::HoffmanKarp, Algorithm::OrderEnum] {
            let (trace, summary) = solve(&g, &SolveRequest::new(alg, 3)).unwrap();
            assert_eq!(summary.values, reference, "{}", alg.name());
            replay(&g, &trace.to_text()).unwrap();
        }
    }

    #[test]
    fn tampered_trace_is_rejected() {
        let g: Game = fig2_game();
        let (trace, _) = solve(&g, &SolveRequest::new(Algorithm::Pivot, 1)).unwrap();
        let text = trace.to_text().replace("23/50", "24/50");
        let err = replay(&g, &text).unwrap_err();
        assert_eq!(err.code, crate::EXIT_PRECONDITION);
    }

    #[test]
    fn check_reports() {
        let g: Game = fig2_game();
        let report = check(&game_to_text(&g)).unwrap();
        assert!(report.valid && report.canonical && report.max_binary && report.globally_stopping);
        let broken = game_to_text(&g).replace("\"9/100\"", "\"8/100\"");
        let report = check(&broken).unwrap();
        assert!(!report.valid);
        assert!(report.violations[0].contains("r1"), "{:?}", report.violations);
        assert_eq!(check("not json").unwrap_err().code, crate::EXIT_PARSE);
    }
}
