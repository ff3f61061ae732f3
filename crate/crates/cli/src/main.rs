use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use ssg_cli::bench::{bench_ludwig, bench_pivot, BenchRow};
use ssg_cli::commands::{self, Algorithm, SolveRequest, Transform};
use ssg_cli::{CliError, CliResult};
use ssg_core::generate::GenParams;
use ssg_core::scalar::parse_rational;
use ssg_core::Rational;

#[derive(Parser)]
#[command(name = "ssg", version, about = "Exact solvers for simple stochastic games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a game file.
    Solve(SolveArgs),
    /// Generate a random game file.
    Gen(GenArgs),
    /// Measure step counts over seeded random games.
    Bench(BenchArgs),
    /// Report structural properties of a game file.
    Check(CheckArgs),
    /// Rewrite a game into canonical form or max-binary form.
    Transform(TransformArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Pivot,
    Ludwig,
    HoffmanKarp,
    Oracle,
    OrderEnum,
}

impl From<AlgorithmArg> for Algorithm {
    fn from(a: AlgorithmArg) -> Self {
        match a {
            AlgorithmArg::Pivot => Algorithm::Pivot,
            AlgorithmArg::Ludwig => Algorithm::Ludwig,
            AlgorithmArg::HoffmanKarp => Algorithm::HoffmanKarp,
            AlgorithmArg::Oracle => Algorithm::Oracle,
            AlgorithmArg::OrderEnum => Algorithm::OrderEnum,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    /// Game file, or `-` for stdin.
    input: String,
    #[arg(long, value_enum, default_value = "pivot")]
    algorithm: AlgorithmArg,
    #[arg(long, env = "SSG_SEED", default_value_t = 0)]
    seed: u64,
    /// Starting order of the random nodes, e.g. "[3,1,2]".
    #[arg(long)]
    t0: Option<String>,
    /// Pair order, e.g. "{1,2},{2,3},{1,3}"; sampled from the seed if absent.
    #[arg(long)]
    theta: Option<String>,
    /// Starting MAX strategy, e.g. "M->r1".
    #[arg(long)]
    sigma0: Option<String>,
    /// MAX node order by node id, e.g. "[0,4,2]"; sampled from the seed if absent.
    #[arg(long)]
    node_order: Option<String>,
    /// Write the trace to this file.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Re-run the inputs recorded in a trace and compare.
    #[arg(long, conflicts_with_all = ["t0", "theta", "sigma0", "node_order", "trace"])]
    replay: Option<PathBuf>,
    /// Print the summary as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct GenArgs {
    /// JSON file with generator parameters; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long)]
    n_min: Option<usize>,
    /// Number of random nodes.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    n_sinks: Option<usize>,
    #[arg(long)]
    max_outdegree: Option<usize>,
    #[arg(long)]
    denominator_bound: Option<u64>,
    #[arg(long)]
    sink_min: Option<String>,
    #[arg(long)]
    sink_max: Option<String>,
    #[arg(long)]
    min_sink_mass: Option<String>,
    #[arg(long, env = "SSG_SEED")]
    seed: Option<u64>,
    /// Allow arcs that break canonical form.
    #[arg(long)]
    no_canonical: bool,
    #[arg(long)]
    max_binary: bool,
    #[arg(long)]
    globally_stopping: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchAlgorithm {
    Pivot,
    Ludwig,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, default_value = "pivot")]
    algorithm: BenchAlgorithm,
    /// Comma-separated sizes: k for pivot, MAX node count for ludwig.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    games: usize,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    #[arg(long, env = "SSG_SEED", default_value_t = 0)]
    seed: u64,
    /// One JSON object per row instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct CheckArgs {
    input: String,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformArg {
    Canonical,
    MaxBinary,
}

#[derive(Args)]
struct TransformArgs {
    input: String,
    #[arg(long, value_enum)]
    to: TransformArg,
    /// Sink mass added to every random node by the canonical transform.
    #[arg(long, default_value = "1/1000")]
    epsilon: String,
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Write the old-to-new node mapping as JSON to this file.
    #[arg(long)]
    mapping: Option<PathBuf>,
}

fn rational_arg(name: &str, text: &str) -> CliResult<Rational> {
    parse_rational(text).ok_or_else(|| CliError::parse(format!("{name}: not a rational: {text:?}")))
}

fn emit(output: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match output {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::precondition(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run_solve(a: SolveArgs) -> CliResult<()> {
    let game = commands::load_game(&commands::read_input(&a.input)?)?;
    if let Some(path) = &a.replay {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
        let steps = commands::replay(&game, &text)?;
        println!("replay identical ({steps} steps)");
        return Ok(());
    }
    let req = SolveRequest {
        algorithm: a.algorithm.into(),
        seed: a.seed,
        t0: a.t0,
        theta: a.theta,
        sigma0: a.sigma0,
        node_order: a.node_order,
    };
    let (trace, summary) = commands::solve(&game, &req)?;
    if let Some(path) = &a.trace {
        emit(Some(path), &trace.to_text())?;
    }
    if a.json {
        println!("{}", serde_json::to_string(&summary).expect("summary serializes"));
    } else {
        print!("{}", summary.to_text());
    }
    Ok(())
}

fn run_gen(a: GenArgs) -> CliResult<()> {
    let mut p = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<GenParams>(&text).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?
        }
        None => GenParams::default(),
    };
    p.n_max = a.n_max.unwrap_or(p.n_max);
    p.n_min = a.n_min.unwrap_or(p.n_min);
    p.k = a.k.unwrap_or(p.k);
    p.n_sinks = a.n_sinks.unwrap_or(p.n_sinks);
    p.max_outdegree = a.max_outdegree.unwrap_or(p.max_outdegree);
    p.prob_denominator_bound = a.denominator_bound.unwrap_or(p.prob_denominator_bound);
    if let Some(t) = &a.sink_min {
        p.sink_value_min = rational_arg("--sink-min", t)?;
    }
    if let Some(t) = &a.sink_max {
        p.sink_value_max = rational_arg("--sink-max", t)?;
    }
    if let Some(t) = &a.min_sink_mass {
        p.min_sink_mass = rational_arg("--min-sink-mass", t)?;
    }
    p.seed = a.seed.unwrap_or(p.seed);
    p.canonical &= !a.no_canonical;
    p.max_binary |= a.max_binary;
    p.globally_stopping |= a.globally_stopping;
    emit(a.output.as_ref(), &commands::gen(&p)?)
}

fn run_bench(a: BenchArgs) -> CliResult<()> {
    if !a.json {
        println!("{}", BenchRow::HEADER);
    }
    for &size in &a.sizes {
        let row = match a.algorithm {
            BenchAlgorithm::Pivot => bench_pivot(size, a.games, a.runs, a.seed)?,
            BenchAlgorithm::Ludwig => bench_ludwig(size, a.games, a.runs, a.seed)?,
        };
        if a.json {
            println!("{}", serde_json::to_string(&row).expect("row serializes"));
        } else {
            println!("{}", row.to_text());
        }
    }
    Ok(())
}

fn run_check(a: CheckArgs) -> CliResult<()> {
    let report = commands::check(&commands::read_input(&a.input)?)?;
    if a.json {
        println!("{}", serde_json::to_string(&report).expect("report serializes"));
    } else {
        print!("{}", report.to_text());
    }
    Ok(())
}

fn run_transform(a: TransformArgs) -> CliResult<()> {
    let game = commands::load_game(&commands::read_input(&a.input)?)?;
    let epsilon = rational_arg("--epsilon", &a.epsilon)?;
    let which = match a.to {
        TransformArg::Canonical => Transform::Canonical,
        TransformArg::MaxBinary => Transform::MaxBinary,
    };
    let (text, mapping) = commands::transform(&game, which, &epsilon)?;
    if let Some(path) = &a.mapping {
        let json = serde_json::json!({ "mapping": mapping }).to_string() + "\n";
        emit(Some(path), &json)?;
    }
    emit(a.output.as_ref(), &text)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Gen(a) => run_gen(a),
        Command::Bench(a) => run_bench(a),
        Command::Check(a) => run_check(a),
        Command::Transform(a) => run_transform(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code as u8)
        }
    }
}
