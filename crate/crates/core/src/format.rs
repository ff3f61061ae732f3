//! Line-delimited JSON documents for games and solver traces.
//!
//! A game file is a header line followed by one line per node, in id order.
//! A trace file is a header line, one line per step and a closing result
//! line. Probabilities and values are always `"n/d"` strings, and every
//! record serializes its fields in declaration order, so printing a parsed
//! canonical file reproduces it byte for byte.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SsgError};
use crate::game::{Node, NodeId, NodeKind, Ssg, Strategy, Values};
use crate::ludwig::SwitchTrace;
use crate::pivot::PivotTrace;
use crate::scalar::{format_rational, parse_rational};
use crate::Rational;

pub const GAME_FORMAT: &str = "ssg-game";
pub const TRACE_FORMAT: &str = "ssg-trace";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameHeader {
    pub format: String,
    pub version: u32,
    pub nodes: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindTag {
    Max,
    Min,
    Random,
    Sink,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeRecord {
    pub id: usize,
    pub label: String,
    pub kind: KindTag,
    /// Successors of a MAX or MIN node; for a sink only when it differs from
    /// the self-loop.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub succ: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<Vec<(usize, String)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

fn parse_error(line: usize, msg: impl std::fmt::Display) -> SsgError {
    SsgError::InvalidGame(format!("line {line}: {msg}"))
}

fn ids(v: &[NodeId]) -> Vec<usize> {
    v.iter().map(|x| x.0).collect()
}

/// Canonical text of a game. Does not validate.
pub fn game_to_text(game: &Ssg<Rational>) -> String {
    let header = GameHeader { format: GAME_FORMAT.into(), version: FORMAT_VERSION, nodes: game.len() };
    let mut out = serde_json::to_string(&header).expect("header serializes");
    out.push('\n');
    for x in game.ids() {
        let label = game.label(x).to_string();
        let record = match game.node(x) {
            Node::Max(s) | Node::Min(s) => NodeRecord {
                id: x.0,
                label,
                kind: if game.kind(x) == NodeKind::Max { KindTag::Max } else { KindTag::Min },
                succ: Some(ids(s)),
                dist: None,
                value: None,
            },
            Node::Random(d) => NodeRecord {
                id: x.0,
                label,
                kind: KindTag::Random,
                succ: None,
                dist: Some(d.iter().map(|(y, p)| (y.0, format_rational(p))).collect()),
                value: None,
            },
            Node::Sink { value, arcs } => NodeRecord {
                id: x.0,
                label,
                kind: KindTag::Sink,
                succ: (arcs.as_slice() != [x]).then(|| ids(arcs)),
                dist: None,
                value: Some(format_rational(value)),
            },
        };
        out.push_str(&serde_json::to_string(&record).expect("node serializes"));
        out.push('\n');
    }
    out
}

/// Parses a game file without validating the game itself; blank lines are
/// skipped.
pub fn parse_game_unchecked(text: &str) -> Result<Ssg<Rational>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (n0, first) = lines.next().ok_or_else(|| parse_error(1, "empty file"))?;
    let header: GameHeader = serde_json::from_str(first).map_err(|e| parse_error(n0 + 1, e))?;
    if header.format != GAME_FORMAT || header.version != FORMAT_VERSION {
        return Err(parse_error(n0 + 1, format!("expected {GAME_FORMAT} version {FORMAT_VERSION}")));
    }
    let mut nodes = Vec::with_capacity(header.nodes);
    let mut labels = Vec::with_capacity(header.nodes);
    for (n, line) in lines {
        let r: NodeRecord = serde_json::from_str(line).map_err(|e| parse_error(n + 1, e))?;
        if r.id != nodes.len() {
            return Err(parse_error(n + 1, format!("expected node id {}, found {}", nodes.len(), r.id)));
        }
        let to_ids = |v: Vec<usize>| v.into_iter().map(NodeId).collect::<Vec<_>>();
        let node = match r.kind {
            KindTag::Max | KindTag::Min => {
                let succ = to_ids(r.succ.ok_or_else(|| parse_error(n + 1, "missing succ"))?);
                if r.kind == KindTag::Max { Node::Max(succ) } else { Node::Min(succ) }
            }
            KindTag::Random => {
                let dist = r.dist.ok_or_else(|| parse_error(n + 1, "missing dist"))?;
                let mut out = Vec::with_capacity(dist.len());
                for (y, p) in dist {
                    let p = parse_rational(&p).ok_or_else(|| parse_error(n + 1, format!("not a rational: {p:?}")))?;
                    out.push((NodeId(y), p));
                }
                Node::Random(out)
            }
            KindTag::Sink => {
                let v = r.value.ok_or_else(|| parse_error(n + 1, "missing value"))?;
                let value = parse_rational(&v).ok_or_else(|| parse_error(n + 1, format!("not a rational: {v:?}")))?;
                let arcs = r.succ.map(to_ids).unwrap_or_else(|| vec![NodeId(r.id)]);
                Node::Sink { value, arcs }
            }
        };
        nodes.push(node);
        labels.push(r.label);
    }
    if nodes.len() != header.nodes {
        return Err(parse_error(0, format!("header announces {} nodes, found {}", header.nodes, nodes.len())));
    }
    for (x, node) in nodes.iter().enumerate() {
        let out_of_range = match node {
            Node::Max(s) | Node::Min(s) | Node::Sink { arcs: s, .. } => s.iter().any(|y| y.0 >= nodes.len()),
            Node::Random(d) => d.iter().any(|(y, _)| y.0 >= nodes.len()),
        };
        if out_of_range {
            return Err(parse_error(x + 2, "successor id out of range"));
        }
    }
    Ok(Ssg::from_parts(nodes, labels))
}

/// Parses and validates a game file.
pub fn parse_game(text: &str) -> Result<Ssg<Rational>> {
    let game = parse_game_unchecked(text)?;
    Ssg::new(game.nodes().to_vec(), game.labels().to_vec())
}

/// SHA-256 of the canonical text, hex encoded.
pub fn game_hash(game: &Ssg<Rational>) -> String {
    hex::encode(Sha256::digest(game_to_text(game).as_bytes()))
}

/// Parses `label->label,...`.
pub fn parse_strategy(game: &Ssg<Rational>, text: &str) -> Result<Strategy> {
    let mut s = Strategy::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (a, b) = part
            .split_once("->")
            .ok_or_else(|| SsgError::InvalidParams(format!("expected label->label, found {part:?}")))?;
        let find = |l: &str| game.find(l.trim()).ok_or_else(|| SsgError::InvalidParams(format!("unknown label {l:?}")));
        s.set(find(a)?, find(b)?);
    }
    Ok(s)
}

pub fn values_text(values: &[Rational]) -> Vec<String> {
    values.iter().map(format_rational).collect()
}

/// Solver inputs that fully determine a run.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceHeader {
    pub format: String,
    pub version: u32,
    pub algorithm: String,
    pub seed: Option<u64>,
    /// Pair order, verbatim.
    pub theta: Option<String>,
    /// MAX node order, verbatim.
    pub node_order: Option<String>,
    pub t0: Option<String>,
    pub sigma0: Option<String>,
    pub game_hash: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceStep {
    pub index: usize,
    /// Current order of the random nodes (order-based solvers).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<String>,
    /// Current MAX strategy (strategy-based solvers).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strategy: Option<String>,
    /// Values of the random nodes, or of every node for strategy solvers.
    pub values: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub control_values: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switched: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceResult {
    pub values: Vec<String>,
    pub sigma: String,
    pub tau: String,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "lowercase")]
pub enum TraceRecord {
    Header(TraceHeader),
    Step(TraceStep),
    Result(TraceResult),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceFile {
    pub header: TraceHeader,
    pub steps: Vec<TraceStep>,
    pub result: Option<TraceResult>,
}

impl TraceFile {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut push = |r: TraceRecord| {
            out.push_str(&serde_json::to_string(&r).expect("record serializes"));
            out.push('\n');
        };
        push(TraceRecord::Header(self.header.clone()));
        for s in &self.steps {
            push(TraceRecord::Step(s.clone()));
        }
        if let Some(r) = &self.result {
            push(TraceRecord::Result(r.clone()));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut header = None;
        let mut steps = Vec::new();
        let mut result = None;
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let record: TraceRecord = serde_json::from_str(line).map_err(|e| parse_error(n + 1, e))?;
            match record {
                TraceRecord::Header(h) if header.is_none() && n == 0 => header = Some(h),
                TraceRecord::Step(s) if header.is_some() && result.is_none() => steps.push(s),
                TraceRecord::Result(r) if header.is_some() && result.is_none() => result = Some(r),
                _ => return Err(parse_error(n + 1, "record out of place")),
            }
        }
        let header = header.ok_or_else(|| parse_error(1, "missing header"))?;
        if header.format != TRACE_FORMAT || header.version != FORMAT_VERSION {
            return Err(parse_error(1, format!("expected {TRACE_FORMAT} version {FORMAT_VERSION}")));
        }
        Ok(TraceFile { header, steps, result })
    }
}

impl TraceHeader {
    pub fn new(algorithm: &str, game: &Ssg<Rational>) -> Self {
        TraceHeader {
            format: TRACE_FORMAT.into(),
            version: FORMAT_VERSION,
            algorithm: algorithm.into(),
            seed: None,
            theta: None,
            node_order: None,
            t0: None,
            sigma0: None,
            game_hash: game_hash(game),
        }
    }
}

/// One step per evaluated order.
pub fn pivot_steps(game: &Ssg<Rational>, trace: &PivotTrace<Rational>) -> Vec<TraceStep> {
    trace
        .steps
        .iter()
        .enumerate()
        .map(|(index, s)| TraceStep {
            index,
            order: Some(s.order.to_string()),
            strategy: None,
            values: values_text(&s.ran),
            control_values: Some(values_text(&s.control)),
            forcing: Some(forcing_text(game, &s.sigma_t, &s.tau_t)),
            pivot: s.pivot.map(|c| c.node),
            switched: None,
        })
        .collect()
}

fn forcing_text(game: &Ssg<Rational>, sigma: &Strategy, tau: &Strategy) -> String {
    let mut all: Vec<(NodeId, NodeId)> = sigma.iter().chain(tau.iter()).collect();
    all.sort();
    all.into_iter()
        .map(|(x, y)| format!("{}->{}", game.label(x), game.label(y)))
        .collect::<Vec<_>>()
        .join(",")
}

/// One step per switch, recording the strategy before it and its values.
pub fn switch_steps(game: &Ssg<Rational>, sigma0: &Strategy, trace: &SwitchTrace<Rational>) -> Vec<TraceStep> {
    let mut before = sigma0.clone();
    let mut out = Vec::with_capacity(trace.steps.len());
    for (index, s) in trace.steps.iter().enumerate() {
        out.push(TraceStep {
            index,
            order: None,
            strategy: Some(before.describe(game)),
            values: values_text(s.values.as_slice()),
            control_values: None,
            forcing: None,
            pivot: None,
            switched: Some(s.switched.iter().map(|&x| game.label(x).to_string()).collect()),
        });
        before = s.strategy.clone();
    }
    out
}

pub fn result_record(game: &Ssg<Rational>, values: &Values<Rational>, sigma: &Strategy, tau: &Strategy, steps: usize) -> TraceResult {
    TraceResult {
        values: values_text(values.as_slice()),
        sigma: sigma.describe(game),
        tau: tau.describe(game),
        steps,
    }
}
