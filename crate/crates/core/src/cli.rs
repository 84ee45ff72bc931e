//! Command-line front end: topology files, batch runs and result summaries.
//!
//! Three subcommands:
//!
//! - `generate` writes a random connected deployment as a topology file.
//! - `run` fails nodes, runs recovery strategies and writes one result row
//!   per (trial, strategy), optionally with a JSON trace of every run.
//! - `compare` aggregates result files and judges LeDiR against RIM.
//!
//! Exit codes: 0 success, 1 usage or validation error, 2 runtime error.

use crate::geometry::Position;
use crate::metrics::{overhead_verdict, relative_difference, Stat, Verdict, EQUALITY_TOLERANCE};
use crate::recovery::{Algorithm, EngineParams, MessageKind, RelocationCause, Scope};
use crate::scenarios::{
    generate_topology, run_fixed, run_generated, Area, BatchResult, Density, FailureChoice,
    ScenarioConfig, ScenarioError, DEFAULT_RANGE,
};
use crate::topology::{NodeId, Topology};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

/// Schema version written to topology, results and trace files.
pub const FORMAT_VERSION: u32 = 1;

/// Column header of a results CSV file.
pub const RESULTS_HEADER: &str = "trial,algorithm,failed_node,relocated_nodes,total_distance,\
max_node_distance,messages,extended_paths,paths_not_extended,recovered,nodes_bound_ok,\
node_distance_bound_ok,total_distance_bound_ok";

/// Comment line preceding the header of a results CSV file.
pub const RESULTS_COMMENT: &str = "# wsan-recover results version 1";

/// Environment variable capping the worker thread count.
pub const THREADS_ENV: &str = "WSAN_RECOVER_THREADS";

/// Significant digits used when printing distances.
const SIG_DIGITS: usize = 12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::GenerationFailed { .. } | ScenarioError::Recovery { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "wsan-recover", version, about = "Failure recovery simulator for wireless sensor-actor networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a random connected topology file.
    Generate(GenerateArgs),
    /// Fail nodes and run recovery strategies.
    Run(RunArgs),
    /// Summarize result files and compare LeDiR against RIM.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GenerationFlags {
    /// Number of actors [default: 40]
    #[arg(long)]
    pub nodes: Option<usize>,
    /// Communication range in meters [default: 100]
    #[arg(long)]
    pub range: Option<f64>,
    /// Density class of the deployment [default: dense]
    #[arg(long)]
    pub density: Option<Density>,
    /// Deployment area as WxH meters; sized from the density when omitted
    #[arg(long)]
    pub area: Option<Area>,
}

impl GenerationFlags {
    fn config(&self, seed: u64, trials: usize) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::new(self.nodes.unwrap_or(40), self.density.unwrap_or(Density::Dense), seed, trials);
        cfg.comm_range = self.range.unwrap_or(DEFAULT_RANGE);
        cfg.area = self.area;
        cfg
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub generation: GenerationFlags,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Topology file to write
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgoChoice {
    Rim,
    Dara1c,
    Dara2c,
    Ledir,
    All,
}

impl AlgoChoice {
    fn strategies(self) -> Vec<Algorithm> {
        match self {
            AlgoChoice::Rim => vec![Algorithm::Rim],
            AlgoChoice::Dara1c => vec![Algorithm::Dara1c],
            AlgoChoice::Dara2c => vec![Algorithm::Dara2c],
            AlgoChoice::Ledir => vec![Algorithm::Ledir],
            AlgoChoice::All => Algorithm::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Topology file to fail nodes in; generates one per trial when omitted
    #[arg(long, conflicts_with_all = ["nodes", "range", "density", "area"])]
    pub topology: Option<PathBuf>,
    #[command(flatten)]
    pub generation: GenerationFlags,
    /// Node to fail in every trial
    #[arg(long, conflicts_with = "fail_random_cut")]
    pub fail: Option<u32>,
    /// Fail a uniformly chosen cut vertex in every trial (the default)
    #[arg(long)]
    pub fail_random_cut: bool,
    #[arg(long, value_enum, default_value_t = AlgoChoice::All)]
    pub algo: AlgoChoice,
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Consecutive missed heartbeats before a failure is declared
    #[arg(long, default_value_t = 3)]
    pub heartbeat_misses: u32,
    /// Results file to write
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    /// Also write every run's ordered messages and relocations as JSON
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// Results files (CSV or JSON) to aggregate
    #[arg(long = "in", required = true, num_args = 1..)]
    pub inputs: Vec<PathBuf>,
    /// Summary CSV to write
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code. Diagnostics go to stderr.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Generate(args) => cmd_generate(&args),
        Command::Run(args) => cmd_run(&args),
        Command::Compare(args) => cmd_compare(&args),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got '{raw}'")))?;
    // A pool that is already initialized keeps its size.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    Ok(())
}

pub fn cmd_generate(args: &GenerateArgs) -> Result<(), CliError> {
    let config = args.generation.config(args.seed, 1);
    let topo = generate_topology(&config, 0)?;
    write_atomic(&args.out, topology_to_json(&topo).as_bytes())?;
    println!(
        "wrote {} nodes to {} (average degree {:.3})",
        topo.len(),
        args.out.display(),
        topo.average_degree()
    );
    Ok(())
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let strategies = args.algo.strategies();
    let failure = match args.fail {
        Some(id) => FailureChoice::Node(NodeId(id)),
        None => FailureChoice::RandomCut,
    };
    let params = EngineParams {
        heartbeat_misses: args.heartbeat_misses,
    };
    if params.heartbeat_misses == 0 {
        return Err(CliError::Usage("--heartbeat-misses must be positive".into()));
    }
    let batch = match &args.topology {
        Some(path) => {
            let topo = load_topology(path)?;
            if let FailureChoice::Node(id) = failure {
                if topo.node(id).is_none() {
                    return Err(CliError::Usage(format!(
                        "--fail {id}: no such node in {}",
                        path.display()
                    )));
                }
            }
            run_fixed(&topo, failure, &strategies, args.seed, args.trials, params)?
        }
        None => {
            let mut config = args.generation.config(args.seed, args.trials);
            config.strategies = strategies;
            config.params = params;
            run_generated(&config, failure)?
        }
    };
    let rows = result_rows(&batch);
    let body = match args.format {
        OutputFormat::Csv => rows_to_csv(&rows)?,
        OutputFormat::Json => rows_to_json(&rows)?,
    };
    write_atomic(&args.out, body.as_bytes())?;
    if let Some(trace) = &args.trace {
        let doc = trace_document(&batch);
        let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Runtime(e.to_string()))?;
        write_atomic(trace, (text + "\n").as_bytes())?;
    }
    let recovered = rows.iter().filter(|r| r.recovered).count();
    println!(
        "{} trials, {} rows ({} recovered) written to {}",
        batch.trials.len(),
        rows.len(),
        recovered,
        args.out.display()
    );
    Ok(())
}

pub fn cmd_compare(args: &CompareArgs) -> Result<(), CliError> {
    let mut rows = Vec::new();
    for path in &args.inputs {
        rows.extend(read_results(path)?);
    }
    if rows.is_empty() {
        return Err(CliError::Usage("result files contain no rows".into()));
    }
    let summary = summarize_rows(&rows);
    write_atomic(&args.out, summary_to_csv(&summary)?.as_bytes())?;
    print!("{}", summary_text(&summary));
    Ok(())
}

/// Writes `bytes` to a temporary file next to `path`, then renames it into
/// place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let fail = |e: std::io::Error| CliError::Runtime(format!("writing {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(fail)?;
    tmp.write_all(bytes).map_err(fail)?;
    tmp.as_file().sync_all().map_err(fail)?;
    tmp.persist(path).map_err(|e| fail(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TopologyFile {
    #[serde(default = "default_version")]
    pub version: u32,
    pub comm_range: f64,
    pub nodes: Vec<NodeRecord>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: u32,
    pub x: f64,
    pub y: f64,
}

fn default_version() -> u32 {
    FORMAT_VERSION
}

pub fn topology_to_json(topo: &Topology) -> String {
    let file = TopologyFile {
        version: FORMAT_VERSION,
        comm_range: topo.comm_range(),
        nodes: topo
            .nodes()
            .iter()
            .filter(|n| n.alive)
            .map(|n| NodeRecord {
                id: n.id.0,
                x: n.position.x,
                y: n.position.y,
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("topology serializes") + "\n"
}

/// Parses a topology document, reporting the offending line or field.
pub fn topology_from_json(text: &str) -> Result<Topology, String> {
    let file: TopologyFile = serde_json::from_str(text).map_err(|e| e.to_string())?;
    if file.version != FORMAT_VERSION {
        return Err(format!("version: unsupported value {} (expected {FORMAT_VERSION})", file.version));
    }
    if !(file.comm_range.is_finite() && file.comm_range > 0.0) {
        return Err(format!("comm_range: must be > 0, got {}", file.comm_range));
    }
    let mut seen = BTreeMap::new();
    for (i, n) in file.nodes.iter().enumerate() {
        if let Some(first) = seen.insert(n.id, i) {
            return Err(format!("nodes[{i}].id: duplicate id {} (first at nodes[{first}])", n.id));
        }
    }
    Topology::new(
        file.comm_range,
        file.nodes.iter().map(|n| (NodeId(n.id), Position::new(n.x, n.y))),
    )
    .map_err(|e| format!("nodes: {e}"))
}

pub fn load_topology(path: &Path) -> Result<Topology, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("reading {}: {e}", path.display())))?;
    topology_from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// One line of a results file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub trial: usize,
    pub algorithm: Algorithm,
    pub failed_node: u32,
    pub relocated_nodes: usize,
    pub total_distance: f64,
    pub max_node_distance: f64,
    pub messages: usize,
    pub extended_paths: usize,
    pub paths_not_extended: usize,
    pub recovered: bool,
    pub nodes_bound_ok: bool,
    pub node_distance_bound_ok: bool,
    pub total_distance_bound_ok: bool,
}

pub fn result_rows(batch: &BatchResult) -> Vec<ResultRow> {
    batch
        .trials
        .iter()
        .flat_map(|t| {
            t.outcomes.iter().map(move |o| {
                let b = o.bounds;
                ResultRow {
                    trial: t.trial,
                    algorithm: o.algorithm,
                    failed_node: t.failed.0,
                    relocated_nodes: o.metrics.relocated_nodes,
                    total_distance: o.metrics.total_distance,
                    max_node_distance: o.metrics.max_node_distance,
                    messages: o.metrics.exchanged_messages,
                    extended_paths: o.metrics.extended_paths,
                    paths_not_extended: o.metrics.paths_not_extended,
                    recovered: o.recovered,
                    nodes_bound_ok: b.is_some_and(|b| b.nodes_bound_ok),
                    node_distance_bound_ok: b.is_some_and(|b| b.node_distance_bound_ok),
                    total_distance_bound_ok: b.is_some_and(|b| b.total_distance_bound_ok),
                }
            })
        })
        .collect()
}

/// Fixed-point rendering with at least `digits` significant digits.
pub fn format_significant(v: f64, digits: usize) -> String {
    if v == 0.0 || !v.is_finite() {
        return format!("{:.*}", digits - 1, v);
    }
    let magnitude = v.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    format!("{v:.decimals$}")
}

fn csv_error(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("csv: {e}"))
}

pub fn rows_to_csv(rows: &[ResultRow]) -> Result<String, CliError> {
    let mut out = format!("{RESULTS_COMMENT}\n{RESULTS_HEADER}\n");
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    for r in rows {
        w.write_record([
            r.trial.to_string(),
            r.algorithm.name().to_string(),
            r.failed_node.to_string(),
            r.relocated_nodes.to_string(),
            format_significant(r.total_distance, SIG_DIGITS),
            format_significant(r.max_node_distance, SIG_DIGITS),
            r.messages.to_string(),
            r.extended_paths.to_string(),
            r.paths_not_extended.to_string(),
            r.recovered.to_string(),
            r.nodes_bound_ok.to_string(),
            r.node_distance_bound_ok.to_string(),
            r.total_distance_bound_ok.to_string(),
        ])
        .map_err(csv_error)?;
    }
    let body = w.into_inner().map_err(csv_error)?;
    out.push_str(&String::from_utf8(body).map_err(csv_error)?);
    Ok(out)
}

#[derive(Debug, Serialize, Deserialize)]
struct ResultsDocument {
    version: u32,
    rows: Vec<ResultRow>,
}

pub fn rows_to_json(rows: &[ResultRow]) -> Result<String, CliError> {
    let doc = ResultsDocument {
        version: FORMAT_VERSION,
        rows: rows.to_vec(),
    };
    serde_json::to_string_pretty(&doc)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Runtime(e.to_string()))
}

/// Parses a results file in either format.
pub fn parse_results(text: &str) -> Result<Vec<ResultRow>, String> {
    if text.trim_start().starts_with('{') {
        let doc: ResultsDocument = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if doc.version != FORMAT_VERSION {
            return Err(format!("unsupported results version {}", doc.version));
        }
        return Ok(doc.rows);
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| e.to_string())?;
    let header = header.iter().collect::<Vec<_>>().join(",");
    if header != RESULTS_HEADER {
        return Err(if header.is_empty() {
            "missing results header".to_string()
        } else {
            format!("unexpected header '{header}', expected '{RESULTS_HEADER}'")
        });
    }
    reader
        .deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| format!("row {}: {e}", i + 1)))
        .collect()
}

pub fn read_results(path: &Path) -> Result<Vec<ResultRow>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("reading {}: {e}", path.display())))?;
    parse_results(&text).map_err(|e| CliError::Usage(format!("{}: schema error: {e}", path.display())))
}

/// Aggregates of one algorithm over result rows.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowSummary {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub relocated_nodes: Stat,
    pub total_distance: Stat,
    pub max_node_distance: Stat,
    pub messages: Stat,
    pub extended_paths: Stat,
    pub paths_not_extended: Stat,
    pub recovered_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub metric: &'static str,
    pub ledir: f64,
    pub rim: f64,
    pub relative_difference: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub algorithms: Vec<RowSummary>,
    /// LeDiR against RIM; empty unless both are present.
    pub comparisons: Vec<Comparison>,
}

pub fn summarize_rows(rows: &[ResultRow]) -> Summary {
    let algos: BTreeSet<Algorithm> = rows.iter().map(|r| r.algorithm).collect();
    let algorithms: Vec<RowSummary> = algos
        .into_iter()
        .map(|algorithm| {
            let mine: Vec<&ResultRow> = rows.iter().filter(|r| r.algorithm == algorithm).collect();
            let stat = |f: fn(&ResultRow) -> f64| Stat::of(&mine.iter().map(|r| f(r)).collect::<Vec<_>>());
            RowSummary {
                algorithm,
                runs: mine.len(),
                relocated_nodes: stat(|r| r.relocated_nodes as f64),
                total_distance: stat(|r| r.total_distance),
                max_node_distance: stat(|r| r.max_node_distance),
                messages: stat(|r| r.messages as f64),
                extended_paths: stat(|r| r.extended_paths as f64),
                paths_not_extended: stat(|r| r.paths_not_extended as f64),
                recovered_rate: mine.iter().filter(|r| r.recovered).count() as f64 / mine.len() as f64,
            }
        })
        .collect();
    let find = |a: Algorithm| algorithms.iter().find(|s| s.algorithm == a);
    let comparisons = match (find(Algorithm::Ledir), find(Algorithm::Rim)) {
        (Some(l), Some(r)) => [
            ("relocated_nodes", l.relocated_nodes.mean, r.relocated_nodes.mean),
            ("total_distance", l.total_distance.mean, r.total_distance.mean),
            ("messages", l.messages.mean, r.messages.mean),
            ("extended_paths", l.extended_paths.mean, r.extended_paths.mean),
        ]
        .into_iter()
        .map(|(metric, ledir, rim)| Comparison {
            metric,
            ledir,
            rim,
            relative_difference: relative_difference(ledir, rim),
            verdict: overhead_verdict(ledir, rim, EQUALITY_TOLERANCE),
        })
        .collect(),
        _ => Vec::new(),
    };
    Summary {
        algorithms,
        comparisons,
    }
}

pub const SUMMARY_HEADER: &str = "algorithm,runs,relocated_nodes_mean,relocated_nodes_stddev,\
total_distance_mean,total_distance_stddev,max_node_distance_mean,max_node_distance_stddev,\
messages_mean,messages_stddev,extended_paths_mean,extended_paths_stddev,\
paths_not_extended_mean,paths_not_extended_stddev,recovered_rate";

pub fn summary_to_csv(summary: &Summary) -> Result<String, CliError> {
    let mut out = format!("# wsan-recover summary version {FORMAT_VERSION}\n{SUMMARY_HEADER}\n");
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    let f = |v: f64| format_significant(v, SIG_DIGITS);
    for s in &summary.algorithms {
        let mut rec = vec![s.algorithm.name().to_string(), s.runs.to_string()];
        for st in [
            s.relocated_nodes,
            s.total_distance,
            s.max_node_distance,
            s.messages,
            s.extended_paths,
            s.paths_not_extended,
        ] {
            rec.push(f(st.mean));
            rec.push(f(st.stddev));
        }
        rec.push(f(s.recovered_rate));
        w.write_record(&rec).map_err(csv_error)?;
    }
    let body = w.into_inner().map_err(csv_error)?;
    out.push_str(&String::from_utf8(body).map_err(csv_error)?);
    Ok(out)
}

pub fn summary_text(summary: &Summary) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<8} {:>5} {:>18} {:>22} {:>16} {:>18} {:>9}",
        "algo", "runs", "relocated", "total distance", "messages", "extended paths", "recovered"
    );
    for a in &summary.algorithms {
        let ms = |st: Stat| format!("{:.2} ± {:.2}", st.mean, st.stddev);
        let _ = writeln!(
            s,
            "{:<8} {:>5} {:>18} {:>22} {:>16} {:>18} {:>8.1}%",
            a.algorithm.name(),
            a.runs,
            ms(a.relocated_nodes),
            ms(a.total_distance),
            ms(a.messages),
            ms(a.extended_paths),
            100.0 * a.recovered_rate
        );
    }
    if summary.comparisons.is_empty() {
        let _ = writeln!(s, "\nLeDiR vs RIM: both are needed for a comparison");
    } else {
        let _ = writeln!(
            s,
            "\nLeDiR vs RIM (means within {:.0}% count as equal):",
            100.0 * EQUALITY_TOLERANCE
        );
        for c in &summary.comparisons {
            let _ = writeln!(
                s,
                "  {:<16} ledir {:>12.3}  rim {:>12.3}  diff {:>6.1}%  -> LeDiR {}",
                c.metric,
                c.ledir,
                c.rim,
                100.0 * c.relative_difference,
                c.verdict
            );
        }
    }
    s
}

#[derive(Debug, Serialize)]
struct TraceDocument {
    version: u32,
    runs: Vec<TraceRun>,
}

#[derive(Debug, Serialize)]
struct TraceRun {
    trial: usize,
    algorithm: Algorithm,
    failed_node: NodeId,
    applicable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    failed_position: Option<Position>,
    detected_by: Vec<NodeId>,
    missed_heartbeats: u64,
    recovered: bool,
    residual_cut_vertices: Vec<NodeId>,
    events: Vec<TraceEvent>,
}

#[derive(Debug, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum TraceEvent {
    Message {
        step: usize,
        kind: MessageKind,
        sender: NodeId,
        scope: Scope,
        payload: Option<Position>,
    },
    Relocation {
        step: usize,
        node: NodeId,
        from: Position,
        to: Position,
        cause: RelocationCause,
        length: f64,
    },
}

impl TraceEvent {
    fn step(&self) -> usize {
        match self {
            TraceEvent::Message { step, .. } | TraceEvent::Relocation { step, .. } => *step,
        }
    }
}

fn trace_document(batch: &BatchResult) -> TraceDocument {
    let mut runs = Vec::new();
    for t in &batch.trials {
        for o in &t.outcomes {
            let mut run = TraceRun {
                trial: t.trial,
                algorithm: o.algorithm,
                failed_node: t.failed,
                applicable: o.applicable,
                failed_position: None,
                detected_by: Vec::new(),
                missed_heartbeats: 0,
                recovered: o.recovered,
                residual_cut_vertices: Vec::new(),
                events: Vec::new(),
            };
            if let Some(rep) = &o.report {
                run.failed_position = Some(rep.event.failed_position);
                run.detected_by = rep.event.detected_by.iter().copied().collect();
                run.missed_heartbeats = rep.event.missed_heartbeats;
                run.residual_cut_vertices = rep.residual_cut_vertices.clone();
                run.events = rep
                    .messages
                    .iter()
                    .map(|m| TraceEvent::Message {
                        step: m.step,
                        kind: m.kind,
                        sender: m.sender,
                        scope: m.scope,
                        payload: m.payload,
                    })
                    .chain(rep.relocations.iter().map(|r| TraceEvent::Relocation {
                        step: r.step,
                        node: r.node,
                        from: r.from,
                        to: r.to,
                        cause: r.cause,
                        length: r.length(),
                    }))
                    .collect();
                run.events.sort_by_key(TraceEvent::step);
            }
            runs.push(run);
        }
    }
    TraceDocument {
        version: FORMAT_VERSION,
        runs,
    }
}
