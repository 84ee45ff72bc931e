//! Seeded experiment generation and batch execution.
//!
//! Every trial draws from its own ChaCha8 stream: the generator is seeded
//! with `seed` via `SeedableRng::seed_from_u64` and the stream number is the
//! trial index. Trials are therefore independent of execution order and
//! thread count.

use crate::geometry::Position;
use crate::metrics::{check_bounds, compute_metrics, BoundCheck, MetricSet, Stat};
use crate::recovery::{run_recovery, Algorithm, EngineParams, RecoveryError, RecoveryReport};
use crate::topology::{cut_vertices, is_biconnected, is_connected, is_cut_vertex, NodeId, Topology, TopologyError};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Resampling attempts before generation gives up.
pub const MAX_ATTEMPTS: usize = 1000;

/// Default communication range in meters.
pub const DEFAULT_RANGE: f64 = 100.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("infeasible density: {0}")]
    InfeasibleDensity(String),
    #[error("no acceptable topology after {attempts} attempts ({reason})")]
    GenerationFailed { attempts: usize, reason: String },
    #[error("topology has no cut vertex")]
    NoCutVertex,
    #[error(
        "trial {trial}: node {node} is not a cut vertex; its failure leaves the network connected, \
         so {strategies} would be a no-op with zero relocations. Fail a cut vertex instead \
         (cut vertices: {cuts}) or pick one at random with --fail-random-cut"
    )]
    NotCutVertex {
        trial: usize,
        node: NodeId,
        strategies: String,
        cuts: String,
    },
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("trial {trial}, {algorithm}: {source}")]
    Recovery {
        trial: usize,
        algorithm: Algorithm,
        #[source]
        source: RecoveryError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Density {
    Dense,
    Sparse,
}

impl fmt::Display for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Density::Dense => "dense",
            Density::Sparse => "sparse",
        })
    }
}

impl FromStr for Density {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dense" => Ok(Density::Dense),
            "sparse" => Ok(Density::Sparse),
            other => Err(format!("unknown density '{other}' (expected dense or sparse)")),
        }
    }
}

/// Average-degree bands that define the two density classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityTargets {
    pub dense_min: f64,
    pub sparse_min: f64,
    pub sparse_max: f64,
}

impl Default for DensityTargets {
    fn default() -> Self {
        Self {
            dense_min: 8.0,
            sparse_min: 2.0,
            sparse_max: 4.0,
        }
    }
}

impl DensityTargets {
    pub fn accepts(&self, density: Density, avg_degree: f64) -> bool {
        match density {
            Density::Dense => avg_degree >= self.dense_min,
            Density::Sparse => (self.sparse_min..=self.sparse_max).contains(&avg_degree),
        }
    }

    /// Degree the automatic area sizing aims for. Connected samples skew
    /// toward higher degree, so the sparse aim sits just above the band: at
    /// N = 40 that maximizes the share of samples that are both connected
    /// and inside the band (about 2.6%).
    fn aim(&self, density: Density) -> f64 {
        match density {
            Density::Dense => self.dense_min + 1.0,
            Density::Sparse => self.sparse_max + 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl FromStr for Area {
    type Err = String;

    /// Parses `WxH`, e.g. `500x400`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (w, h) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("area '{s}' must look like WxH"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| format!("area '{s}': {e}"))
        };
        Ok(Area {
            width: parse(w)?,
            height: parse(h)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub node_count: usize,
    pub comm_range: f64,
    /// Deployment area; sized from the density class when absent.
    pub area: Option<Area>,
    pub density: Density,
    pub seed: u64,
    pub trials: usize,
    pub strategies: Vec<Algorithm>,
    pub targets: DensityTargets,
    pub params: EngineParams,
}

impl ScenarioConfig {
    pub fn new(node_count: usize, density: Density, seed: u64, trials: usize) -> Self {
        Self {
            node_count,
            comm_range: DEFAULT_RANGE,
            area: None,
            density,
            seed,
            trials,
            strategies: Algorithm::ALL.to_vec(),
            targets: DensityTargets::default(),
            params: EngineParams::default(),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.node_count < 4 {
            return Err(ScenarioError::InvalidConfig(format!(
                "node count must be at least 4, got {}",
                self.node_count
            )));
        }
        if !(self.comm_range.is_finite() && self.comm_range > 0.0) {
            return Err(ScenarioError::InvalidConfig(format!(
                "communication range must be positive, got {}",
                self.comm_range
            )));
        }
        if let Some(a) = self.area {
            if !(a.width.is_finite() && a.height.is_finite() && a.width > 0.0 && a.height > 0.0) {
                return Err(ScenarioError::InvalidConfig(format!(
                    "area must be positive, got {}x{}",
                    a.width, a.height
                )));
            }
        }
        let max_degree = (self.node_count - 1) as f64;
        match self.density {
            Density::Dense if max_degree < self.targets.dense_min => {
                Err(ScenarioError::InfeasibleDensity(format!(
                    "{} nodes reach at most average degree {max_degree}, dense needs >= {}",
                    self.node_count, self.targets.dense_min
                )))
            }
            Density::Sparse if max_degree < self.targets.sparse_min => {
                Err(ScenarioError::InfeasibleDensity(format!(
                    "{} nodes cannot reach average degree {}",
                    self.node_count, self.targets.sparse_min
                )))
            }
            _ => Ok(()),
        }
    }

    /// The configured area, or a square sized so the expected average degree
    /// hits the density class.
    pub fn effective_area(&self) -> Area {
        self.area.unwrap_or_else(|| {
            let side = square_side_for_degree(self.node_count, self.comm_range, self.targets.aim(self.density));
            Area {
                width: side,
                height: side,
            }
        })
    }
}

/// Side of a square in which `n` uniform nodes have expected average degree
/// `degree`, including the border effect.
///
/// For a unit square and link radius `p <= 1`, the probability that two
/// uniform points are within `p` is `PI p^2 - 8/3 p^3 + 1/2 p^4`.
pub fn square_side_for_degree(n: usize, r: f64, degree: f64) -> f64 {
    let link_prob = |p: f64| PI * p * p - 8.0 / 3.0 * p.powi(3) + 0.5 * p.powi(4);
    let want = (degree / (n.saturating_sub(1).max(1)) as f64).min(1.0);
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..100 {
        let mid = (lo + hi) / 2.0;
        if link_prob(mid) < want {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    r / hi
}

pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_index);
    rng
}

fn sample_positions<R: Rng>(rng: &mut R, n: usize, area: Area) -> Vec<(NodeId, Position)> {
    (0..n)
        .map(|i| {
            let x = rng.gen::<f64>() * area.width;
            let y = rng.gen::<f64>() * area.height;
            (NodeId(i as u32), Position::new(x, y))
        })
        .collect()
}

fn generate_with<R: Rng>(config: &ScenarioConfig, rng: &mut R, need_cut_vertex: bool) -> Result<Topology, ScenarioError> {
    config.validate()?;
    let area = config.effective_area();
    let mut last = String::from("none sampled");
    for _ in 0..MAX_ATTEMPTS {
        let topo = Topology::new(config.comm_range, sample_positions(rng, config.node_count, area))?;
        if !is_connected(&topo) {
            last = "disconnected".into();
            continue;
        }
        let deg = topo.average_degree();
        if !config.targets.accepts(config.density, deg) {
            last = format!("average degree {deg:.2} outside the {} band", config.density);
            continue;
        }
        if need_cut_vertex && cut_vertices(&topo).is_empty() {
            last = "no cut vertex".into();
            continue;
        }
        return Ok(topo);
    }
    Err(ScenarioError::GenerationFailed {
        attempts: MAX_ATTEMPTS,
        reason: last,
    })
}

/// Connected uniform deployment meeting the density band, resampled until
/// it does. Deterministic in `(config.seed, trial_index)`.
pub fn generate_topology(config: &ScenarioConfig, trial_index: u64) -> Result<Topology, ScenarioError> {
    generate_with(config, &mut trial_rng(config.seed, trial_index), false)
}

/// A uniformly chosen cut vertex.
pub fn pick_failure<R: Rng>(topo: &Topology, rng: &mut R) -> Result<NodeId, ScenarioError> {
    let cuts: Vec<NodeId> = cut_vertices(topo).into_iter().collect();
    if cuts.is_empty() {
        return Err(ScenarioError::NoCutVertex);
    }
    Ok(cuts[rng.gen_range(0..cuts.len())])
}

/// Ring of actors spaced inside range, plus straight relay chains
/// ("chords") between random pairs of ring nodes. Resampled until
/// biconnected. Ring nodes get ids first, chord relays after.
pub fn generate_ring_with_chords<R: Rng>(
    ring_size: usize,
    chords: usize,
    comm_range: f64,
    rng: &mut R,
) -> Result<Topology, ScenarioError> {
    if ring_size < 4 {
        return Err(ScenarioError::InvalidConfig(format!("ring needs at least 4 nodes, got {ring_size}")));
    }
    let spacing = 0.8 * comm_range;
    let radius = spacing / (2.0 * (PI / ring_size as f64).sin());
    let step = 2.0 * PI / ring_size as f64;

    for _ in 0..MAX_ATTEMPTS {
        let mut pts: Vec<Position> = (0..ring_size)
            .map(|i| {
                let a = step * (i as f64 + rng.gen_range(-0.05..0.05));
                Position::new(radius * a.cos(), radius * a.sin())
            })
            .collect();
        for _ in 0..chords {
            let i = rng.gen_range(0..ring_size);
            let skip = rng.gen_range(2..=ring_size / 2);
            let j = (i + skip) % ring_size;
            let (a, b) = (pts[i], pts[j]);
            let len = a.distance(&b);
            let hops = (len / spacing).ceil() as usize;
            for k in 1..hops {
                let t = k as f64 / hops as f64;
                pts.push(Position::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t));
            }
        }
        let topo = Topology::new(
            comm_range,
            pts.into_iter().enumerate().map(|(i, p)| (NodeId(i as u32), p)),
        )?;
        if is_biconnected(&topo)? {
            return Ok(topo);
        }
    }
    Err(ScenarioError::GenerationFailed {
        attempts: MAX_ATTEMPTS,
        reason: "ring with chords not biconnected".into(),
    })
}

/// Nodes whose removal leaves at least one cut vertex behind.
pub fn two_connectivity_breakers(topo: &Topology) -> Vec<NodeId> {
    topo.live_ids()
        .into_iter()
        .filter(|&v| {
            topo.with_failed(v)
                .map(|t| !cut_vertices(&t).is_empty())
                .unwrap_or(false)
        })
        .collect()
}

/// Result of one strategy in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyOutcome {
    pub algorithm: Algorithm,
    /// False when the strategy's precondition rejected the input (DARA-2C on
    /// a network that is not biconnected).
    pub applicable: bool,
    pub recovered: bool,
    pub metrics: MetricSet,
    /// Absent when the node count is below what the bound needs.
    pub bounds: Option<BoundCheck>,
    #[serde(skip)]
    pub report: Option<RecoveryReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub trial: usize,
    pub failed: NodeId,
    pub node_count: usize,
    pub outcomes: Vec<StrategyOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchResult {
    pub trials: Vec<TrialResult>,
    pub summary: Vec<AlgorithmSummary>,
}

/// Runs every strategy against the same topology and failed node.
pub fn run_trial(
    trial: usize,
    topo: &Topology,
    failed: NodeId,
    strategies: &[Algorithm],
    params: EngineParams,
) -> Result<TrialResult, ScenarioError> {
    let mut outcomes = Vec::with_capacity(strategies.len());
    for &algorithm in strategies {
        let outcome = match run_recovery(topo, failed, algorithm, params) {
            Ok(report) => {
                let metrics = compute_metrics(&report);
                let bounds = check_bounds(&metrics, algorithm, topo.len(), topo.comm_range()).ok();
                StrategyOutcome {
                    algorithm,
                    applicable: true,
                    recovered: report.recovered,
                    metrics,
                    bounds,
                    report: Some(report),
                }
            }
            Err(RecoveryError::NotBiconnected) if algorithm == Algorithm::Dara2c => StrategyOutcome {
                algorithm,
                applicable: false,
                recovered: false,
                metrics: MetricSet::default(),
                bounds: None,
                report: None,
            },
            Err(source) => {
                return Err(ScenarioError::Recovery {
                    trial,
                    algorithm,
                    source,
                })
            }
        };
        outcomes.push(outcome);
    }
    Ok(TrialResult {
        trial,
        failed,
        node_count: topo.len(),
        outcomes,
    })
}

/// Which node fails in each trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureChoice {
    Node(NodeId),
    RandomCut,
}

/// Strategies that act only when the failure partitions the network.
fn partition_gated(strategies: &[Algorithm]) -> Vec<Algorithm> {
    strategies.iter().copied().filter(|&a| a != Algorithm::Dara2c).collect()
}

fn choose_failure(
    trial: usize,
    topo: &Topology,
    failure: FailureChoice,
    strategies: &[Algorithm],
    rng: &mut ChaCha8Rng,
) -> Result<NodeId, ScenarioError> {
    match failure {
        FailureChoice::RandomCut => pick_failure(topo, rng),
        FailureChoice::Node(node) => {
            let gated = partition_gated(strategies);
            if !gated.is_empty() && !is_cut_vertex(topo, node)? {
                let names: Vec<&str> = gated.iter().map(Algorithm::name).collect();
                let cuts: Vec<String> = cut_vertices(topo).iter().map(|c| c.0.to_string()).collect();
                return Err(ScenarioError::NotCutVertex {
                    trial,
                    node,
                    strategies: names.join("/"),
                    cuts: if cuts.is_empty() { "none".into() } else { cuts.join(", ") },
                });
            }
            Ok(node)
        }
    }
}

/// Generates `config.trials` topologies with a cut vertex, fails one at
/// random in each and runs every configured strategy.
pub fn run_batch(config: &ScenarioConfig) -> Result<BatchResult, ScenarioError> {
    run_generated(config, FailureChoice::RandomCut)
}

/// Like [`run_batch`], with the failed node chosen by `failure`. A fixed
/// node must be a cut vertex of every generated topology whenever a
/// partition-gated strategy is configured.
pub fn run_generated(config: &ScenarioConfig, failure: FailureChoice) -> Result<BatchResult, ScenarioError> {
    config.validate()?;
    let need_cut = failure == FailureChoice::RandomCut;
    let trials = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_rng(config.seed, i as u64);
            let topo = generate_with(config, &mut rng, need_cut)?;
            let failed = choose_failure(i, &topo, failure, &config.strategies, &mut rng)?;
            run_trial(i, &topo, failed, &config.strategies, config.params)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(finish_batch(trials, &config.strategies))
}

/// Repeats trials over one fixed topology. Random cut choices draw from the
/// trial's own stream.
pub fn run_fixed(
    topo: &Topology,
    failure: FailureChoice,
    strategies: &[Algorithm],
    seed: u64,
    trials: usize,
    params: EngineParams,
) -> Result<BatchResult, ScenarioError> {
    let results = (0..trials)
        .into_par_iter()
        .map(|i| {
            let failed = choose_failure(i, topo, failure, strategies, &mut trial_rng(seed, i as u64))?;
            run_trial(i, topo, failed, strategies, params)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(finish_batch(results, strategies))
}

fn finish_batch(trials: Vec<TrialResult>, strategies: &[Algorithm]) -> BatchResult {
    let summary = strategies
        .iter()
        .map(|&algorithm| {
            let runs: Vec<&StrategyOutcome> = trials
                .iter()
                .flat_map(|t| &t.outcomes)
                .filter(|o| o.algorithm == algorithm && o.applicable)
                .collect();
            summarize(algorithm, &runs)
        })
        .collect();
    BatchResult { trials, summary }
}

pub fn summarize(algorithm: Algorithm, runs: &[&StrategyOutcome]) -> AlgorithmSummary {
    let stat = |f: &dyn Fn(&MetricSet) -> f64| Stat::of(&runs.iter().map(|o| f(&o.metrics)).collect::<Vec<_>>());
    let recovered = runs.iter().filter(|o| o.recovered).count();
    AlgorithmSummary {
        algorithm,
        runs: runs.len(),
        relocated_nodes: stat(&|m| m.relocated_nodes as f64),
        total_distance: stat(&|m| m.total_distance),
        max_node_distance: stat(&|m| m.max_node_distance),
        messages: stat(&|m| m.exchanged_messages as f64),
        extended_paths: stat(&|m| m.extended_paths as f64),
        paths_not_extended: stat(&|m| m.paths_not_extended as f64),
        recovered_rate: if runs.is_empty() {
            0.0
        } else {
            recovered as f64 / runs.len() as f64
        },
    }
}
