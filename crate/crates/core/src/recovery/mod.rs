//! Failure recovery strategies over a shared relocation engine.
//!
//! Every strategy starts from a pre-failure [`Topology`] and a
//! [`FailureEvent`], and produces a [`RecoveryReport`] holding the ordered
//! relocations and protocol messages plus the final snapshot.
//!
//! Message accounting: one broadcast counts as one message regardless of
//! how many neighbors hear it. Heartbeats are not counted; a failure event
//! only records how many heartbeat slots went missing.

mod dara;
mod engine;
mod ledir;
mod rim;

use crate::geometry::{GeometryError, Position};
use crate::topology::{NodeId, Topology, TopologyError};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub use dara::{dara1c_recover, dara2c_recover};
pub use ledir::ledir_recover;
pub use rim::rim_recover;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("heartbeat_misses must be positive")]
    InvalidHeartbeatMisses,
    #[error("pre-failure topology is not connected")]
    PreFailureDisconnected,
    #[error("pre-failure topology is not biconnected")]
    NotBiconnected,
    #[error("no candidates to select from")]
    EmptyCandidates,
    #[error("relocation cascade did not settle within {0} rounds")]
    RoundLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Rim,
    Dara1c,
    Dara2c,
    Ledir,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Rim, Algorithm::Dara1c, Algorithm::Dara2c, Algorithm::Ledir];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Rim => "rim",
            Algorithm::Dara1c => "dara1c",
            Algorithm::Dara2c => "dara2c",
            Algorithm::Ledir => "ledir",
        }
    }

    pub fn is_dara(&self) -> bool {
        matches!(self, Algorithm::Dara1c | Algorithm::Dara2c)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rim" => Ok(Algorithm::Rim),
            "dara1c" => Ok(Algorithm::Dara1c),
            "dara2c" => Ok(Algorithm::Dara2c),
            "ledir" => Ok(Algorithm::Ledir),
            other => Err(format!("unknown algorithm '{other}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MessageKind {
    Hello,
    Heartbeat,
    Moving,
    Recovered,
    NotifyChild,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Broadcast,
    Unicast(NodeId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub kind: MessageKind,
    pub sender: NodeId,
    pub scope: Scope,
    /// Intended destination for MOVING / NOTIFY_CHILD.
    pub payload: Option<Position>,
    /// Position in the run's combined message/relocation sequence.
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureEvent {
    pub failed: NodeId,
    pub failed_position: Position,
    /// Live 1-hop neighbors of the failed node at failure time.
    pub detected_by: BTreeSet<NodeId>,
    /// Absent heartbeat observations (not protocol messages).
    pub missed_heartbeats: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RelocationCause {
    ReplaceFailed,
    CascadeChild,
    InwardMotion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Relocation {
    pub node: NodeId,
    pub from: Position,
    pub to: Position,
    pub cause: RelocationCause,
    /// Index among the run's relocations.
    pub order: usize,
    /// Position in the run's combined message/relocation sequence.
    pub step: usize,
}

impl Relocation {
    pub fn length(&self) -> f64 {
        self.from.distance(&self.to)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub algorithm: Algorithm,
    pub event: FailureEvent,
    pub relocations: Vec<Relocation>,
    pub messages: Vec<Message>,
    pub pre_topology: Topology,
    pub post_topology: Topology,
    pub recovered: bool,
    /// Cut vertices left in the final topology when a 2-connectivity
    /// restoration did not succeed.
    pub residual_cut_vertices: Vec<NodeId>,
}

impl RecoveryReport {
    pub fn failed(&self) -> NodeId {
        self.event.failed
    }

    pub fn relocated_nodes(&self) -> BTreeSet<NodeId> {
        self.relocations.iter().map(|r| r.node).collect()
    }

    pub fn total_distance(&self) -> f64 {
        self.relocations.iter().map(Relocation::length).sum()
    }
}

/// Best-candidate ranking record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateRank {
    pub id: NodeId,
    pub degree: usize,
    pub dist_to_failed: f64,
}

impl CandidateRank {
    /// Least degree, then closest, then highest id.
    pub fn preference(&self, other: &Self) -> Ordering {
        self.degree
            .cmp(&other.degree)
            .then_with(|| self.dist_to_failed.total_cmp(&other.dist_to_failed))
            .then_with(|| other.id.cmp(&self.id))
    }
}

pub fn select_best_candidate(candidates: &[CandidateRank]) -> Result<NodeId, RecoveryError> {
    candidates
        .iter()
        .min_by(|a, b| a.preference(b))
        .map(|c| c.id)
        .ok_or(RecoveryError::EmptyCandidates)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineParams {
    /// Consecutive missed heartbeats before a neighbor declares failure.
    pub heartbeat_misses: u32,
}

impl Default for EngineParams {
    fn default() -> Self {
        Self { heartbeat_misses: 3 }
    }
}

/// Heartbeat-based failure detection: the failed node's live neighbors
/// notice `heartbeat_misses` silent periods each.
pub fn detect_failure(topo: &Topology, failed: NodeId, heartbeat_misses: u32) -> Result<FailureEvent, RecoveryError> {
    if heartbeat_misses == 0 {
        return Err(RecoveryError::InvalidHeartbeatMisses);
    }
    let node = topo.node(failed).ok_or(TopologyError::UnknownNode(failed))?;
    if !node.alive {
        return Err(TopologyError::DeadNode(failed).into());
    }
    let detected_by: BTreeSet<NodeId> = topo.neighbors(failed).into_iter().collect();
    Ok(FailureEvent {
        failed,
        failed_position: node.position,
        missed_heartbeats: u64::from(heartbeat_misses) * detected_by.len() as u64,
        detected_by,
    })
}

/// Fails `failed` in `topo` and recovers with `strategy`.
pub fn run_recovery(
    topo: &Topology,
    failed: NodeId,
    strategy: Algorithm,
    params: EngineParams,
) -> Result<RecoveryReport, RecoveryError> {
    let event = detect_failure(topo, failed, params.heartbeat_misses)?;
    match strategy {
        Algorithm::Rim => rim_recover(topo, &event),
        Algorithm::Dara1c => dara1c_recover(topo, &event),
        Algorithm::Dara2c => dara2c_recover(topo, &event),
        Algorithm::Ledir => ledir_recover(topo, &event),
    }
}
