use super::{
    Algorithm, FailureEvent, Message, MessageKind, RecoveryError, RecoveryReport, Relocation,
    RelocationCause, Scope,
};
use crate::geometry::{approach, closest_point_within_all, Position};
use crate::topology::{is_connected, shortest_path_table, NodeId, Topology, TopologyError};
use std::collections::BTreeSet;

/// Mutable state of one recovery run. Each relocation produces a new
/// position in `current`; `pre` is never touched.
pub(super) struct Engine {
    algorithm: Algorithm,
    event: FailureEvent,
    pre: Topology,
    current: Topology,
    relocations: Vec<Relocation>,
    messages: Vec<Message>,
    rounds: usize,
}

/// What the engine decided before any strategy-specific work.
pub(super) enum Start {
    /// Nothing to recover; the report is final.
    Done(RecoveryReport),
    Proceed(Engine),
}

impl Engine {
    /// Marks the failed node dead. Failures with no live neighbors finish
    /// immediately with an empty report.
    pub(super) fn start(
        algorithm: Algorithm,
        pre: &Topology,
        event: &FailureEvent,
        require_connected: bool,
    ) -> Result<Start, RecoveryError> {
        if !pre.is_alive(event.failed) {
            return Err(match pre.node(event.failed) {
                None => TopologyError::UnknownNode(event.failed),
                Some(_) => TopologyError::DeadNode(event.failed),
            }
            .into());
        }
        let engine = Engine {
            algorithm,
            event: event.clone(),
            pre: pre.clone(),
            current: pre.with_failed(event.failed)?,
            relocations: Vec::new(),
            messages: Vec::new(),
            rounds: 0,
        };
        if event.detected_by.is_empty() {
            let recovered = is_connected(&engine.current);
            return Ok(Start::Done(engine.finish(recovered, Vec::new())));
        }
        if require_connected && !is_connected(pre) {
            return Err(RecoveryError::PreFailureDisconnected);
        }
        Ok(Start::Proceed(engine))
    }

    pub(super) fn current(&self) -> &Topology {
        &self.current
    }

    pub(super) fn event(&self) -> &FailureEvent {
        &self.event
    }

    pub(super) fn range(&self) -> f64 {
        self.pre.comm_range()
    }

    pub(super) fn position(&self, id: NodeId) -> Result<Position, RecoveryError> {
        Ok(self.current.position(id)?)
    }

    /// Whether the failure split the survivors, as judged by the failed
    /// node's neighbors from their routing tables: some pair of them can no
    /// longer reach each other.
    pub(super) fn failure_partitions(&self) -> bool {
        let srt = shortest_path_table(&self.current);
        let detectors: Vec<NodeId> = self.event.detected_by.iter().copied().collect();
        detectors
            .iter()
            .enumerate()
            .any(|(i, &a)| detectors[i + 1..].iter().any(|&b| !srt.reachable(a, b)))
    }

    /// Pre-failure neighbors of `id` other than the failed node.
    pub(super) fn original_neighbors(&self, id: NodeId) -> BTreeSet<NodeId> {
        self.pre
            .neighbors(id)
            .into_iter()
            .filter(|&n| n != self.event.failed)
            .collect()
    }

    pub(super) fn in_range(&self, a: NodeId, b: NodeId) -> Result<bool, RecoveryError> {
        Ok(self.current.in_range(self.position(a)?, self.position(b)?))
    }

    /// Counts one cascade round against the limit of N rounds.
    pub(super) fn next_round(&mut self) -> Result<(), RecoveryError> {
        self.rounds += 1;
        let limit = self.pre.len();
        if self.rounds > limit {
            return Err(RecoveryError::RoundLimit(limit));
        }
        Ok(())
    }

    pub(super) fn broadcast(&mut self, kind: MessageKind, sender: NodeId, payload: Option<Position>) {
        self.messages.push(Message {
            kind,
            sender,
            scope: Scope::Broadcast,
            payload,
            step: self.messages.len() + self.relocations.len(),
        });
    }

    /// Teleports `node` to `to`. Zero-length moves are not recorded.
    pub(super) fn relocate(&mut self, node: NodeId, to: Position, cause: RelocationCause) -> Result<bool, RecoveryError> {
        let from = self.position(node)?;
        if from == to {
            return Ok(false);
        }
        self.current.set_position(node, to)?;
        self.relocations.push(Relocation {
            node,
            from,
            to,
            cause,
            order: self.relocations.len(),
            step: self.messages.len() + self.relocations.len(),
        });
        Ok(true)
    }

    /// Destination for a node reconnecting to nodes that already moved.
    ///
    /// Prefers the closest point within range of every anchor; failing that,
    /// the closest point within range of the anchors it lost; failing that,
    /// approaches the nearest lost anchor to distance r.
    pub(super) fn reconnect_target(
        &self,
        node: NodeId,
        anchors: &[NodeId],
        lost: &[NodeId],
    ) -> Result<Position, RecoveryError> {
        let r = self.range();
        let from = self.position(node)?;
        let positions = |ids: &[NodeId]| -> Result<Vec<Position>, RecoveryError> {
            ids.iter().map(|&id| self.position(id)).collect()
        };
        let anchor_pos = positions(anchors)?;
        if let Some(p) = closest_point_within_all(from, &anchor_pos, r) {
            return Ok(p);
        }
        let lost_pos = positions(lost)?;
        if let Some(p) = closest_point_within_all(from, &lost_pos, r) {
            return Ok(p);
        }
        let nearest = lost_pos
            .iter()
            .copied()
            .min_by(|a, b| from.distance(a).total_cmp(&from.distance(b)))
            .ok_or(RecoveryError::EmptyCandidates)?;
        Ok(approach(from, nearest, r)?)
    }

    pub(super) fn finish(self, recovered: bool, residual_cut_vertices: Vec<NodeId>) -> RecoveryReport {
        RecoveryReport {
            algorithm: self.algorithm,
            event: self.event,
            relocations: self.relocations,
            messages: self.messages,
            pre_topology: self.pre,
            post_topology: self.current,
            recovered,
            residual_cut_vertices,
        }
    }

    /// Finishes a 1-connectivity strategy; success means one component.
    pub(super) fn finish_connected(self) -> RecoveryReport {
        let recovered = is_connected(&self.current);
        self.finish(recovered, Vec::new())
    }
}
