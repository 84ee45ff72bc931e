//! Least-disruptive topology repair.

use super::engine::{Engine, Start};
use super::{
    select_best_candidate, Algorithm, CandidateRank, FailureEvent, MessageKind, RecoveryError,
    RecoveryReport, RelocationCause,
};
use crate::geometry::distance;
use crate::topology::{blocks_after_removal, smallest_block, NodeId, Topology};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

/// Moves only the smallest block left behind by a failed cut vertex.
///
/// The block's gateway (its neighbor of the failed node) takes the failed
/// node's place. The rest of the block is then visited breadth-first from
/// the gateway; a node that lost a link to an already settled node moves to
/// the closest spot within range of all of them. Links of the block are
/// kept, and the gateway inherits every link of the failed node, so no
/// shortest path among survivors grows.
pub fn ledir_recover(topo: &Topology, event: &FailureEvent) -> Result<RecoveryReport, RecoveryError> {
    let mut engine = match Engine::start(Algorithm::Ledir, topo, event, true)? {
        Start::Done(report) => return Ok(report),
        Start::Proceed(engine) => engine,
    };
    if !engine.failure_partitions() {
        return Ok(engine.finish_connected());
    }

    let blocks = blocks_after_removal(engine.current(), event.failed)?;
    let block = smallest_block(&blocks)?.clone();

    let mut ranks = Vec::new();
    for &id in event.detected_by.intersection(&block) {
        ranks.push(CandidateRank {
            id,
            degree: engine.current().degree(id),
            dist_to_failed: distance(engine.position(id)?, event.failed_position),
        });
    }
    let gateway = select_best_candidate(&ranks)?;

    engine.next_round()?;
    engine.broadcast(MessageKind::Moving, gateway, Some(event.failed_position));
    engine.relocate(gateway, event.failed_position, RelocationCause::ReplaceFailed)?;
    engine.broadcast(MessageKind::Recovered, gateway, None);

    // Links to preserve inside the block. Neighbors of the failed node now
    // owe their link to the gateway standing in its place.
    let mut links: BTreeMap<NodeId, BTreeSet<NodeId>> = block
        .iter()
        .map(|&id| (id, engine.original_neighbors(id)))
        .collect();
    for &id in event.detected_by.intersection(&block) {
        if id != gateway {
            links.entry(id).or_default().insert(gateway);
            links.entry(gateway).or_default().insert(id);
        }
    }

    let mut settled = BTreeSet::from([gateway]);
    let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    let mut queue = VecDeque::from([gateway]);
    let mut order = Vec::new();
    while let Some(u) = queue.pop_front() {
        for &v in &links[&u] {
            if v != gateway && !parent.contains_key(&v) {
                parent.insert(v, u);
                order.push(v);
                queue.push_back(v);
            }
        }
    }

    for child in order {
        let anchors: Vec<NodeId> = links[&child]
            .iter()
            .copied()
            .filter(|n| settled.contains(n))
            .collect();
        let mut lost = Vec::new();
        for &a in &anchors {
            if !engine.in_range(child, a)? {
                lost.push(a);
            }
        }
        if !lost.is_empty() {
            // The breadth-first parent is always an anchor; keep it first in
            // the fallback so the child at least rejoins it.
            let bfs_parent = parent[&child];
            let fallback: Vec<NodeId> = if lost.contains(&bfs_parent) {
                vec![bfs_parent]
            } else {
                lost.clone()
            };
            let mut preferred = anchors.clone();
            preferred.sort_by_key(|&a| a != bfs_parent);
            let to = engine.reconnect_target(child, &preferred, &fallback)?;
            engine.next_round()?;
            engine.broadcast(MessageKind::NotifyChild, child, Some(to));
            engine.relocate(child, to, RelocationCause::CascadeChild)?;
        }
        settled.insert(child);
    }

    Ok(engine.finish_connected())
}
