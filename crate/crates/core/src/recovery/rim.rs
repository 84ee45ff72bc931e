//! Recovery through inward motion.

use super::engine::{Engine, Start};
use super::{Algorithm, FailureEvent, MessageKind, RecoveryError, RecoveryReport, RelocationCause};
use crate::geometry::{approach, distance};
use crate::topology::{NodeId, Topology};
use std::collections::BTreeSet;

/// Neighbors of the failed node move straight toward its position, stopping
/// r/2 away, which puts every pair of them within r of each other. Nodes
/// that lose a link to a mover then follow it, one cascade round at a time.
/// Every node moves at most once.
pub fn rim_recover(topo: &Topology, event: &FailureEvent) -> Result<RecoveryReport, RecoveryError> {
    let mut engine = match Engine::start(Algorithm::Rim, topo, event, true)? {
        Start::Done(report) => return Ok(report),
        Start::Proceed(engine) => engine,
    };
    if !engine.failure_partitions() {
        return Ok(engine.finish_connected());
    }

    let half = engine.range() / 2.0;
    let target = event.failed_position;
    let mut moved = BTreeSet::new();

    for &id in &event.detected_by {
        let from = engine.position(id)?;
        if distance(from, target) <= half {
            continue;
        }
        let to = approach(from, target, half)?;
        engine.broadcast(MessageKind::Moving, id, Some(to));
        if engine.relocate(id, to, RelocationCause::InwardMotion)? {
            moved.insert(id);
        }
    }

    loop {
        // Nodes act on the state at the start of the round, in id order.
        let mut acting = Vec::new();
        for id in engine.current().live_ids() {
            if moved.contains(&id) {
                continue;
            }
            let moved_nbrs: Vec<NodeId> = engine
                .original_neighbors(id)
                .into_iter()
                .filter(|n| moved.contains(n))
                .collect();
            let mut lost = Vec::new();
            for &n in &moved_nbrs {
                if !engine.in_range(id, n)? {
                    lost.push(n);
                }
            }
            if !lost.is_empty() {
                acting.push((id, engine.reconnect_target(id, &moved_nbrs, &lost)?));
            }
        }
        if acting.is_empty() {
            break;
        }
        engine.next_round()?;
        for (id, to) in acting {
            engine.broadcast(MessageKind::Moving, id, Some(to));
            engine.relocate(id, to, RelocationCause::CascadeChild)?;
            moved.insert(id);
        }
    }

    Ok(engine.finish_connected())
}
