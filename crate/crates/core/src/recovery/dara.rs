//! Distributed actor recovery: 1- and 2-connectivity variants.

use super::engine::{Engine, Start};
use super::{
    select_best_candidate, Algorithm, CandidateRank, FailureEvent, MessageKind, RecoveryError,
    RecoveryReport, RelocationCause,
};
use crate::geometry::{distance, Position};
use crate::topology::{cut_vertices, is_biconnected, NodeId, Topology};
use std::collections::{BTreeSet, VecDeque};

/// Replaces a failed cut vertex with its best-candidate neighbor, then
/// cascades: dependents left out of range of a mover elect their own best
/// candidate to take the spot it vacated.
pub fn dara1c_recover(topo: &Topology, event: &FailureEvent) -> Result<RecoveryReport, RecoveryError> {
    let mut engine = match Engine::start(Algorithm::Dara1c, topo, event, true)? {
        Start::Done(report) => return Ok(report),
        Start::Proceed(engine) => engine,
    };
    if !engine.failure_partitions() {
        return Ok(engine.finish_connected());
    }
    cascade(&mut engine)?;
    Ok(engine.finish_connected())
}

/// Same replacement and cascade, applied when the failure costs a
/// biconnected network its 2-connectivity. The report is `recovered` only if
/// the final topology is biconnected again; otherwise the remaining cut
/// vertices are listed.
pub fn dara2c_recover(topo: &Topology, event: &FailureEvent) -> Result<RecoveryReport, RecoveryError> {
    if topo.live_count() < 3 || !is_biconnected(topo)? {
        return Err(RecoveryError::NotBiconnected);
    }
    let mut engine = match Engine::start(Algorithm::Dara2c, topo, event, true)? {
        Start::Done(report) => return Ok(report),
        Start::Proceed(engine) => engine,
    };
    if engine.current().live_count() < 3 {
        let residual = cut_vertices(engine.current()).into_iter().collect();
        return Ok(engine.finish(false, residual));
    }
    if is_biconnected(engine.current())? {
        return Ok(engine.finish(true, Vec::new()));
    }
    cascade(&mut engine)?;
    let ok = is_biconnected(engine.current())?;
    let residual = if ok {
        Vec::new()
    } else {
        cut_vertices(engine.current()).into_iter().collect()
    };
    Ok(engine.finish(ok, residual))
}

/// One vacated spot waiting for a replacement.
struct Vacancy {
    spot: Position,
    candidates: Vec<NodeId>,
    cause: RelocationCause,
}

fn cascade(engine: &mut Engine) -> Result<(), RecoveryError> {
    let mut moved: BTreeSet<NodeId> = BTreeSet::new();
    let mut queue = VecDeque::from([Vacancy {
        spot: engine.event().failed_position,
        candidates: engine.event().detected_by.iter().copied().collect(),
        cause: RelocationCause::ReplaceFailed,
    }]);

    while let Some(vacancy) = queue.pop_front() {
        let mut ranks = Vec::new();
        for &id in &vacancy.candidates {
            if moved.contains(&id) || !engine.current().is_alive(id) {
                continue;
            }
            ranks.push(CandidateRank {
                id,
                degree: engine.current().degree(id),
                dist_to_failed: distance(engine.position(id)?, vacancy.spot),
            });
        }
        if ranks.is_empty() {
            continue;
        }
        engine.next_round()?;
        let bc = select_best_candidate(&ranks)?;
        let old = engine.position(bc)?;
        let dependents = engine.current().neighbors(bc);

        engine.broadcast(MessageKind::Moving, bc, Some(vacancy.spot));
        engine.relocate(bc, vacancy.spot, vacancy.cause)?;
        engine.broadcast(MessageKind::Recovered, bc, None);
        moved.insert(bc);

        // Dependents that missed the RECOVERED broadcast.
        let mut detached = Vec::new();
        for n in dependents {
            if !moved.contains(&n) && !engine.in_range(n, bc)? {
                detached.push(n);
            }
        }
        if !detached.is_empty() {
            queue.push_back(Vacancy {
                spot: old,
                candidates: detached,
                cause: RelocationCause::CascadeChild,
            });
        }
    }
    Ok(())
}
