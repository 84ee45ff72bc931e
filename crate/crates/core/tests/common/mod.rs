//! Brute-force reference computations shared by the integration tests.
//! They work on plain coordinate lists and never call into the library's
//! graph code.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use wsan_recover::{NodeId, Topology};

pub const EPS: f64 = 1e-9;

/// Live nodes as (id, x, y).
pub fn live_points(t: &Topology) -> Vec<(u32, f64, f64)> {
    t.nodes()
        .iter()
        .filter(|n| n.alive)
        .map(|n| (n.id.0, n.position.x, n.position.y))
        .collect()
}

/// Adjacency by direct pairwise distance, skipping `removed`.
pub fn oracle_adjacency(t: &Topology, removed: Option<u32>) -> BTreeMap<u32, BTreeSet<u32>> {
    let pts: Vec<_> = live_points(t).into_iter().filter(|p| Some(p.0) != removed).collect();
    let r = t.comm_range();
    let mut adj: BTreeMap<u32, BTreeSet<u32>> = pts.iter().map(|p| (p.0, BTreeSet::new())).collect();
    for a in &pts {
        for b in &pts {
            if a.0 != b.0 && ((a.1 - b.1).powi(2) + (a.2 - b.2).powi(2)).sqrt() <= r + EPS {
                adj.get_mut(&a.0).unwrap().insert(b.0);
            }
        }
    }
    adj
}

pub fn oracle_hops(adj: &BTreeMap<u32, BTreeSet<u32>>, from: u32, to: u32) -> Option<u32> {
    let mut dist = BTreeMap::from([(from, 0u32)]);
    let mut q = VecDeque::from([from]);
    while let Some(u) = q.pop_front() {
        if u == to {
            return Some(dist[&u]);
        }
        for &v in &adj[&u] {
            if !dist.contains_key(&v) {
                dist.insert(v, dist[&u] + 1);
                q.push_back(v);
            }
        }
    }
    None
}

pub fn oracle_components(adj: &BTreeMap<u32, BTreeSet<u32>>) -> Vec<BTreeSet<u32>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &s in adj.keys() {
        if seen.contains(&s) {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            if comp.insert(u) {
                stack.extend(adj[&u].iter().copied());
            }
        }
        seen.extend(comp.iter().copied());
        out.push(comp);
    }
    out
}

pub fn oracle_connected(t: &Topology) -> bool {
    oracle_components(&oracle_adjacency(t, None)).len() <= 1
}

/// Removing `v` increases the component count.
pub fn oracle_is_cut(t: &Topology, v: u32) -> bool {
    let before = oracle_components(&oracle_adjacency(t, None)).len();
    let after = oracle_components(&oracle_adjacency(t, Some(v))).len();
    after > before
}

pub fn oracle_biconnected(t: &Topology) -> bool {
    let pts = live_points(t);
    pts.len() >= 3 && oracle_connected(t) && pts.iter().all(|p| !oracle_is_cut(t, p.0))
}

/// Unordered surviving pairs whose hop count grew from `pre` (failed node
/// still alive) to `post`.
pub fn oracle_extended_paths(pre: &Topology, post: &Topology) -> usize {
    let a0 = oracle_adjacency(pre, None);
    let a1 = oracle_adjacency(post, None);
    let ids: Vec<u32> = a1.keys().copied().collect();
    let mut extended = 0;
    for (i, &a) in ids.iter().enumerate() {
        for &b in &ids[i + 1..] {
            if let Some(h0) = oracle_hops(&a0, a, b) {
                match oracle_hops(&a1, a, b) {
                    Some(h1) if h1 <= h0 => {}
                    _ => extended += 1,
                }
            }
        }
    }
    extended
}

/// Uniform random deployment in a `side` x `side` square, possibly
/// disconnected.
pub fn random_topology(seed: u64, n: usize, side: f64, r: f64) -> Topology {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen::<f64>() * side, rng.gen::<f64>() * side)).collect();
    Topology::from_positions(r, &pts).unwrap()
}

pub fn ids(set: &BTreeSet<NodeId>) -> BTreeSet<u32> {
    set.iter().map(|n| n.0).collect()
}
