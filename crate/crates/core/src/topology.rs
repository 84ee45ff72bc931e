//! Unit-disk network model.
//!
//! A [`Topology`] is an immutable snapshot of actor positions plus the shared
//! communication range `r`. Links are never stored: two live nodes are
//! adjacent iff their distance is at most `r` (within [`EPS_GEOM`]).

use crate::geometry::{distance, GeometryError, Position, EPS_GEOM};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("node {0} is not alive")]
    DeadNode(NodeId),
    #[error("duplicate node id {0}")]
    DuplicateId(NodeId),
    #[error("communication range must be finite and positive, got {0}")]
    InvalidRange(f64),
    #[error("invalid position for node {id}: {source}")]
    InvalidPosition { id: NodeId, source: GeometryError },
    #[error("live topology is not connected ({components} components)")]
    Disconnected { components: usize },
    #[error("need at least 3 live nodes, got {0}")]
    TooFewNodes(usize),
    #[error("hop count must be 1 or 2, got {0}")]
    InvalidHops(u8),
    #[error("empty block list")]
    EmptyBlocks,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub position: Position,
    pub alive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    comm_range: f64,
    // sorted by id
    nodes: Vec<Node>,
}

impl Topology {
    /// Builds a topology of live nodes.
    pub fn new(comm_range: f64, nodes: impl IntoIterator<Item = (NodeId, Position)>) -> Result<Self, TopologyError> {
        Self::from_nodes(
            comm_range,
            nodes.into_iter().map(|(id, position)| Node {
                id,
                position,
                alive: true,
            }),
        )
    }

    pub fn from_nodes(comm_range: f64, nodes: impl IntoIterator<Item = Node>) -> Result<Self, TopologyError> {
        if !comm_range.is_finite() || comm_range <= 0.0 {
            return Err(TopologyError::InvalidRange(comm_range));
        }
        let mut nodes: Vec<Node> = nodes.into_iter().collect();
        nodes.sort_by_key(|n| n.id);
        for w in nodes.windows(2) {
            if w[0].id == w[1].id {
                return Err(TopologyError::DuplicateId(w[0].id));
            }
        }
        for n in &nodes {
            n.position
                .validate()
                .map_err(|source| TopologyError::InvalidPosition { id: n.id, source })?;
        }
        Ok(Self { comm_range, nodes })
    }

    /// Convenience constructor: ids are assigned 0, 1, 2, ... in order.
    pub fn from_positions(comm_range: f64, positions: &[(f64, f64)]) -> Result<Self, TopologyError> {
        Self::new(
            comm_range,
            positions
                .iter()
                .enumerate()
                .map(|(i, &(x, y))| (NodeId(i as u32), Position::new(x, y))),
        )
    }

    pub fn comm_range(&self) -> f64 {
        self.comm_range
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> Option<&Node> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn position(&self, id: NodeId) -> Result<Position, TopologyError> {
        self.node(id)
            .map(|n| n.position)
            .ok_or(TopologyError::UnknownNode(id))
    }

    pub fn is_alive(&self, id: NodeId) -> bool {
        self.node(id).is_some_and(|n| n.alive)
    }

    pub fn live_ids(&self) -> Vec<NodeId> {
        self.nodes.iter().filter(|n| n.alive).map(|n| n.id).collect()
    }

    pub fn live_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.alive).count()
    }

    /// Unit-disk link test between two positions.
    pub fn in_range(&self, a: Position, b: Position) -> bool {
        distance(a, b) <= self.comm_range + EPS_GEOM
    }

    pub fn are_adjacent(&self, a: NodeId, b: NodeId) -> bool {
        match (self.node(a), self.node(b)) {
            (Some(na), Some(nb)) => {
                a != b && na.alive && nb.alive && self.in_range(na.position, nb.position)
            }
            _ => false,
        }
    }

    /// Snapshot with `id` marked dead. Its position is kept.
    pub fn with_failed(&self, id: NodeId) -> Result<Self, TopologyError> {
        let mut next = self.clone();
        next.node_mut(id)?.alive = false;
        Ok(next)
    }

    /// Snapshot with `id` moved to `to`.
    pub fn with_position(&self, id: NodeId, to: Position) -> Result<Self, TopologyError> {
        let mut next = self.clone();
        next.set_position(id, to)?;
        Ok(next)
    }

    pub(crate) fn set_position(&mut self, id: NodeId, to: Position) -> Result<(), TopologyError> {
        to.validate()
            .map_err(|source| TopologyError::InvalidPosition { id, source })?;
        self.node_mut(id)?.position = to;
        Ok(())
    }

    fn node_mut(&mut self, id: NodeId) -> Result<&mut Node, TopologyError> {
        let i = self
            .nodes
            .binary_search_by_key(&id, |n| n.id)
            .map_err(|_| TopologyError::UnknownNode(id))?;
        Ok(&mut self.nodes[i])
    }

    pub fn neighbors(&self, id: NodeId) -> Vec<NodeId> {
        let Some(me) = self.node(id).filter(|n| n.alive) else {
            return Vec::new();
        };
        self.nodes
            .iter()
            .filter(|n| n.alive && n.id != id && self.in_range(me.position, n.position))
            .map(|n| n.id)
            .collect()
    }

    pub fn degree(&self, id: NodeId) -> usize {
        self.neighbors(id).len()
    }

    pub fn average_degree(&self) -> f64 {
        let live = self.live_count();
        if live == 0 {
            return 0.0;
        }
        let total: usize = self.live_ids().iter().map(|&id| self.degree(id)).sum();
        total as f64 / live as f64
    }

    fn require_live(&self, id: NodeId) -> Result<(), TopologyError> {
        match self.node(id) {
            None => Err(TopologyError::UnknownNode(id)),
            Some(n) if !n.alive => Err(TopologyError::DeadNode(id)),
            Some(_) => Ok(()),
        }
    }
}

/// Index-based view of the live nodes, rebuilt per query.
struct LiveGraph {
    ids: Vec<NodeId>,
    adj: Vec<Vec<usize>>,
}

impl LiveGraph {
    fn build(topo: &Topology, exclude: Option<NodeId>) -> Self {
        let live: Vec<&Node> = topo
            .nodes
            .iter()
            .filter(|n| n.alive && Some(n.id) != exclude)
            .collect();
        let mut adj = vec![Vec::new(); live.len()];
        for i in 0..live.len() {
            for j in i + 1..live.len() {
                if topo.in_range(live[i].position, live[j].position) {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        Self {
            ids: live.iter().map(|n| n.id).collect(),
            adj,
        }
    }

    fn index_of(&self, id: NodeId) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }

    fn components(&self) -> Vec<BTreeSet<NodeId>> {
        let n = self.ids.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = BTreeSet::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(u) = stack.pop() {
                comp.insert(self.ids[u]);
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            out.push(comp);
        }
        out
    }

    fn bfs(&self, src: usize) -> Vec<Option<u32>> {
        let mut dist = vec![None; self.ids.len()];
        dist[src] = Some(0);
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &v in &self.adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Articulation points via iterative depth-first search with low-links.
    fn articulation_points(&self) -> Vec<bool> {
        let n = self.ids.len();
        let mut disc = vec![u32::MAX; n];
        let mut low = vec![u32::MAX; n];
        let mut parent = vec![usize::MAX; n];
        let mut is_cut = vec![false; n];
        let mut timer = 0u32;

        for root in 0..n {
            if disc[root] != u32::MAX {
                continue;
            }
            let mut root_children = 0;
            disc[root] = timer;
            low[root] = timer;
            timer += 1;
            // (node, next adjacency index)
            let mut stack = vec![(root, 0usize)];
            while let Some(&mut (u, ref mut next)) = stack.last_mut() {
                if *next < self.adj[u].len() {
                    let v = self.adj[u][*next];
                    *next += 1;
                    if disc[v] == u32::MAX {
                        parent[v] = u;
                        disc[v] = timer;
                        low[v] = timer;
                        timer += 1;
                        if u == root {
                            root_children += 1;
                        }
                        stack.push((v, 0));
                    } else if v != parent[u] {
                        low[u] = low[u].min(disc[v]);
                    }
                } else {
                    stack.pop();
                    if let Some(&(p, _)) = stack.last() {
                        low[p] = low[p].min(low[u]);
                        if p != root && low[u] >= disc[p] {
                            is_cut[p] = true;
                        }
                    }
                }
            }
            if root_children > 1 {
                is_cut[root] = true;
            }
        }
        is_cut
    }
}

/// Live 1-hop adjacency of every node. Dead nodes map to an empty set.
pub fn adjacency(topo: &Topology) -> BTreeMap<NodeId, BTreeSet<NodeId>> {
    let g = LiveGraph::build(topo, None);
    let mut out: BTreeMap<NodeId, BTreeSet<NodeId>> =
        topo.nodes.iter().map(|n| (n.id, BTreeSet::new())).collect();
    for (i, nbrs) in g.adj.iter().enumerate() {
        out.insert(g.ids[i], nbrs.iter().map(|&j| g.ids[j]).collect());
    }
    out
}

/// A node's local view of one neighbor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborEntry {
    pub id: NodeId,
    pub position: Position,
    pub degree: usize,
}

/// 1-hop (or 1- and 2-hop) neighbor table of `node`, ordered by id.
pub fn neighbor_table(topo: &Topology, node: NodeId, hops: u8) -> Result<Vec<NeighborEntry>, TopologyError> {
    if !(1..=2).contains(&hops) {
        return Err(TopologyError::InvalidHops(hops));
    }
    topo.require_live(node)?;
    let mut ids: BTreeSet<NodeId> = topo.neighbors(node).into_iter().collect();
    if hops == 2 {
        let second: Vec<NodeId> = ids.iter().flat_map(|&n| topo.neighbors(n)).collect();
        ids.extend(second);
        ids.remove(&node);
    }
    ids.into_iter()
        .map(|id| {
            Ok(NeighborEntry {
                id,
                position: topo.position(id)?,
                degree: topo.degree(id),
            })
        })
        .collect()
}

/// Connected components of the live nodes, ordered by their smallest id.
pub fn connected_components(topo: &Topology) -> Vec<BTreeSet<NodeId>> {
    LiveGraph::build(topo, None).components()
}

pub fn is_connected(topo: &Topology) -> bool {
    connected_components(topo).len() <= 1
}

/// All live articulation points, across every component.
pub fn cut_vertices(topo: &Topology) -> BTreeSet<NodeId> {
    let g = LiveGraph::build(topo, None);
    g.articulation_points()
        .into_iter()
        .enumerate()
        .filter(|&(_, cut)| cut)
        .map(|(i, _)| g.ids[i])
        .collect()
}

/// Whether removing `node` splits the (connected) live network.
pub fn is_cut_vertex(topo: &Topology, node: NodeId) -> Result<bool, TopologyError> {
    topo.require_live(node)?;
    let g = LiveGraph::build(topo, None);
    let components = g.components().len();
    if components > 1 {
        return Err(TopologyError::Disconnected { components });
    }
    let idx = g.index_of(node).ok_or(TopologyError::UnknownNode(node))?;
    Ok(g.articulation_points()[idx])
}

/// Blocks left behind when `failed` disappears: the components of the live
/// nodes other than `failed`. `failed` may already be marked dead.
pub fn blocks_after_removal(topo: &Topology, failed: NodeId) -> Result<Vec<BTreeSet<NodeId>>, TopologyError> {
    if topo.node(failed).is_none() {
        return Err(TopologyError::UnknownNode(failed));
    }
    Ok(LiveGraph::build(topo, Some(failed)).components())
}

/// Smallest block; equal sizes resolve to the block holding the smallest id.
pub fn smallest_block(blocks: &[BTreeSet<NodeId>]) -> Result<&BTreeSet<NodeId>, TopologyError> {
    blocks
        .iter()
        .min_by_key(|b| (b.len(), b.iter().next().copied()))
        .ok_or(TopologyError::EmptyBlocks)
}

/// All-pairs hop counts over live nodes (shortest routing table).
#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPathTable {
    ids: Vec<NodeId>,
    // row-major, None = unreachable
    hops: Vec<Option<u32>>,
}

impl ShortestPathTable {
    pub fn ids(&self) -> &[NodeId] {
        &self.ids
    }

    /// Hop count between `a` and `b`; `None` when unreachable or when either
    /// node is not a live member of the table.
    pub fn hops(&self, a: NodeId, b: NodeId) -> Option<u32> {
        let i = self.ids.binary_search(&a).ok()?;
        let j = self.ids.binary_search(&b).ok()?;
        self.hops[i * self.ids.len() + j]
    }

    pub fn reachable(&self, a: NodeId, b: NodeId) -> bool {
        self.hops(a, b).is_some()
    }

    /// Nodes reachable from `from`, including itself.
    pub fn reachable_set(&self, from: NodeId) -> BTreeSet<NodeId> {
        self.ids
            .iter()
            .copied()
            .filter(|&b| self.reachable(from, b))
            .collect()
    }
}

pub fn shortest_path_table(topo: &Topology) -> ShortestPathTable {
    let g = LiveGraph::build(topo, None);
    let n = g.ids.len();
    let mut hops = Vec::with_capacity(n * n);
    for src in 0..n {
        hops.extend(g.bfs(src));
    }
    ShortestPathTable { ids: g.ids, hops }
}

/// True iff the live network is connected and has no cut vertex.
pub fn is_biconnected(topo: &Topology) -> Result<bool, TopologyError> {
    let live = topo.live_count();
    if live < 3 {
        return Err(TopologyError::TooFewNodes(live));
    }
    let g = LiveGraph::build(topo, None);
    Ok(g.components().len() == 1 && !g.articulation_points().into_iter().any(|c| c))
}
