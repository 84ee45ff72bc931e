//! Recovery overhead and path-length metrics, and the analytical bounds
//! they are checked against.

use crate::geometry::{distance, EPS_GEOM};
use crate::recovery::{Algorithm, RecoveryReport, RelocationCause};
use crate::topology::{shortest_path_table, NodeId};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("bounds for {algorithm} need N >= {min}, got {n}")]
    InvalidNodeCount { algorithm: Algorithm, n: usize, min: usize },
    #[error("communication range must be positive, got {0}")]
    InvalidRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSet {
    pub total_distance: f64,
    pub relocated_nodes: usize,
    pub exchanged_messages: usize,
    /// Unordered surviving pairs whose hop distance grew (or became
    /// unreachable).
    pub extended_paths: usize,
    pub paths_not_extended: usize,
    /// Largest cumulative travel of a single node.
    pub max_node_distance: f64,
    /// Longest single move that replaced the failed node.
    pub max_replacement_move: f64,
    /// Longest single inward-motion move.
    pub max_inward_move: f64,
    /// Farthest an inward mover ended from the failed node.
    pub max_inward_gap: f64,
}

pub fn compute_metrics(report: &RecoveryReport) -> MetricSet {
    let mut per_node: BTreeMap<NodeId, f64> = BTreeMap::new();
    let mut m = MetricSet {
        exchanged_messages: report.messages.len(),
        ..MetricSet::default()
    };
    let failed_at = report.event.failed_position;
    for r in &report.relocations {
        let len = r.length();
        m.total_distance += len;
        *per_node.entry(r.node).or_default() += len;
        match r.cause {
            RelocationCause::ReplaceFailed => m.max_replacement_move = m.max_replacement_move.max(len),
            RelocationCause::InwardMotion => {
                m.max_inward_move = m.max_inward_move.max(len);
                m.max_inward_gap = m.max_inward_gap.max(distance(r.to, failed_at));
            }
            RelocationCause::CascadeChild => {}
        }
    }
    m.relocated_nodes = per_node.len();
    m.max_node_distance = per_node.values().copied().fold(0.0, f64::max);

    // Hop counts before the failure (routes may pass through the failed
    // node) against hop counts after recovery, over surviving pairs.
    let before = shortest_path_table(&report.pre_topology);
    let after = shortest_path_table(&report.post_topology);
    let survivors = report.post_topology.live_ids();
    for (i, &a) in survivors.iter().enumerate() {
        for &b in &survivors[i + 1..] {
            let Some(h0) = before.hops(a, b) else {
                continue;
            };
            match after.hops(a, b) {
                Some(h1) if h1 <= h0 => m.paths_not_extended += 1,
                _ => m.extended_paths += 1,
            }
        }
    }
    m
}

/// Worst-case limits for one algorithm at N nodes and range r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub max_nodes: usize,
    pub max_messages: usize,
    pub max_node_distance: f64,
    pub max_total_distance: f64,
}

pub fn analytical_bounds(algorithm: Algorithm, n: usize, r: f64) -> Result<Bounds, MetricsError> {
    if !(r.is_finite() && r > 0.0) {
        return Err(MetricsError::InvalidRange(r));
    }
    let min = if algorithm.is_dara() { 4 } else { 2 };
    if n < min {
        return Err(MetricsError::InvalidNodeCount { algorithm, n, min });
    }
    let nf = n as f64;
    Ok(match algorithm {
        Algorithm::Ledir => Bounds {
            max_nodes: (n - 1) / 2,
            max_messages: 3 * (n - 1) / 2,
            max_node_distance: r,
            max_total_distance: r / 2.0 * (nf - 1.0),
        },
        Algorithm::Rim => Bounds {
            max_nodes: n - 1,
            max_messages: 2 * n - 1,
            max_node_distance: r / 2.0,
            max_total_distance: r / 2.0 * (nf - 1.0),
        },
        Algorithm::Dara1c | Algorithm::Dara2c => Bounds {
            max_nodes: n - 3,
            max_messages: 5 * n - 3,
            max_node_distance: r,
            max_total_distance: r * (nf - 3.0),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub algorithm: Algorithm,
    pub n: usize,
    pub r: f64,
    pub nodes_bound_ok: bool,
    pub node_distance_bound_ok: bool,
    pub total_distance_bound_ok: bool,
    /// Depends on the message counting convention; informational only.
    pub messages_within_bound: bool,
}

pub fn check_bounds(metrics: &MetricSet, algorithm: Algorithm, n: usize, r: f64) -> Result<BoundCheck, MetricsError> {
    let b = analytical_bounds(algorithm, n, r)?;
    let node_distance_bound_ok = match algorithm {
        // the r/2 limit applies to the inward phase
        Algorithm::Rim => {
            metrics.max_inward_move <= b.max_node_distance + EPS_GEOM
                && metrics.max_inward_gap <= b.max_node_distance + EPS_GEOM
        }
        _ => metrics.max_node_distance <= b.max_node_distance + EPS_GEOM,
    };
    Ok(BoundCheck {
        algorithm,
        n,
        r,
        nodes_bound_ok: metrics.relocated_nodes <= b.max_nodes,
        node_distance_bound_ok,
        total_distance_bound_ok: metrics.total_distance <= b.max_total_distance + EPS_GEOM,
        messages_within_bound: metrics.exchanged_messages <= b.max_messages,
    })
}

/// Mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stddev: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Self {
            mean,
            stddev: var.sqrt(),
        }
    }
}

/// Relative gap |a - b| / max(|a|, |b|); zero when both are zero.
pub fn relative_difference(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Default tolerance under which two overhead means count as equal.
pub const EQUALITY_TOLERANCE: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Outperforms,
    Equal,
    Underperforms,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Outperforms => "outperforms",
            Verdict::Equal => "equal",
            Verdict::Underperforms => "underperforms",
        })
    }
}

/// Compares a lower-is-better overhead mean of `candidate` against
/// `baseline`.
pub fn overhead_verdict(candidate: f64, baseline: f64, tolerance: f64) -> Verdict {
    if relative_difference(candidate, baseline) <= tolerance {
        Verdict::Equal
    } else if candidate < baseline {
        Verdict::Outperforms
    } else {
        Verdict::Underperforms
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recovery::{run_recovery, EngineParams};
    use crate::topology::Topology;

    fn three_in_line(algo: Algorithm) -> MetricSet {
        let t = Topology::from_positions(2.0, &[(0.0, 0.0), (2.0, 0.0), (4.0, 0.0)]).unwrap();
        compute_metrics(&run_recovery(&t, NodeId(1), algo, EngineParams::default()).unwrap())
    }

    #[test]
    fn zero_relocation_report() {
        let t = Topology::from_positions(2.0, &[(0.0, 0.0), (2.0, 0.0), (4.0, 0.0)]).unwrap();
        let m = compute_metrics(&run_recovery(&t, NodeId(0), Algorithm::Ledir, EngineParams::default()).unwrap());
        assert_eq!(m.total_distance, 0.0);
        assert_eq!(m.relocated_nodes, 0);
        assert_eq!(m.exchanged_messages, 0);
        assert_eq!(m.extended_paths, 0);
        assert_eq!(m.paths_not_extended, 1);
    }

    #[test]
    fn rim_three_in_line() {
        let m = three_in_line(Algorithm::Rim);
        assert!((m.total_distance - 2.0).abs() <= EPS_GEOM);
        assert_eq!(m.relocated_nodes, 2);
        assert!((m.max_node_distance - 1.0).abs() <= EPS_GEOM);
        assert!((m.max_inward_gap - 1.0).abs() <= EPS_GEOM);
        // 0 and 2 were 2 hops apart via the failed node; now adjacent.
        assert_eq!(m.extended_paths, 0);
    }

    #[test]
    fn ledir_three_in_line() {
        let m = three_in_line(Algorithm::Ledir);
        assert!((m.total_distance - 2.0).abs() <= EPS_GEOM);
        assert_eq!(m.relocated_nodes, 1);
        assert_eq!(m.extended_paths, 0);
        assert_eq!(m.paths_not_extended, 1);
        assert!((m.max_replacement_move - 2.0).abs() <= EPS_GEOM);
    }

    #[test]
    fn bound_examples() {
        let m = MetricSet {
            relocated_nodes: 4,
            ..MetricSet::default()
        };
        assert!(check_bounds(&m, Algorithm::Ledir, 9, 100.0).unwrap().nodes_bound_ok);
        let m5 = MetricSet {
            relocated_nodes: 5,
            ..MetricSet::default()
        };
        assert!(!check_bounds(&m5, Algorithm::Ledir, 9, 100.0).unwrap().nodes_bound_ok);

        let far = MetricSet {
            relocated_nodes: 1,
            max_inward_move: 10.0,
            max_inward_gap: 60.0,
            ..MetricSet::default()
        };
        assert!(!check_bounds(&far, Algorithm::Rim, 10, 100.0).unwrap().node_distance_bound_ok);

        let dara = MetricSet {
            relocated_nodes: 8,
            ..MetricSet::default()
        };
        assert!(!check_bounds(&dara, Algorithm::Dara1c, 10, 100.0).unwrap().nodes_bound_ok);
        assert!(matches!(
            check_bounds(&dara, Algorithm::Dara1c, 3, 100.0),
            Err(MetricsError::InvalidNodeCount { .. })
        ));
        assert!(check_bounds(&dara, Algorithm::Rim, 10, 0.0).is_err());
    }

    #[test]
    fn bound_table_values() {
        let b = analytical_bounds(Algorithm::Ledir, 9, 2.0).unwrap();
        assert_eq!((b.max_nodes, b.max_messages), (4, 12));
        assert_eq!(b.max_total_distance, 8.0);
        let b = analytical_bounds(Algorithm::Rim, 9, 2.0).unwrap();
        assert_eq!((b.max_nodes, b.max_messages), (8, 17));
        assert_eq!(b.max_node_distance, 1.0);
        let b = analytical_bounds(Algorithm::Dara1c, 9, 2.0).unwrap();
        assert_eq!((b.max_nodes, b.max_messages), (6, 42));
        assert_eq!(b.max_total_distance, 12.0);
    }

    #[test]
    fn stats_and_verdicts() {
        let s = Stat::of(&[3.0]);
        assert_eq!((s.mean, s.stddev), (3.0, 0.0));
        let s = Stat::of(&[1.0, 3.0]);
        assert_eq!((s.mean, s.stddev), (2.0, 1.0));
        assert_eq!(overhead_verdict(1.0, 2.0, 0.15), Verdict::Outperforms);
        assert_eq!(overhead_verdict(1.9, 2.0, 0.15), Verdict::Equal);
        assert_eq!(overhead_verdict(3.0, 2.0, 0.15), Verdict::Underperforms);
        assert_eq!(relative_difference(0.0, 0.0), 0.0);
    }
}
