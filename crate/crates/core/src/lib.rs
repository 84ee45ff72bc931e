//! Movement-assisted failure recovery for wireless sensor-actor networks.
//!
//! The crate simulates what happens after a single actor fails in a
//! unit-disk network and compares four repair strategies:
//!
//! - **RIM**: neighbors of the failed node move inward to r/2 of its spot.
//! - **DARA-1C / DARA-2C**: a best-candidate neighbor replaces the failed
//!   node and dependents cascade into vacated spots.
//! - **LeDiR**: only the smallest disjoint block moves, keeping its links.
//!
//! Runs are deterministic: the same topology, failure and seed always
//! produce byte-identical reports.
//!
//! ```
//! use wsan_recover::{metrics, recovery, topology::{NodeId, Topology}};
//!
//! let topo = Topology::from_positions(2.0, &[(0.0, 0.0), (2.0, 0.0), (4.0, 0.0)]).unwrap();
//! let report = recovery::run_recovery(&topo, NodeId(1), recovery::Algorithm::Ledir, Default::default()).unwrap();
//! let m = metrics::compute_metrics(&report);
//! assert_eq!(m.relocated_nodes, 1);
//! assert_eq!(m.extended_paths, 0);
//! ```

pub mod cli;
pub mod geometry;
pub mod metrics;
pub mod recovery;
pub mod scenarios;
pub mod topology;

pub use geometry::{Position, EPS_GEOM};
pub use recovery::{run_recovery, Algorithm, EngineParams, RecoveryReport};
pub use topology::{NodeId, Topology};
