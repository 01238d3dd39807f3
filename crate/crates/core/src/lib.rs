//! Matching engine and batch simulator for a transportation system that
//! integrates public transit with ridesharing.
//!
//! Drivers offer spare seats on their own trips; riders are carried part of
//! the way by car and ride transit for the rest.  The pipeline is:
//!
//!  * [`network`]  — synthetic road network with a rail/bus overlay
//!  * [`trips`]    — seeded per-interval driver and rider generation
//!  * [`feasibility`] — enumeration of feasible driver/rider matches
//!  * [`solvers`]  — exact ILP, LP rounding and greedy assignment
//!  * [`setpacking`] — conflict-graph local search variants
//!  * [`oracle`]   — brute-force optima, instance converters, verification
//!  * [`sim`]      — batch simulation over a day of intervals

pub mod error;
pub mod feasibility;
pub mod network;
pub mod oracle;
pub mod setpacking;
pub mod sim;
pub mod simplex;
pub mod solvers;
pub mod trips;

pub use error::{Error, Result};

/// Index of a node in the road network.
pub type NodeId = usize;
/// Integer label of a driver or rider trip.
pub type TripId = usize;
/// Index of a hyperedge (feasible match) within a hypergraph.
pub type EdgeId = usize;
