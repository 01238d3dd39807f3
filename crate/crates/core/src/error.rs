use thiserror::Error;

use crate::{EdgeId, NodeId};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error("no road path from node {from} to node {to}")]
    NoPath { from: NodeId, to: NodeId },

    #[error("nodes {a} and {b} are not stations on a common {mode} line")]
    NoCommonLine { a: NodeId, b: NodeId, mode: String },

    #[error("no transit route from node {from} to node {to}")]
    NoTransitRoute { from: NodeId, to: NodeId },

    #[error("invalid trip {id}: {reason}")]
    InvalidTrip { id: usize, reason: String },

    #[error("interval {t} out of range (profile has {max} intervals)")]
    InvalidInterval { t: u32, max: u32 },

    #[error("band {0} is declared but holds no areas while carrying mass")]
    EmptyBand(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("instance has {edges} edges, over the brute-force cap of {cap}")]
    BruteForceCap { edges: usize, cap: usize },

    #[error("conflict graph needs {pairs} adjacency pairs, over the budget of {budget}")]
    ConflictGraphBudget { pairs: usize, budget: usize },

    #[error("input vertex set is not independent: {0} and {1} are adjacent")]
    NotIndependent(usize, usize),

    #[error("solution references unknown edge {0}")]
    DanglingEdge(EdgeId),

    #[error("hypergraph is not downward closed: no edge for driver {driver} with the reduced rider set")]
    ClosureViolation { driver: usize },

    #[error("solution verification failed at interval {interval}: {violation}")]
    VerificationFailed { interval: u32, violation: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
