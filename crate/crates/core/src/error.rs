use thiserror::Error;

use crate::graph::GraphError;

/// Failures shared by the source estimators.
#[derive(Debug, Error, PartialEq)]
pub enum EstimationError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("snapshot is empty")]
    EmptySnapshot,
    #[error("snapshot of size {size} exceeds the exact-inference cap of {cap} (cost grows as 2^|O|)")]
    TooLarge { size: usize, cap: usize },
    #[error("induced subgraph of the snapshot is disconnected; run per component")]
    Disconnected,
    #[error("no single source explains the snapshot (all likelihoods are zero)")]
    NoSingleSource,
    #[error("source count {s} must be between 1 and the snapshot size {size}")]
    SourceCount { s: usize, size: usize },
    #[error("node {0} is not in the snapshot")]
    NotInSnapshot(usize),
    #[error("infected set has no susceptible neighbors")]
    Absorbed,
    #[error("target size {target} exceeds the {reachable} nodes reachable from the sources")]
    Unreachable { target: usize, reachable: usize },
    #[error("{0}")]
    Invalid(String),
}
