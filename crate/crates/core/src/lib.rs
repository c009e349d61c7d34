//! Source detection for susceptible–infected epidemics on networks.
//!
//! Given an undirected graph and a snapshot `O` of infected nodes, the crate
//! scores every infected node as a candidate patient zero:
//!
//! * [`exact`]: exact likelihoods `ρ_{I→O}` by dynamic programming over the
//!   subsets of `O`, Bayes estimators and multi-source MAP.
//! * [`greedy`]: greedy backward elimination of the snapshot.
//! * [`mean_field`]: product-form approximation of the likelihood, fitted by
//!   least squares through a `|O|×|O|` linear system.
//! * [`baselines`]: rumor centrality, Jordan center, degree and random guessing.
//!
//! [`si`] simulates the epidemic, [`generators`] builds the synthetic
//! networks, and [`evaluation`] runs Monte-Carlo rank experiments.

pub mod baselines;
pub mod error;
pub mod evaluation;
pub mod exact;
pub mod generators;
pub mod graph;
pub mod greedy;
pub mod mean_field;
pub mod plot;
pub mod ranking;
pub mod si;

pub use error::EstimationError;
pub use graph::{Graph, GraphError, Indexing, NodeLabels, NodeSet};
pub use ranking::{Order, RankEntry, Ranking};
