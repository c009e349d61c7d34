//! Exact likelihoods `ρ_{I→O}` and the Bayes estimators built on them.
//!
//! `ρ_{I→O}` is the probability that, once `I` is infected, every node of `O`
//! is infected before any node outside `O`. It depends only on the adjacency
//! structure, never on the infection rate or the observation time, and obeys
//!
//! ```text
//! forward:  ρ_{I→O} = Σ_{j∈O∖I} vol(I, j) / vol(I, Iᶜ) · ρ_{I∪j→O}
//! backward: ρ_{I→O} = Σ_{j∈O∖I} ρ_{I→O∖j} · vol(O∖j, j) / vol(O∖j, (O∖j)ᶜ)
//! ```
//!
//! Subsets of `O` are `u64` masks over the positions of the sorted snapshot,
//! and tables are flat arrays of length `2^|O|`. The forward sweep only visits
//! the boundary of each subset inside `O`, so it is the production path; the
//! backward sweep costs `3^|O|` and exists to cross-check it.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::EstimationError;
use crate::graph::{Graph, NodeSet, UNREACHABLE};
use crate::ranking::{Order, Ranking, TIE_RTOL};
use crate::si::InfectionTrace;

/// Default largest snapshot accepted by the forward DP.
pub const DEFAULT_DP_CAP: usize = 24;
/// Largest snapshot accepted by the backward DP (`3^|O|` work).
pub const BACKWARD_CAP: usize = 16;
/// Largest snapshot accepted by the path-enumeration oracle.
pub const BRUTE_FORCE_CAP: usize = 8;

/// Adjacency of the snapshot as bitmasks plus full-graph degrees.
struct Lattice {
    adj: Vec<u64>,
    degree: Vec<u64>,
    full: u64,
}

impl Lattice {
    fn new(graph: &Graph, snapshot: &NodeSet) -> Self {
        let adj = snapshot
            .iter()
            .map(|v| {
                graph
                    .neighbors(v)
                    .iter()
                    .filter_map(|&w| snapshot.index_of(w))
                    .fold(0u64, |m, t| m | 1 << t)
            })
            .collect();
        let degree = snapshot.iter().map(|v| graph.degree(v) as u64).collect();
        Lattice {
            adj,
            degree,
            full: snapshot.full_mask().expect("caller checked the snapshot size"),
        }
    }

    /// `vol(I, Iᶜ)` in the full graph.
    #[inline]
    fn boundary(&self, mask: u64) -> u64 {
        let mut rest = mask;
        let mut total = 0;
        while rest != 0 {
            let t = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            total += self.degree[t] - u64::from((self.adj[t] & mask).count_ones());
        }
        total
    }

    /// Nodes of `O ∖ I` adjacent to `I`.
    #[inline]
    fn frontier(&self, mask: u64) -> u64 {
        let mut rest = mask;
        let mut reach = 0;
        while rest != 0 {
            let t = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            reach |= self.adj[t];
        }
        reach & !mask & self.full
    }

    /// `vol(I, j)` for `j` a position in `O`.
    #[inline]
    fn volume_to(&self, mask: u64, j: usize) -> u64 {
        u64::from((self.adj[j] & mask).count_ones())
    }
}

/// `ρ_{I→O}` for every subset `I` of a snapshot `O`, indexed by mask.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionTable {
    snapshot: NodeSet,
    values: Vec<f64>,
    /// Subsets smaller than this were not computed.
    min_size: usize,
}

impl TransitionTable {
    pub fn snapshot(&self) -> &NodeSet {
        &self.snapshot
    }

    /// Raw table; entry `0` (the empty set) is always 0.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get_mask(&self, mask: u64) -> Option<f64> {
        let computed = mask.count_ones() as usize >= self.min_size.max(1);
        self.values.get(mask as usize).copied().filter(|_| computed)
    }

    pub fn get(&self, subset: &NodeSet) -> Option<f64> {
        self.get_mask(self.snapshot.mask_of(subset)?)
    }

    /// Single-source likelihoods `ρ_{i→O}` aligned with the snapshot members.
    pub fn single_source(&self) -> Vec<f64> {
        (0..self.snapshot.len()).map(|t| self.values[1 << t]).collect()
    }
}

fn check_snapshot(graph: &Graph, snapshot: &NodeSet, cap: usize) -> Result<(), EstimationError> {
    if snapshot.is_empty() {
        return Err(EstimationError::EmptySnapshot);
    }
    graph.check_set(snapshot)?;
    let cap = cap.min(crate::graph::MAX_MASK_BITS);
    if snapshot.len() > cap {
        return Err(EstimationError::TooLarge {
            size: snapshot.len(),
            cap,
        });
    }
    Ok(())
}

pub fn transition_prob_forward(
    graph: &Graph,
    snapshot: &NodeSet,
) -> Result<TransitionTable, EstimationError> {
    transition_prob_forward_capped(graph, snapshot, DEFAULT_DP_CAP)
}

pub fn transition_prob_forward_capped(
    graph: &Graph,
    snapshot: &NodeSet,
    cap: usize,
) -> Result<TransitionTable, EstimationError> {
    check_snapshot(graph, snapshot, cap)?;
    Ok(forward_table(graph, snapshot, 1))
}

/// Forward sweep over masks in decreasing numeric order (every `I ∪ j` is a
/// larger number than `I`), skipping subsets smaller than `min_size`.
fn forward_table(graph: &Graph, snapshot: &NodeSet, min_size: usize) -> TransitionTable {
    let lattice = Lattice::new(graph, snapshot);
    let full = lattice.full;
    let mut rho = vec![0.0f64; full as usize + 1];
    rho[full as usize] = 1.0;
    for mask in (1..full).rev() {
        if (mask.count_ones() as usize) < min_size {
            continue;
        }
        let boundary = lattice.boundary(mask);
        if boundary == 0 {
            // I is a union of components and cannot grow into O
            continue;
        }
        let mut sum = 0.0;
        let mut reach = lattice.frontier(mask);
        while reach != 0 {
            let j = reach.trailing_zeros() as usize;
            reach &= reach - 1;
            sum += lattice.volume_to(mask, j) as f64 * rho[(mask | 1 << j) as usize];
        }
        rho[mask as usize] = sum / boundary as f64;
    }
    TransitionTable {
        snapshot: snapshot.clone(),
        values: rho,
        min_size,
    }
}

pub fn transition_prob_backward(
    graph: &Graph,
    snapshot: &NodeSet,
) -> Result<TransitionTable, EstimationError> {
    check_snapshot(graph, snapshot, BACKWARD_CAP)?;
    let lattice = Lattice::new(graph, snapshot);
    let full = lattice.full;
    let size = full as usize + 1;
    let boundary: Vec<u64> = (0..size as u64).map(|m| lattice.boundary(m)).collect();

    let mut values = vec![0.0f64; size];
    // f[O'] = ρ_{I→O'} for the current I and every O' ⊇ I
    let mut f = vec![0.0f64; size];
    for source in 1..=full {
        let rest = full & !source;
        f[source as usize] = 1.0;
        let mut added = 0u64;
        loop {
            // next submask of `rest` in increasing order
            added = added.wrapping_sub(rest) & rest;
            if added == 0 {
                break;
            }
            let target = source | added;
            let mut sum = 0.0;
            let mut bits = added;
            while bits != 0 {
                let j = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let before = target & !(1 << j);
                let into_j = lattice.volume_to(before, j);
                if into_j > 0 {
                    sum += f[before as usize] * into_j as f64 / boundary[before as usize] as f64;
                }
            }
            f[target as usize] = sum;
        }
        values[source as usize] = f[full as usize];
    }
    Ok(TransitionTable {
        snapshot: snapshot.clone(),
        values,
        min_size: 1,
    })
}

/// Probability of observing the infection path `trace` given its sources:
/// `∏_k vol(σ_[k], σ_{k+1}) / vol(σ_[k], σ_[k]ᶜ)`. Zero for paths that are not
/// permitted.
pub fn path_probability(graph: &Graph, trace: &InfectionTrace) -> f64 {
    order_probability(graph, &trace.order, trace.source_count.max(1))
}

/// [`path_probability`] for an order whose first `source_count` nodes are sources.
pub fn order_probability(graph: &Graph, order: &[usize], source_count: usize) -> f64 {
    let n = graph.node_count();
    if order.iter().any(|&v| v >= n) || source_count > order.len() {
        return 0.0;
    }
    let mut infected = std::collections::HashSet::new();
    let mut boundary: i64 = 0;
    let mut prob = 1.0;
    for (p, &v) in order.iter().enumerate() {
        let into_v = graph.neighbors(v).iter().filter(|w| infected.contains(*w)).count() as i64;
        if p >= source_count {
            if into_v == 0 || boundary == 0 {
                return 0.0;
            }
            prob *= into_v as f64 / boundary as f64;
        }
        if !infected.insert(v) {
            return 0.0;
        }
        boundary += graph.degree(v) as i64 - 2 * into_v;
    }
    prob
}

/// `ρ_{i→O}` by summing the path probability of every permitted ordering of
/// `O` that starts at `i`. Factorial cost; an oracle for small snapshots.
pub fn brute_force_likelihood(
    graph: &Graph,
    source: usize,
    snapshot: &NodeSet,
) -> Result<f64, EstimationError> {
    graph.check_set(snapshot)?;
    graph.check_node(source)?;
    if snapshot.len() > BRUTE_FORCE_CAP {
        return Err(EstimationError::TooLarge {
            size: snapshot.len(),
            cap: BRUTE_FORCE_CAP,
        });
    }
    if !snapshot.contains(source) {
        return Ok(0.0);
    }
    let mut prefix = vec![source];
    Ok(enumerate_paths(graph, snapshot, &mut prefix))
}

fn enumerate_paths(graph: &Graph, snapshot: &NodeSet, prefix: &mut Vec<usize>) -> f64 {
    if prefix.len() == snapshot.len() {
        return 1.0;
    }
    let infected = NodeSet::new(prefix.iter().copied());
    let boundary = graph.boundary_volume(&infected).unwrap();
    let mut total = 0.0;
    for j in snapshot.iter().filter(|&j| !infected.contains(j)) {
        let into_j = graph.cut_volume(&infected, &NodeSet::singleton(j)).unwrap();
        if into_j == 0 {
            continue;
        }
        prefix.push(j);
        total += into_j as f64 / boundary as f64 * enumerate_paths(graph, snapshot, prefix);
        prefix.pop();
    }
    total
}

/// Posterior over the source under a uniform prior: `p_i ∝ ρ_{i→O}`, `i ∈ O`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Posterior {
    pub snapshot: NodeSet,
    /// `p_i`, aligned with `snapshot.members()`.
    pub probs: Vec<f64>,
    /// Unnormalized `ρ_{i→O}`.
    pub likelihood: Vec<f64>,
}

impl Posterior {
    pub fn from_likelihood(snapshot: NodeSet, likelihood: Vec<f64>) -> Result<Self, EstimationError> {
        let total: f64 = likelihood.iter().sum();
        if !(total > 0.0) {
            return Err(EstimationError::NoSingleSource);
        }
        let probs = likelihood.iter().map(|l| l / total).collect();
        Ok(Posterior {
            snapshot,
            probs,
            likelihood,
        })
    }

    pub fn prob_of(&self, node: usize) -> Option<f64> {
        self.snapshot.index_of(node).map(|t| self.probs[t])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.snapshot.iter().zip(self.probs.iter().copied())
    }
}

pub fn posterior(graph: &Graph, snapshot: &NodeSet) -> Result<Posterior, EstimationError> {
    posterior_capped(graph, snapshot, DEFAULT_DP_CAP)
}

pub fn posterior_capped(
    graph: &Graph,
    snapshot: &NodeSet,
    cap: usize,
) -> Result<Posterior, EstimationError> {
    let table = transition_prob_forward_capped(graph, snapshot, cap)?;
    Posterior::from_likelihood(snapshot.clone(), table.single_source())
}

/// Index of the best value under `better`, treating values within
/// [`TIE_RTOL`] as tied and keeping the earliest (smallest node id).
fn best_index(values: &[f64], maximize: bool) -> usize {
    let mut best = 0;
    for (t, &v) in values.iter().enumerate().skip(1) {
        let b = values[best];
        let tie = (v - b).abs() <= TIE_RTOL * v.abs().max(b.abs());
        if !tie && ((maximize && v > b) || (!maximize && v < b)) {
            best = t;
        }
    }
    best
}

/// MAP source: largest posterior, smallest id among ties.
pub fn map_estimate(post: &Posterior) -> usize {
    post.snapshot.members()[best_index(&post.probs, true)]
}

/// Expected geodesic distance `Σ_{j∈O} d_G(i, j) p_j` for each `i ∈ O`,
/// aligned with the snapshot members.
pub fn expected_distances(graph: &Graph, post: &Posterior) -> Vec<f64> {
    let members = post.snapshot.members();
    let mut dist = vec![UNREACHABLE; graph.node_count()];
    let mut touched = Vec::new();
    let mut queue = VecDeque::new();
    members
        .iter()
        .map(|&i| {
            // BFS from i, stopping once every snapshot node has been reached
            for &v in &touched {
                dist[v] = UNREACHABLE;
            }
            touched.clear();
            queue.clear();
            dist[i] = 0;
            touched.push(i);
            queue.push_back(i);
            let mut remaining = members.len() - 1;
            while let Some(u) = queue.pop_front() {
                if remaining == 0 {
                    break;
                }
                for &w in graph.neighbors(u) {
                    if dist[w] == UNREACHABLE {
                        dist[w] = dist[u] + 1;
                        touched.push(w);
                        queue.push_back(w);
                        if post.snapshot.contains(w) {
                            remaining -= 1;
                        }
                    }
                }
            }
            members
                .iter()
                .zip(&post.probs)
                .filter(|(_, &p)| p > 0.0)
                .map(|(&j, &p)| {
                    if dist[j] == UNREACHABLE {
                        f64::INFINITY
                    } else {
                        dist[j] as f64 * p
                    }
                })
                .sum()
        })
        .collect()
}

/// Minimizer of the posterior expected distance to the source.
pub fn distance_estimate(graph: &Graph, post: &Posterior) -> usize {
    post.snapshot.members()[best_index(&expected_distances(graph, post), false)]
}

/// Candidates by increasing posterior expected distance.
pub fn distance_rank(graph: &Graph, post: &Posterior) -> Ranking {
    let d = expected_distances(graph, post);
    Ranking::from_scores(post.snapshot.iter().zip(d), Order::Ascending)
}

/// Bayes-optimal ranking under rank loss: descending posterior.
pub fn rank_estimate(post: &Posterior) -> Ranking {
    Ranking::from_scores(post.iter(), Order::Descending)
}

/// The most likely set of exactly `s` sources and its likelihood `ρ_{I→O}`.
/// The DP stops at cardinality `s`; ties go to the lexicographically smallest set.
pub fn multi_source_map(
    graph: &Graph,
    snapshot: &NodeSet,
    s: usize,
) -> Result<(NodeSet, f64), EstimationError> {
    multi_source_map_capped(graph, snapshot, s, DEFAULT_DP_CAP)
}

pub fn multi_source_map_capped(
    graph: &Graph,
    snapshot: &NodeSet,
    s: usize,
    cap: usize,
) -> Result<(NodeSet, f64), EstimationError> {
    check_snapshot(graph, snapshot, cap)?;
    if s == 0 || s > snapshot.len() {
        return Err(EstimationError::SourceCount {
            s,
            size: snapshot.len(),
        });
    }
    let table = forward_table(graph, snapshot, s);
    let full = snapshot.full_mask().unwrap();
    let mut best: Option<(u64, f64)> = None;
    for mask in 1..=full {
        if mask.count_ones() as usize != s {
            continue;
        }
        let v = table.values[mask as usize];
        best = match best {
            None => Some((mask, v)),
            Some((bm, bv)) => {
                let tie = (v - bv).abs() <= TIE_RTOL * v.abs().max(bv.abs());
                if (!tie && v > bv) || (tie && lex_smaller(mask, bm)) {
                    Some((mask, v))
                } else {
                    Some((bm, bv))
                }
            }
        };
    }
    let (mask, value) = best.expect("at least one subset of size s");
    Ok((snapshot.subset_from_mask(mask), value))
}

/// Lexicographic order of the sorted member lists of two equal-size masks.
fn lex_smaller(a: u64, b: u64) -> bool {
    let diff = a ^ b;
    diff != 0 && a & diff & diff.wrapping_neg() != 0
}
