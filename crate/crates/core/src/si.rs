//! Continuous-time SI epidemics.
//!
//! A susceptible node `j` next to the infected set `I` catches the infection
//! after an `Exp(β·vol(I, j))` delay, so the next infected node is `j` with
//! probability `vol(I, j) / vol(I, Iᶜ)`. Size-stopped sampling only walks this
//! jump chain and therefore takes no rate parameter at all.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::EstimationError;
use crate::graph::{Graph, NodeSet};

/// A sampled infection path. The first `source_count` nodes are the sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfectionTrace {
    pub order: Vec<usize>,
    pub source_count: usize,
    /// Event times, present only for time-stopped runs (sources at 0).
    pub times: Option<Vec<f64>>,
    pub beta: Option<f64>,
}

impl InfectionTrace {
    pub fn sources(&self) -> &[usize] {
        &self.order[..self.source_count]
    }

    /// The infected set at the end of the trace.
    pub fn snapshot(&self) -> NodeSet {
        NodeSet::new(self.order.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Distinct nodes, each non-source adjacent to an earlier node, and
    /// nondecreasing times when present.
    pub fn is_permitted(&self, graph: &Graph) -> bool {
        let mut seen = std::collections::HashSet::new();
        for (p, &v) in self.order.iter().enumerate() {
            if v >= graph.node_count() || !seen.insert(v) {
                return false;
            }
            if p >= self.source_count && !graph.neighbors(v).iter().any(|w| seen.contains(w) && *w != v)
            {
                return false;
            }
        }
        match &self.times {
            None => true,
            Some(t) => {
                t.len() == self.order.len()
                    && t[..self.source_count].iter().all(|&x| x == 0.0)
                    && t.windows(2).all(|w| w[0] <= w[1])
            }
        }
    }
}

/// `P(next infected = j)` for every susceptible `j` touching `infected`.
pub fn next_infection_distribution(
    graph: &Graph,
    infected: &NodeSet,
) -> Result<Vec<(usize, f64)>, EstimationError> {
    if infected.is_empty() {
        return Err(EstimationError::EmptySnapshot);
    }
    graph.check_set(infected)?;
    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
    for i in infected.iter() {
        for &j in graph.neighbors(i) {
            if !infected.contains(j) {
                *counts.entry(j).or_default() += 1;
            }
        }
    }
    let total: u64 = counts.values().sum();
    if total == 0 {
        return Err(EstimationError::Absorbed);
    }
    Ok(counts
        .into_iter()
        .map(|(j, c)| (j, c as f64 / total as f64))
        .collect())
}

/// Infect until exactly `size` nodes are infected.
pub fn simulate_until_size<R: Rng + ?Sized>(
    graph: &Graph,
    sources: &NodeSet,
    size: usize,
    rng: &mut R,
) -> Result<InfectionTrace, EstimationError> {
    check_sources(graph, sources)?;
    if size < sources.len() {
        return Err(EstimationError::Invalid(format!(
            "target size {size} is smaller than the {} sources",
            sources.len()
        )));
    }
    let reachable = reachable_up_to(graph, sources, size);
    if reachable < size {
        return Err(EstimationError::Unreachable {
            target: size,
            reachable,
        });
    }
    let mut state = Frontier::new(graph, sources);
    while state.order.len() < size {
        let next = state.sample(rng).expect("reachability checked above");
        state.infect(graph, next);
    }
    let trace = InfectionTrace {
        order: state.order,
        source_count: sources.len(),
        times: None,
        beta: None,
    };
    debug_assert!(trace.is_permitted(graph));
    Ok(trace)
}

/// Gillespie simulation of all infections up to time `horizon`.
pub fn simulate_until_time<R: Rng + ?Sized>(
    graph: &Graph,
    sources: &NodeSet,
    beta: f64,
    horizon: f64,
    rng: &mut R,
) -> Result<InfectionTrace, EstimationError> {
    check_sources(graph, sources)?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(EstimationError::Invalid(format!("rate must be positive, got {beta}")));
    }
    if !(horizon >= 0.0) {
        return Err(EstimationError::Invalid(format!("duration must be nonnegative, got {horizon}")));
    }
    let mut state = Frontier::new(graph, sources);
    let mut times = vec![0.0; sources.len()];
    let mut now = 0.0;
    while state.total > 0 {
        let clock = Exp::new(beta * state.total as f64).expect("positive rate");
        now += clock.sample(rng);
        if now > horizon {
            break;
        }
        let next = state.sample(rng).expect("nonzero boundary");
        state.infect(graph, next);
        times.push(now);
    }
    let trace = InfectionTrace {
        order: state.order,
        source_count: sources.len(),
        times: Some(times),
        beta: Some(beta),
    };
    debug_assert!(trace.is_permitted(graph));
    Ok(trace)
}

fn check_sources(graph: &Graph, sources: &NodeSet) -> Result<(), EstimationError> {
    if sources.is_empty() {
        return Err(EstimationError::Invalid("at least one source is required".into()));
    }
    graph.check_set(sources)?;
    Ok(())
}

/// Nodes reachable from `sources`, counting no further than `limit`.
fn reachable_up_to(graph: &Graph, sources: &NodeSet, limit: usize) -> usize {
    let mut seen: std::collections::HashSet<usize> = sources.iter().collect();
    let mut stack: Vec<usize> = sources.iter().collect();
    while let Some(u) = stack.pop() {
        if seen.len() >= limit {
            break;
        }
        for &w in graph.neighbors(u) {
            if seen.insert(w) {
                stack.push(w);
            }
        }
    }
    seen.len()
}

/// Infected set plus boundary counts `vol(I, j)` kept in a Fenwick tree, so a
/// step costs `O(deg · log n)`.
struct Frontier {
    infected: Vec<bool>,
    weight: Vec<u64>,
    tree: Vec<u64>,
    total: u64,
    order: Vec<usize>,
}

impl Frontier {
    fn new(graph: &Graph, sources: &NodeSet) -> Self {
        let n = graph.node_count();
        let mut state = Frontier {
            infected: vec![false; n],
            weight: vec![0; n],
            tree: vec![0; n + 1],
            total: 0,
            order: Vec::new(),
        };
        for s in sources.iter() {
            state.infect(graph, s);
        }
        state
    }

    fn add(&mut self, node: usize, delta: i64) {
        self.weight[node] = self.weight[node].wrapping_add_signed(delta);
        self.total = self.total.wrapping_add_signed(delta);
        let mut i = node + 1;
        while i < self.tree.len() {
            self.tree[i] = self.tree[i].wrapping_add_signed(delta);
            i += i & i.wrapping_neg();
        }
    }

    fn infect(&mut self, graph: &Graph, node: usize) {
        self.infected[node] = true;
        self.order.push(node);
        let w = self.weight[node];
        if w > 0 {
            self.add(node, -(w as i64));
        }
        for &j in graph.neighbors(node) {
            if !self.infected[j] {
                self.add(j, 1);
            }
        }
    }

    /// Node `j` with probability `weight[j] / total`.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<usize> {
        if self.total == 0 {
            return None;
        }
        let mut target = rng.random_range(0..self.total);
        let mut pos = 0;
        let mut step = (self.tree.len() - 1).next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= target {
                target -= self.tree[next];
                pos = next;
            }
            step >>= 1;
        }
        Some(pos)
    }
}
