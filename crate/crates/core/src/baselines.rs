//! Comparison estimators: rumor centrality, Jordan center, degree centrality
//! and a uniformly random ranking.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::EstimationError;
use crate::graph::{Graph, InducedSubgraph, NodeSet, UNREACHABLE};
use crate::ranking::{Order, Ranking};

/// Breadth-first visit order from `root`; `dist` holds hop distances, with
/// [`UNREACHABLE`] for nodes outside the root's component.
fn bfs_order(local: &InducedSubgraph, root: usize, dist: &mut [usize], order: &mut Vec<usize>) {
    dist.fill(UNREACHABLE);
    order.clear();
    dist[root] = 0;
    order.push(root);
    let mut head = 0;
    while head < order.len() {
        let u = order[head];
        head += 1;
        for &w in local.neighbors(u) {
            if dist[w] == UNREACHABLE {
                dist[w] = dist[u] + 1;
                order.push(w);
            }
        }
    }
}

fn induced<'a>(graph: &Graph, snapshot: &'a NodeSet) -> Result<InducedSubgraph<'a>, EstimationError> {
    if snapshot.is_empty() {
        return Err(EstimationError::EmptySnapshot);
    }
    graph.check_set(snapshot)?;
    Ok(InducedSubgraph::new(graph, snapshot))
}

/// Rumor centrality `log R(v) = log |O|! − Σ_u log T_u(v)`, where `T_u(v)` is
/// the size of the subtree under `u` in a BFS tree of `G_O` rooted at `v`.
/// Exact on trees; on other graphs the BFS tree stands in for `G_O`. The BFS
/// scans neighbors in ascending id order and each node keeps its first parent.
pub fn rumor_centrality_rank(graph: &Graph, snapshot: &NodeSet) -> Result<Ranking, EstimationError> {
    let local = induced(graph, snapshot)?;
    let k = local.len();
    let ln: Vec<f64> = (0..=k).map(|i| (i as f64).ln()).collect();
    let log_factorial: f64 = ln[1..].iter().sum();
    let mut dist = vec![UNREACHABLE; k];
    let mut parent = vec![usize::MAX; k];
    let mut order = Vec::with_capacity(k);
    let mut size = vec![0usize; k];
    let mut scores = Vec::with_capacity(k);
    for root in 0..k {
        dist.fill(UNREACHABLE);
        order.clear();
        dist[root] = 0;
        order.push(root);
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &w in local.neighbors(u) {
                if dist[w] == UNREACHABLE {
                    dist[w] = dist[u] + 1;
                    parent[w] = u;
                    order.push(w);
                }
            }
        }
        if order.len() != k {
            return Err(EstimationError::Disconnected);
        }
        size.fill(1);
        let mut log_sizes = 0.0;
        for &u in order.iter().rev() {
            log_sizes += ln[size[u]];
            if u != root {
                size[parent[u]] += size[u];
            }
        }
        scores.push((local.node(root), log_factorial - log_sizes));
    }
    Ok(Ranking::from_scores(scores, Order::Descending))
}

/// Ranks by ascending eccentricity inside `G_O`.
pub fn jordan_center_rank(graph: &Graph, snapshot: &NodeSet) -> Result<Ranking, EstimationError> {
    let local = induced(graph, snapshot)?;
    let k = local.len();
    let mut dist = vec![UNREACHABLE; k];
    let mut order = Vec::with_capacity(k);
    let mut scores = Vec::with_capacity(k);
    for root in 0..k {
        bfs_order(&local, root, &mut dist, &mut order);
        if order.len() != k {
            return Err(EstimationError::Disconnected);
        }
        // the last node reached is among the farthest
        scores.push((local.node(root), dist[order[k - 1]] as f64));
    }
    Ok(Ranking::from_scores(scores, Order::Ascending))
}

/// Ranks by descending degree in the full graph.
pub fn degree_centrality_rank(graph: &Graph, snapshot: &NodeSet) -> Result<Ranking, EstimationError> {
    if snapshot.is_empty() {
        return Err(EstimationError::EmptySnapshot);
    }
    graph.check_set(snapshot)?;
    Ok(Ranking::from_scores(
        snapshot.iter().map(|v| (v, graph.degree(v) as f64)),
        Order::Descending,
    ))
}

/// Uniformly random permutation of the snapshot.
pub fn random_rank<R: Rng + ?Sized>(snapshot: &NodeSet, rng: &mut R) -> Result<Ranking, EstimationError> {
    if snapshot.is_empty() {
        return Err(EstimationError::EmptySnapshot);
    }
    let mut nodes = snapshot.members().to_vec();
    nodes.shuffle(rng);
    Ok(Ranking::from_order(nodes))
}
