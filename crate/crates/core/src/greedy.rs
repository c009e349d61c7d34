//! Greedy elimination: peel the snapshot backwards one node at a time.
//!
//! Starting from `O_0 = O`, each step removes the node `j` of `O_i` that keeps
//! `G_{O_i ∖ j}` connected and maximizes the one-step backward transition
//! probability `vol(O_i∖j, j) / vol(O_i∖j, (O_i∖j)ᶜ)`. The last node standing
//! is the source estimate.
//!
//! Scores are compared exactly as fractions of integers. Ties go to the
//! smallest node id. Each step recomputes cut vertices in `O(|O_i| + e(O_i))`
//! and updates boundary volumes incrementally.

use serde::{Deserialize, Serialize};

use crate::error::EstimationError;
use crate::graph::{CutVertices, Graph, InducedSubgraph, NodeSet};
use crate::ranking::Ranking;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EliminationLog {
    /// `(node, score)` in elimination order.
    pub removed: Vec<(usize, f64)>,
    pub survivor: usize,
}

/// State of one elimination step, recorded by [`ge_eliminate_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct EliminationStep {
    /// `O_i` before the removal.
    pub remaining: NodeSet,
    /// Nodes whose removal keeps `G_{O_i}` connected.
    pub candidates: NodeSet,
}

pub fn ge_eliminate(graph: &Graph, snapshot: &NodeSet) -> Result<EliminationLog, EstimationError> {
    eliminate(graph, snapshot, None)
}

pub fn ge_eliminate_traced(
    graph: &Graph,
    snapshot: &NodeSet,
) -> Result<(EliminationLog, Vec<EliminationStep>), EstimationError> {
    let mut steps = Vec::new();
    let log = eliminate(graph, snapshot, Some(&mut steps))?;
    Ok((log, steps))
}

/// Survivor first, then the eliminated nodes from last to first removed.
pub fn ge_rank(graph: &Graph, snapshot: &NodeSet) -> Result<Ranking, EstimationError> {
    let log = ge_eliminate(graph, snapshot)?;
    Ok(Ranking::from_order(
        std::iter::once(log.survivor).chain(log.removed.iter().rev().map(|&(v, _)| v)),
    ))
}

fn eliminate(
    graph: &Graph,
    snapshot: &NodeSet,
    mut trace: Option<&mut Vec<EliminationStep>>,
) -> Result<EliminationLog, EstimationError> {
    if snapshot.is_empty() {
        return Err(EstimationError::EmptySnapshot);
    }
    graph.check_set(snapshot)?;
    let local = InducedSubgraph::new(graph, snapshot);
    let k = local.len();
    let mut alive = vec![true; k];
    let mut cuts = CutVertices::default();
    local.cut_vertices_into(&alive, &mut cuts);
    if cuts.components != 1 {
        return Err(EstimationError::Disconnected);
    }

    let mut inner: Vec<u64> = (0..k).map(|v| local.degree(v) as u64).collect();
    let outer = |v: usize, inner: &[u64]| graph.degree(local.node(v)) as u64 - inner[v];
    let mut boundary: u64 = (0..k).map(|v| outer(v, &inner)).sum();
    let mut removed = Vec::with_capacity(k.saturating_sub(1));

    for step in 1..k {
        if step > 1 {
            local.cut_vertices_into(&alive, &mut cuts);
        }
        debug_assert_eq!(cuts.components, 1, "intermediate set must stay connected");
        if let Some(steps) = trace.as_deref_mut() {
            let remaining = (0..k).filter(|&v| alive[v]);
            steps.push(EliminationStep {
                remaining: NodeSet::new(remaining.clone().map(|v| local.node(v))),
                candidates: NodeSet::new(
                    remaining.filter(|&v| !cuts.is_cut[v]).map(|v| local.node(v)),
                ),
            });
        }

        // (local index, vol(O_i∖j, j), vol(O_i∖j, (O_i∖j)ᶜ))
        let mut best: Option<(usize, u64, u64)> = None;
        for v in (0..k).filter(|&v| alive[v] && !cuts.is_cut[v]) {
            let num = inner[v];
            let den = boundary - outer(v, &inner) + inner[v];
            // j itself sits outside O_i∖j and touches it, so den ≥ num ≥ 1
            debug_assert!(den >= num && num > 0);
            let better = match best {
                None => true,
                Some((_, bn, bd)) => u128::from(num) * u128::from(bd) > u128::from(bn) * u128::from(den),
            };
            if better {
                best = Some((v, num, den));
            }
        }
        let (v, num, den) = best.expect("a connected graph has a non-cut vertex");
        alive[v] = false;
        boundary = den;
        for &w in local.neighbors(v) {
            if alive[w] {
                inner[w] -= 1;
            }
        }
        removed.push((local.node(v), num as f64 / den as f64));
    }

    let survivor = (0..k).find(|&v| alive[v]).map(|v| local.node(v)).unwrap();
    Ok(EliminationLog { removed, survivor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::fixtures::*;
    use crate::graph::tests::arb_graph;
    use proptest::prelude::*;

    #[test]
    fn path_example() {
        let log = ge_eliminate(&p4(), &set(&[0, 1, 2])).unwrap();
        assert_eq!(log.removed, vec![(2, 1.0), (1, 1.0)]);
        assert_eq!(log.survivor, 0);
        let (_, steps) = ge_eliminate_traced(&p4(), &set(&[0, 1, 2])).unwrap();
        assert_eq!(steps[0].candidates, set(&[0, 2]));
        assert_eq!(steps[1].candidates, set(&[0, 1]));
        assert_eq!(ge_rank(&p4(), &set(&[0, 1, 2])).unwrap().nodes(), vec![0, 1, 2]);
    }

    #[test]
    fn singleton_snapshot() {
        let log = ge_eliminate(&p4(), &set(&[3])).unwrap();
        assert!(log.removed.is_empty());
        assert_eq!(log.survivor, 3);
        assert_eq!(ge_rank(&p4(), &set(&[3])).unwrap().nodes(), vec![3]);
    }

    #[test]
    fn star_keeps_center_until_two_nodes_remain() {
        // The center is a cut vertex while two or more leaves remain. With one
        // leaf left, removing the center scores 1/deg(leaf) = 1 against
        // 1/deg(center) for the leaf, so the leaf survives.
        let g = star(4);
        let (log, steps) = ge_eliminate_traced(&g, &set(&[0, 1, 2, 3, 4])).unwrap();
        for step in &steps[..3] {
            assert!(!step.candidates.contains(0));
        }
        assert_eq!(log.removed.iter().map(|r| r.0).collect::<Vec<_>>(), vec![1, 2, 3, 0]);
        assert_eq!(log.survivor, 4);
    }

    #[test]
    fn disconnected_snapshot_is_rejected() {
        assert_eq!(
            ge_eliminate(&p4(), &set(&[0, 2])),
            Err(EstimationError::Disconnected)
        );
        assert_eq!(ge_eliminate(&p4(), &NodeSet::empty()), Err(EstimationError::EmptySnapshot));
    }

    fn naive_connected(g: &Graph, s: &NodeSet) -> bool {
        s.len() <= 1 || g.induced_connectivity(s).unwrap().is_connected
    }

    proptest! {
        #[test]
        fn candidates_are_exactly_non_articulation_nodes(g in arb_graph(12, 0.3), seed in any::<u64>(), k in 1usize..=12) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let start = seed as usize % g.node_count();
            let Ok(trace) = crate::si::simulate_until_size(&g, &NodeSet::singleton(start), k, &mut rng) else {
                return Ok(());
            };
            let o = trace.snapshot();
            let (log, steps) = ge_eliminate_traced(&g, &o).unwrap();
            prop_assert_eq!(log.removed.len(), o.len() - 1);
            let mut all: Vec<usize> = log.removed.iter().map(|r| r.0).collect();
            all.push(log.survivor);
            prop_assert_eq!(NodeSet::new(all), o.clone());
            for step in &steps {
                prop_assert!(naive_connected(&g, &step.remaining));
                for v in step.remaining.iter() {
                    let rest = NodeSet::new(step.remaining.iter().filter(|&w| w != v));
                    prop_assert_eq!(step.candidates.contains(v), naive_connected(&g, &rest));
                }
            }
            let ranking = ge_rank(&g, &o).unwrap();
            prop_assert_eq!(ranking.top(), Some(log.survivor));
        }
    }
}
