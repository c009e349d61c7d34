//! Scored total orders over candidate sources.

use serde::{Deserialize, Serialize};

/// Relative tolerance under which two scores count as tied.
pub const TIE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankEntry {
    pub node: usize,
    pub score: f64,
    /// 1-based position; tied scores share their midrank.
    pub rank: f64,
}

/// Candidates ordered from most to least likely source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    entries: Vec<RankEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Larger scores rank first.
    Descending,
    /// Smaller scores rank first.
    Ascending,
}

fn tied(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= TIE_RTOL * a.abs().max(b.abs())
}

impl Ranking {
    /// Sorts `(node, score)` pairs by score, breaking exact order among ties by
    /// node id, and assigns midranks to tie groups.
    pub fn from_scores<I>(scored: I, order: Order) -> Ranking
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        let mut items: Vec<(usize, f64)> = scored.into_iter().collect();
        let key = |s: f64| match order {
            Order::Descending => -s,
            Order::Ascending => s,
        };
        items.sort_by(|a, b| key(a.1).total_cmp(&key(b.1)).then(a.0.cmp(&b.0)));

        let mut entries = Vec::with_capacity(items.len());
        let mut start = 0;
        while start < items.len() {
            let head = items[start].1;
            let mut end = start + 1;
            while end < items.len() && tied(head, items[end].1) {
                end += 1;
            }
            // positions start+1 ..= end share the midrank
            let midrank = (start + 1 + end) as f64 / 2.0;
            let mut group: Vec<(usize, f64)> = items[start..end].to_vec();
            group.sort_by_key(|&(node, _)| node);
            entries.extend(group.into_iter().map(|(node, score)| RankEntry {
                node,
                score,
                rank: midrank,
            }));
            start = end;
        }
        Ranking { entries }
    }

    /// Ranking that follows the given order exactly, with strictly decreasing
    /// scores `0, -1, -2, ...`.
    pub fn from_order<I: IntoIterator<Item = usize>>(order: I) -> Ranking {
        let entries = order
            .into_iter()
            .enumerate()
            .map(|(p, node)| RankEntry {
                node,
                score: 0.0 - p as f64,
                rank: (p + 1) as f64,
            })
            .collect();
        Ranking { entries }
    }

    pub fn entries(&self) -> &[RankEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Nodes in ranked order.
    pub fn nodes(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.node).collect()
    }

    pub fn top(&self) -> Option<usize> {
        self.entries.first().map(|e| e.node)
    }

    /// Midrank of `node`, if it is a candidate.
    pub fn rank_of(&self, node: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.node == node).map(|e| e.rank)
    }

    pub fn score_of(&self, node: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.node == node).map(|e| e.score)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn descending_with_ties() {
        let r = Ranking::from_scores([(3, 1.0), (1, 2.0), (2, 2.0)], Order::Descending);
        assert_eq!(r.nodes(), vec![1, 2, 3]);
        assert_eq!(r.rank_of(1), Some(1.5));
        assert_eq!(r.rank_of(2), Some(1.5));
        assert_eq!(r.rank_of(3), Some(3.0));
        assert_eq!(r.rank_of(9), None);
    }

    #[test]
    fn ascending_and_uniform() {
        let r = Ranking::from_scores([(0, 2.0), (1, 1.0), (2, 2.0)], Order::Ascending);
        assert_eq!(r.top(), Some(1));
        let u = Ranking::from_scores((0..4).map(|v| (v, 0.25)), Order::Descending);
        assert!(u.entries().iter().all(|e| e.rank == 2.5));
    }

    #[test]
    fn near_equal_scores_tie() {
        let r = Ranking::from_scores([(0, 1.0), (1, 1.0 + 1e-13)], Order::Descending);
        assert_eq!(r.rank_of(0), Some(1.5));
    }

    #[test]
    fn explicit_order() {
        let r = Ranking::from_order([4, 2, 7]);
        assert_eq!(r.nodes(), vec![4, 2, 7]);
        assert_eq!(r.rank_of(7), Some(3.0));
    }

    proptest! {
        #[test]
        fn midranks_sum_like_a_permutation(scores in proptest::collection::vec(0u8..4, 1..30)) {
            let r = Ranking::from_scores(
                scores.iter().enumerate().map(|(v, &s)| (v, f64::from(s))),
                Order::Descending,
            );
            let k = scores.len();
            let total: f64 = r.entries().iter().map(|e| e.rank).sum();
            prop_assert_eq!(total, (k * (k + 1)) as f64 / 2.0);
            let mut nodes = r.nodes();
            nodes.sort_unstable();
            prop_assert_eq!(nodes, (0..k).collect::<Vec<_>>());
            for a in r.entries() {
                for b in r.entries() {
                    if a.score == b.score {
                        prop_assert_eq!(a.rank, b.rank);
                    }
                    if a.score > b.score {
                        prop_assert!(a.rank < b.rank);
                    }
                }
            }
        }
    }
}
