//! Synthetic networks: regular trees, uniform random trees and the
//! degree-corrected stochastic block model.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Pareto};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Graph;

#[derive(Debug, Error, PartialEq)]
pub enum GeneratorError {
    #[error("invalid generator parameter: {0}")]
    Invalid(String),
    #[error("target mean degree {target} is unattainable (at most {max} with all probabilities clipped to 1)")]
    Unattainable { target: f64, max: f64 },
}

/// Rooted tree: the root (node 0) has `degree` children, every other internal
/// node `degree − 1`, down to `depth` levels. Nodes are numbered level by level.
pub fn regular_tree(degree: usize, depth: usize) -> Result<Graph, GeneratorError> {
    if degree < 2 {
        return Err(GeneratorError::Invalid(format!(
            "regular tree degree must be at least 2, got {degree}"
        )));
    }
    let mut edges = Vec::new();
    let mut level = vec![0usize];
    let mut next_id = 1;
    for d in 0..depth {
        let children = if d == 0 { degree } else { degree - 1 };
        let mut next = Vec::with_capacity(level.len() * children);
        for &parent in &level {
            for _ in 0..children {
                edges.push((parent, next_id));
                next.push(next_id);
                next_id += 1;
            }
        }
        level = next;
    }
    Ok(Graph::from_edges(next_id, edges).expect("tree edges are simple"))
}

/// Node count of [`regular_tree`]: `1 + d·Σ_{l<h} (d−1)^l`.
pub fn regular_tree_size(degree: usize, depth: usize) -> usize {
    1 + (0..depth).map(|l| degree * (degree - 1).pow(l as u32)).sum::<usize>()
}

/// Uniform random labeled tree on `n` nodes via a random Prüfer sequence.
pub fn random_tree(n: usize, seed: u64) -> Result<Graph, GeneratorError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_tree_with(n, &mut rng)
}

pub fn random_tree_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Graph, GeneratorError> {
    if n == 0 {
        return Err(GeneratorError::Invalid("random tree needs n ≥ 1".into()));
    }
    if n <= 2 {
        let edges: &[(usize, usize)] = if n == 2 { &[(0, 1)] } else { &[] };
        return Ok(Graph::from_edges(n, edges.iter().copied()).unwrap());
    }
    let code: Vec<usize> = (0..n - 2).map(|_| rng.random_range(0..n)).collect();
    Ok(Graph::from_edges(n, prufer_decode(n, &code)).expect("Prüfer trees are simple"))
}

/// Decodes a Prüfer sequence of length `n − 2` into the `n − 1` tree edges.
pub fn prufer_decode(n: usize, code: &[usize]) -> Vec<(usize, usize)> {
    let mut remaining = vec![1usize; n];
    for &v in code {
        remaining[v] += 1;
    }
    let mut leaves: BinaryHeap<Reverse<usize>> =
        (0..n).filter(|&v| remaining[v] == 1).map(Reverse).collect();
    let mut edges = Vec::with_capacity(n - 1);
    for &v in code {
        let Reverse(leaf) = leaves.pop().expect("a tree always has a leaf");
        edges.push((leaf, v));
        remaining[v] -= 1;
        if remaining[v] == 1 {
            leaves.push(Reverse(v));
        }
    }
    let Reverse(a) = leaves.pop().unwrap();
    let Reverse(b) = leaves.pop().unwrap();
    edges.push((a, b));
    edges
}

/// Degree-corrected stochastic block model with a planted partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcsbmConfig {
    pub n: usize,
    pub communities: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub pareto_alpha: f64,
    pub pareto_threshold: f64,
    /// Expected mean degree used to solve for the global scale `c`. `None`
    /// keeps `c = 1`.
    #[serde(default)]
    pub target_mean_degree: Option<f64>,
    /// `false` forces every `θ_i = 1` (plain planted partition).
    #[serde(default = "default_true")]
    pub degree_corrected: bool,
    /// Keep only the largest connected component, relabeled densely.
    #[serde(default)]
    pub largest_component: bool,
    #[serde(default)]
    pub seed: u64,
}

fn default_true() -> bool {
    true
}

impl DcsbmConfig {
    /// Parameters of the three-community network in the evaluation table.
    pub fn planted_three_block(n: usize, target_mean_degree: f64, seed: u64) -> Self {
        DcsbmConfig {
            n,
            communities: 3,
            p_in: 0.5,
            p_out: 0.02,
            pareto_alpha: 2.0,
            pareto_threshold: 1.0,
            target_mean_degree: Some(target_mean_degree),
            degree_corrected: true,
            largest_component: false,
            seed,
        }
    }

    fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: &str| Err(GeneratorError::Invalid(m.to_string()));
        if self.n == 0 {
            return bad("n must be positive");
        }
        if self.communities == 0 || self.communities > self.n {
            return bad("community count must be in 1..=n");
        }
        if !(0.0..=1.0).contains(&self.p_out) || !(self.p_out..=1.0).contains(&self.p_in) {
            return bad("need 0 ≤ p_out ≤ p_in ≤ 1");
        }
        if self.degree_corrected && !(self.pareto_alpha > 1.0 && self.pareto_threshold > 0.0) {
            return bad("need pareto_alpha > 1 and pareto_threshold > 0");
        }
        if let Some(t) = self.target_mean_degree {
            if !(t.is_finite() && t >= 0.0) {
                return bad("target mean degree must be finite and nonnegative");
            }
        }
        Ok(())
    }

    fn block_prob(&self, a: usize, b: usize) -> f64 {
        if a == b {
            self.p_in
        } else {
            self.p_out
        }
    }
}

/// A sampled DC-SBM together with the latent variables that produced it.
#[derive(Debug, Clone)]
pub struct DcsbmSample {
    pub graph: Graph,
    /// Block of each node of `graph`.
    pub block: Vec<usize>,
    pub theta: Vec<f64>,
    /// Global scale `c` in `P(A_ij = 1) = min(1, c·θ_i θ_j P_ij)`.
    pub scale: f64,
    /// Expected mean degree of the full (pre-component) graph under `scale`.
    pub expected_mean_degree: f64,
}

pub fn dcsbm(cfg: &DcsbmConfig) -> Result<Graph, GeneratorError> {
    sample_dcsbm(cfg).map(|s| s.graph)
}

pub fn sample_dcsbm(cfg: &DcsbmConfig) -> Result<DcsbmSample, GeneratorError> {
    cfg.validate()?;
    let n = cfg.n;
    let k = cfg.communities;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let block: Vec<usize> = (0..n).map(|i| i * k / n).collect();
    let theta: Vec<f64> = if cfg.degree_corrected {
        let pareto = Pareto::new(cfg.pareto_threshold, cfg.pareto_alpha)
            .map_err(|e| GeneratorError::Invalid(e.to_string()))?;
        (0..n).map(|_| pareto.sample(&mut rng)).collect()
    } else {
        vec![1.0; n]
    };

    // members of each block, by decreasing θ (skip sampling relies on it)
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for i in 0..n {
        members[block[i]].push(i);
    }
    for m in &mut members {
        m.sort_by(|&a, &b| theta[b].total_cmp(&theta[a]).then(a.cmp(&b)));
    }

    let volume = ExpectedVolume::new(cfg, &members, &theta);
    let scale = match cfg.target_mean_degree {
        None => 1.0,
        Some(target) => volume.solve_scale(target * n as f64 / 2.0)?,
    };
    let expected_mean_degree = 2.0 * volume.expected_edges(scale) / n as f64;

    let mut edges = Vec::new();
    for a in 0..k {
        for b in a..k {
            let p_block = cfg.block_prob(a, b);
            if p_block == 0.0 {
                continue;
            }
            let targets = &members[b];
            for (x, &u) in members[a].iter().enumerate() {
                let start = if a == b { x + 1 } else { 0 };
                let weight = scale * p_block * theta[u];
                sample_row(&mut rng, u, &targets[start..], &theta, weight, &mut edges);
            }
        }
    }
    let mut graph = Graph::from_edges(n, edges).expect("sampled pairs are distinct");
    let mut block = block;
    let mut theta = theta;
    if cfg.largest_component {
        let keep = graph.largest_component_nodes();
        let (sub, old) = graph.subgraph(&keep);
        graph = sub;
        block = old.iter().map(|&v| block[v]).collect();
        theta = old.iter().map(|&v| theta[v]).collect();
    }
    Ok(DcsbmSample {
        graph,
        block,
        theta,
        scale,
        expected_mean_degree,
    })
}

/// Bernoulli trials `min(1, weight·θ_v)` for `v` in `targets` (θ nonincreasing),
/// skipping geometrically between candidate successes.
fn sample_row<R: Rng>(
    rng: &mut R,
    u: usize,
    targets: &[usize],
    theta: &[f64],
    weight: f64,
    edges: &mut Vec<(usize, usize)>,
) {
    let mut j = 0;
    let mut bound = 1.0f64;
    while j < targets.len() {
        if bound < 1.0 {
            let r: f64 = rng.random();
            let skip = ((1.0 - r).ln() / (1.0 - bound).ln()).floor();
            if !(skip < (targets.len() - j) as f64) {
                break;
            }
            j += skip as usize;
        }
        let q = (weight * theta[targets[j]]).min(1.0);
        if q <= 0.0 {
            break;
        }
        if rng.random::<f64>() < q / bound {
            edges.push((u, targets[j]));
        }
        bound = q;
        j += 1;
    }
}

/// Expected edge count `Σ_{i<j} min(1, c·θ_iθ_jP_ij)` as a function of `c`,
/// evaluated in `O(K²·n log n)` from per-block sorted θ and prefix sums.
struct ExpectedVolume {
    probs: Vec<Vec<f64>>,
    /// ascending θ per block
    sorted: Vec<Vec<f64>>,
    prefix: Vec<Vec<f64>>,
    max_edges: f64,
}

impl ExpectedVolume {
    fn new(cfg: &DcsbmConfig, members: &[Vec<usize>], theta: &[f64]) -> Self {
        let k = members.len();
        let probs = (0..k)
            .map(|a| (0..k).map(|b| cfg.block_prob(a, b)).collect())
            .collect();
        let sorted: Vec<Vec<f64>> = members
            .iter()
            .map(|m| {
                let mut t: Vec<f64> = m.iter().map(|&v| theta[v]).collect();
                t.sort_by(f64::total_cmp);
                t
            })
            .collect();
        let prefix = sorted
            .iter()
            .map(|t| {
                let mut acc = vec![0.0];
                for &x in t {
                    acc.push(acc.last().unwrap() + x);
                }
                acc
            })
            .collect();
        let mut max_edges = 0.0;
        for a in 0..k {
            for b in a..k {
                if cfg.block_prob(a, b) > 0.0 {
                    let (na, nb) = (members[a].len() as f64, members[b].len() as f64);
                    max_edges += if a == b { na * (na - 1.0) / 2.0 } else { na * nb };
                }
            }
        }
        ExpectedVolume {
            probs,
            sorted,
            prefix,
            max_edges,
        }
    }

    /// Σ over ordered pairs (i in block a, j in block b) of min(1, w·θ_iθ_j).
    fn ordered_block_sum(&self, a: usize, b: usize, w: f64) -> f64 {
        let (tb, pb) = (&self.sorted[b], &self.prefix[b]);
        self.sorted[a]
            .iter()
            .map(|&ti| {
                let cut = 1.0 / (w * ti);
                let idx = tb.partition_point(|&tj| tj < cut);
                w * ti * pb[idx] + (tb.len() - idx) as f64
            })
            .sum()
    }

    fn expected_edges(&self, c: f64) -> f64 {
        let k = self.sorted.len();
        let mut total = 0.0;
        for a in 0..k {
            for b in a..k {
                let p = self.probs[a][b];
                if p == 0.0 {
                    continue;
                }
                let w = c * p;
                if a == b {
                    let diag: f64 = self.sorted[a].iter().map(|&t| (w * t * t).min(1.0)).sum();
                    total += (self.ordered_block_sum(a, a, w) - diag) / 2.0;
                } else {
                    total += self.ordered_block_sum(a, b, w);
                }
            }
        }
        total
    }

    fn solve_scale(&self, target_edges: f64) -> Result<f64, GeneratorError> {
        if target_edges == 0.0 {
            return Ok(0.0);
        }
        if target_edges >= self.max_edges {
            let n: usize = self.sorted.iter().map(Vec::len).sum();
            return Err(GeneratorError::Unattainable {
                target: 2.0 * target_edges / n as f64,
                max: 2.0 * self.max_edges / n as f64,
            });
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while self.expected_edges(hi) < target_edges {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.expected_edges(mid) < target_edges {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn is_tree(g: &Graph) -> bool {
        g.edge_count() + 1 == g.node_count() && g.is_connected()
    }

    #[test]
    fn regular_tree_examples() {
        let star = regular_tree(3, 1).unwrap();
        assert_eq!(star.node_count(), 4);
        assert_eq!(star.degree(0), 3);
        assert_eq!(regular_tree(3, 2).unwrap().node_count(), 10);
        let path = regular_tree(2, 3).unwrap();
        assert_eq!(path.node_count(), 7);
        assert!((0..7).all(|v| path.degree(v) <= 2));
        assert!(is_tree(&path));
        assert!(regular_tree(1, 3).is_err());
    }

    #[test]
    fn regular_tree_sizes_match_branching_sum() {
        for d in 2..=4 {
            for h in 0..=5 {
                let g = regular_tree(d, h).unwrap();
                assert_eq!(g.node_count(), regular_tree_size(d, h), "d={d} h={h}");
                assert!(is_tree(&g));
                if h >= 2 {
                    assert!((1..g.node_count()).all(|v| g.degree(v) == d || g.degree(v) == 1));
                }
            }
        }
        assert_eq!(regular_tree_size(3, 10), 3070);
    }

    #[test]
    fn random_tree_small_cases() {
        assert_eq!(random_tree(1, 0).unwrap().node_count(), 1);
        let g = random_tree(2, 5).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), vec![(0, 1)]);
        for seed in 0..20 {
            let g = random_tree(50, seed).unwrap();
            assert!(is_tree(&g));
        }
    }

    #[test]
    fn random_tree_three_nodes_is_uniform() {
        // Cayley: 3^(3-2) = 3 labeled trees, identified by their center.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws = 10_000;
        let mut counts: HashMap<usize, usize> = HashMap::new();
        for _ in 0..draws {
            let g = random_tree_with(3, &mut rng).unwrap();
            let center = (0..3).find(|&v| g.degree(v) == 2).unwrap();
            *counts.entry(center).or_default() += 1;
        }
        let sigma = (draws as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for c in 0..3 {
            let got = counts[&c] as f64;
            assert!((got - draws as f64 / 3.0).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn prufer_known_sequence() {
        // sequence (3,3,3) on 5 nodes is the star centered at 3
        let mut e = prufer_decode(5, &[3, 3, 3]);
        e.sort();
        assert_eq!(e, vec![(0, 3), (1, 3), (2, 3), (3, 4)]);
    }

    fn er_config(n: usize, p: f64, seed: u64) -> DcsbmConfig {
        DcsbmConfig {
            n,
            communities: 1,
            p_in: p,
            p_out: p,
            pareto_alpha: 2.0,
            pareto_threshold: 1.0,
            target_mean_degree: Some((n - 1) as f64 * p),
            degree_corrected: false,
            largest_component: false,
            seed,
        }
    }

    #[test]
    fn dcsbm_degenerates_to_erdos_renyi() {
        let (n, p) = (600, 0.05);
        let sample = sample_dcsbm(&er_config(n, p, 3)).unwrap();
        assert!((sample.scale - 1.0).abs() < 1e-9, "scale {}", sample.scale);
        let pairs = (n * (n - 1) / 2) as f64;
        let m = sample.graph.edge_count() as f64;
        let sd = (pairs * p * (1.0 - p)).sqrt();
        assert!((m - pairs * p).abs() <= 3.0 * sd, "m = {m}");
    }

    #[test]
    fn dcsbm_planted_partition_reaches_target_mean_degree() {
        let cfg = DcsbmConfig::planted_three_block(1962, 66.0, 7);
        let sample = sample_dcsbm(&cfg).unwrap();
        assert!((sample.expected_mean_degree - 66.0).abs() < 1e-6);
        let g = &sample.graph;
        let mean = 2.0 * g.edge_count() as f64 / g.node_count() as f64;
        assert!((mean - 66.0).abs() <= 6.6, "mean degree {mean}");
    }

    #[test]
    fn dcsbm_without_cross_probability_has_no_cross_edges() {
        let mut cfg = DcsbmConfig::planted_three_block(300, 10.0, 1);
        cfg.p_out = 0.0;
        let sample = sample_dcsbm(&cfg).unwrap();
        assert!(sample.graph.edge_count() > 0);
        for (a, b) in sample.graph.edges() {
            assert_eq!(sample.block[a], sample.block[b]);
        }
    }

    #[test]
    fn dcsbm_is_reproducible_and_seed_sensitive() {
        let cfg = DcsbmConfig::planted_three_block(400, 12.0, 99);
        assert_eq!(dcsbm(&cfg).unwrap(), dcsbm(&cfg).unwrap());
        let other = DcsbmConfig { seed: 100, ..cfg };
        assert_ne!(dcsbm(&cfg).unwrap(), dcsbm(&other).unwrap());
    }

    #[test]
    fn dcsbm_largest_component_is_connected() {
        let mut cfg = DcsbmConfig::planted_three_block(500, 2.0, 4);
        cfg.largest_component = true;
        let s = sample_dcsbm(&cfg).unwrap();
        assert!(s.graph.is_connected());
        assert_eq!(s.block.len(), s.graph.node_count());
    }

    #[test]
    fn dcsbm_rejects_bad_configs() {
        let mut cfg = DcsbmConfig::planted_three_block(100, 5.0, 0);
        cfg.p_out = 0.9;
        assert!(matches!(dcsbm(&cfg), Err(GeneratorError::Invalid(_))));
        let cfg = DcsbmConfig::planted_three_block(30, 500.0, 0);
        assert!(matches!(dcsbm(&cfg), Err(GeneratorError::Unattainable { .. })));
    }

    #[test]
    fn skip_sampler_matches_independent_bernoulli_rates() {
        // all-ones θ with weight 0.3: each of the 200 targets kept w.p. 0.3
        let theta = vec![1.0; 201];
        let targets: Vec<usize> = (1..=200).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut hits = vec![0usize; 201];
        let reps = 2000;
        for _ in 0..reps {
            let mut edges = Vec::new();
            sample_row(&mut rng, 0, &targets, &theta, 0.3, &mut edges);
            for (_, v) in edges {
                hits[v] += 1;
            }
        }
        let total: usize = hits.iter().sum();
        let expect = 0.3 * 200.0 * reps as f64;
        let sd = (200.0 * reps as f64 * 0.3 * 0.7).sqrt();
        assert!((total as f64 - expect).abs() <= 4.0 * sd);
    }
}
