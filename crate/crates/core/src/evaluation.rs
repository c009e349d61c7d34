//! Monte-Carlo comparison of source estimators on simulated epidemics.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{degree_centrality_rank, jordan_center_rank, random_rank, rumor_centrality_rank};
use crate::error::EstimationError;
use crate::exact::{distance_rank, posterior_capped, rank_estimate};
use crate::generators::{random_tree, regular_tree, sample_dcsbm, DcsbmConfig, GeneratorError};
use crate::graph::{read_edge_list, Graph, GraphError, Indexing, NodeLabels, NodeSet};
use crate::greedy::ge_rank;
use crate::mean_field::mfa_rank;
use crate::ranking::Ranking;
use crate::si::simulate_until_size;

/// Snapshot size above which the exact Bayes methods are skipped by default.
pub const DEFAULT_BAYES_CAP: usize = 10;

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Generator(#[from] GeneratorError),
    #[error("{method} failed at k = {k}, replicate {replicate}: {source}")]
    Method {
        method: Method,
        k: usize,
        replicate: usize,
        source: EstimationError,
    },
    #[error("simulation failed at k = {k}: {source}")]
    Simulation { k: usize, source: EstimationError },
    #[error("invalid experiment config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Rank-optimal exact Bayes (descending posterior).
    Bayes,
    /// Exact Bayes ranked by expected distance to the source.
    BayesDist,
    Ge,
    Mfa,
    Rc,
    Jc,
    Dc,
    Random,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Bayes,
        Method::BayesDist,
        Method::Ge,
        Method::Mfa,
        Method::Rc,
        Method::Jc,
        Method::Dc,
        Method::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Bayes => "bayes",
            Method::BayesDist => "bayes-dist",
            Method::Ge => "ge",
            Method::Mfa => "mfa",
            Method::Rc => "rc",
            Method::Jc => "jc",
            Method::Dc => "dc",
            Method::Random => "random",
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, Method::Bayes | Method::BayesDist)
    }

    /// Ranks the candidates of `snapshot`. `rng` is only drawn from by
    /// [`Method::Random`].
    pub fn rank<R: Rng + ?Sized>(
        self,
        graph: &Graph,
        snapshot: &NodeSet,
        bayes_cap: usize,
        rng: &mut R,
    ) -> Result<Ranking, EstimationError> {
        match self {
            Method::Bayes => Ok(rank_estimate(&posterior_capped(graph, snapshot, bayes_cap)?)),
            Method::BayesDist => {
                let post = posterior_capped(graph, snapshot, bayes_cap)?;
                Ok(distance_rank(graph, &post))
            }
            Method::Ge => ge_rank(graph, snapshot),
            Method::Mfa => mfa_rank(graph, snapshot),
            Method::Rc => rumor_centrality_rank(graph, snapshot),
            Method::Jc => jordan_center_rank(graph, snapshot),
            Method::Dc => degree_centrality_rank(graph, snapshot),
            Method::Random => random_rank(snapshot, rng),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let valid: Vec<&str> = Method::ALL.iter().map(|m| m.name()).collect();
            format!("unknown method `{s}`; valid methods: {}", valid.join(", "))
        })
    }
}

/// Denominator of the normalized rank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    /// `|O|`: random guessing sits near 0.5.
    #[default]
    Snapshot,
    /// `n`, the number of nodes in the graph.
    Network,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphSource {
    File {
        path: PathBuf,
        #[serde(default)]
        indexing: Indexing,
    },
    RegularTree {
        degree: usize,
        depth: usize,
    },
    RandomTree {
        n: usize,
        #[serde(default)]
        seed: u64,
    },
    Dcsbm(DcsbmConfig),
}

impl GraphSource {
    pub fn load(&self) -> Result<(Graph, NodeLabels), EvaluationError> {
        let plain = |g: Graph| (g, NodeLabels::for_indexing(Indexing::Zero));
        Ok(match self {
            GraphSource::File { path, indexing } => {
                let file = File::open(path)
                    .map_err(|e| GraphError::Io(format!("{}: {e}", path.display())))?;
                read_edge_list(BufReader::new(file), *indexing)?
            }
            GraphSource::RegularTree { degree, depth } => plain(regular_tree(*degree, *depth)?),
            GraphSource::RandomTree { n, seed } => plain(random_tree(*n, *seed)?),
            GraphSource::Dcsbm(cfg) => plain(sample_dcsbm(cfg)?.graph),
        })
    }
}

fn default_bayes_cap() -> usize {
    DEFAULT_BAYES_CAP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub graph: GraphSource,
    pub methods: Vec<Method>,
    /// Infection sizes `k` to sweep.
    pub sizes: Vec<usize>,
    /// Simulated epidemics per size.
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default = "default_bayes_cap")]
    pub bayes_cap: usize,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), EvaluationError> {
        let bad = |m: &str| Err(EvaluationError::Invalid(m.to_string()));
        if self.methods.is_empty() {
            return bad("at least one method is required");
        }
        if self.sizes.is_empty() || self.sizes.iter().any(|&k| k < 2) {
            return bad("sizes must be nonempty and every size at least 2");
        }
        if self.replicates == 0 {
            return bad("replicates must be at least 1");
        }
        Ok(())
    }
}

/// `(midrank(source) − 1) / denominator`.
pub fn normalized_rank(ranking: &Ranking, source: usize, denominator: usize) -> Result<f64, EstimationError> {
    let rank = ranking.rank_of(source).ok_or(EstimationError::NotInSnapshot(source))?;
    if denominator == 0 {
        return Err(EstimationError::Invalid("denominator must be positive".into()));
    }
    Ok((rank - 1.0) / denominator as f64)
}

/// Table columns of a network summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    pub nodes: usize,
    pub edges: usize,
    pub mean_degree: f64,
    pub max_degree: usize,
    /// Global transitivity, `3 × triangles / connected triples`.
    pub clustering: f64,
}

pub fn graph_stats(graph: &Graph) -> GraphStats {
    let n = graph.node_count();
    let mut triangles = 0u64;
    let mut triples = 0u64;
    for u in 0..n {
        let d = graph.degree(u) as u64;
        triples += d * d.saturating_sub(1) / 2;
        for &v in graph.neighbors(u).iter().filter(|&&v| v > u) {
            // common neighbors w > v, by merging the sorted lists
            let (a, b) = (graph.neighbors(u), graph.neighbors(v));
            let (mut i, mut j) = (a.partition_point(|&w| w <= v), b.partition_point(|&w| w <= v));
            while i < a.len() && j < b.len() {
                match a[i].cmp(&b[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => {
                        triangles += 1;
                        i += 1;
                        j += 1;
                    }
                }
            }
        }
    }
    GraphStats {
        nodes: n,
        edges: graph.edge_count(),
        mean_degree: if n == 0 { 0.0 } else { 2.0 * graph.edge_count() as f64 / n as f64 },
        max_degree: (0..n).map(|v| graph.degree(v)).max().unwrap_or(0),
        clustering: if triples == 0 { 0.0 } else { 3.0 * triangles as f64 / triples as f64 },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: Method,
    pub k: usize,
    /// `None` when the method was skipped at this size.
    pub mean_rank: Option<f64>,
    pub stderr: Option<f64>,
    pub mean_ms: Option<f64>,
    pub replicates: usize,
}

impl ResultRow {
    pub fn skipped(&self) -> bool {
        self.mean_rank.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub stats: GraphStats,
    pub rows: Vec<ResultRow>,
}

pub const CSV_HEADER: &str = "method,k,mean_rank,stderr,mean_ms,status";

impl ExperimentResult {
    pub fn row(&self, method: Method, k: usize) -> Option<&ResultRow> {
        self.rows.iter().find(|r| r.method == method && r.k == k)
    }

    /// Writes one row per `(method, k)`. Wall times vary between runs, so
    /// `timing = false` leaves `mean_ms` empty for byte-stable output.
    pub fn write_csv<W: Write>(&self, mut out: W, timing: bool) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            let ms = if timing { opt(r.mean_ms) } else { String::new() };
            let status = if r.skipped() { "skipped" } else { "ok" };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.method,
                r.k,
                opt(r.mean_rank),
                opt(r.stderr),
                ms,
                status
            )?;
        }
        Ok(())
    }
}

/// Outcome of one method on one simulated epidemic.
#[derive(Debug, Clone, Copy)]
struct Trial {
    rank: f64,
    ms: f64,
}

/// Independent stream for replicate `r` at the `size_index`-th size.
pub fn replicate_rng(seed: u64, size_index: usize, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((size_index as u64) << 32) | replicate as u64);
    rng
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, EvaluationError> {
    cfg.validate()?;
    let (graph, _) = cfg.graph.load()?;
    run_on_graph(&graph, cfg)
}

/// Runs the sweep on an already loaded graph, ignoring `cfg.graph`.
/// Replicates run in parallel on the current rayon pool; results are reduced
/// in replicate order, so every statistic except wall time is independent of
/// scheduling.
pub fn run_on_graph(graph: &Graph, cfg: &ExperimentConfig) -> Result<ExperimentResult, EvaluationError> {
    cfg.validate()?;
    let pool = graph.largest_component_nodes();
    let stats = graph_stats(graph);
    let mut rows = Vec::new();
    for (size_index, &k) in cfg.sizes.iter().enumerate() {
        if k > pool.len() {
            return Err(EvaluationError::Invalid(format!(
                "size {k} exceeds the largest component ({} nodes)",
                pool.len()
            )));
        }
        let active: Vec<Method> = cfg
            .methods
            .iter()
            .copied()
            .filter(|m| !(m.is_exact() && k > cfg.bayes_cap))
            .collect();
        let trials: Vec<Vec<Trial>> = (0..cfg.replicates)
            .into_par_iter()
            .map(|r| run_replicate(graph, &pool, cfg, &active, size_index, k, r))
            .collect::<Result<_, _>>()?;

        for &method in &cfg.methods {
            let Some(col) = active.iter().position(|&m| m == method) else {
                rows.push(ResultRow {
                    method,
                    k,
                    mean_rank: None,
                    stderr: None,
                    mean_ms: None,
                    replicates: 0,
                });
                continue;
            };
            let ranks: Vec<f64> = trials.iter().map(|t| t[col].rank).collect();
            let times: Vec<f64> = trials.iter().map(|t| t[col].ms).collect();
            let (mean, stderr) = mean_and_stderr(&ranks);
            rows.push(ResultRow {
                method,
                k,
                mean_rank: Some(mean),
                stderr: Some(stderr),
                mean_ms: Some(mean_and_stderr(&times).0),
                replicates: cfg.replicates,
            });
        }
    }
    Ok(ExperimentResult {
        config: cfg.clone(),
        stats,
        rows,
    })
}

fn run_replicate(
    graph: &Graph,
    pool: &NodeSet,
    cfg: &ExperimentConfig,
    methods: &[Method],
    size_index: usize,
    k: usize,
    replicate: usize,
) -> Result<Vec<Trial>, EvaluationError> {
    let mut rng = replicate_rng(cfg.seed, size_index, replicate);
    let source = pool.members()[rng.random_range(0..pool.len())];
    let snapshot = simulate_until_size(graph, &NodeSet::singleton(source), k, &mut rng)
        .map_err(|source| EvaluationError::Simulation { k, source })?
        .snapshot();
    let denominator = match cfg.normalization {
        Normalization::Snapshot => snapshot.len(),
        Normalization::Network => graph.node_count(),
    };
    methods
        .iter()
        .map(|&method| {
            let fail = |source| EvaluationError::Method {
                method,
                k,
                replicate,
                source,
            };
            let start = Instant::now();
            let ranking = method.rank(graph, &snapshot, cfg.bayes_cap, &mut rng).map_err(fail)?;
            let ms = start.elapsed().as_secs_f64() * 1e3;
            let rank = normalized_rank(&ranking, source, denominator).map_err(fail)?;
            Ok(Trial { rank, ms })
        })
        .collect()
}

/// Mean and standard error of the mean (zero for a single value).
fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
