mod output;

use std::fmt::Write as _;
use std::io::{BufReader, Cursor};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use sourcetrace::evaluation::{self, graph_stats, ExperimentConfig, GraphSource, Method, Normalization};
use sourcetrace::exact::{self, DEFAULT_DP_CAP};
use sourcetrace::generators::{sample_dcsbm, DcsbmConfig};
use sourcetrace::graph::{read_edge_list, read_node_set, write_edge_list};
use sourcetrace::mean_field;
use sourcetrace::plot::{render_svg, series_from_csv, ChartOptions};
use sourcetrace::si::{simulate_until_size, simulate_until_time, InfectionTrace};
use sourcetrace::{baselines, greedy, Graph, Indexing, NodeLabels, NodeSet, Ranking};

use output::{ensure_dir, read_file, write_file, CliError, CliResult, RunManifest};

#[derive(Parser)]
#[command(
    name = "sourcetrace",
    version,
    about = "Locate the source of an SI epidemic from a snapshot of infected nodes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic graph
    Generate(GenerateArgs),
    /// Simulate an SI epidemic on a graph
    Simulate(SimulateArgs),
    /// Rank candidate sources for an observed snapshot
    Infer(InferArgs),
    /// Run a Monte-Carlo comparison of estimators
    Evaluate(EvaluateArgs),
    /// Print network summary statistics
    Stats(StatsArgs),
    /// Render evaluation results as an SVG line chart
    Plot(PlotArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum IndexingArg {
    Zero,
    One,
    Label,
}

impl From<IndexingArg> for Indexing {
    fn from(i: IndexingArg) -> Self {
        match i {
            IndexingArg::Zero => Indexing::Zero,
            IndexingArg::One => Indexing::One,
            IndexingArg::Label => Indexing::Label,
        }
    }
}

#[derive(Args)]
struct GraphArgs {
    /// Edge list, one whitespace-separated pair per line
    #[arg(long)]
    graph: PathBuf,
    /// How node tokens map to ids
    #[arg(long, value_enum, default_value = "zero")]
    indexing: IndexingArg,
}

impl GraphArgs {
    fn load(&self) -> CliResult<(Graph, NodeLabels)> {
        let bytes = read_file(&self.graph)?;
        read_edge_list(BufReader::new(Cursor::new(bytes)), self.indexing.into())
            .map_err(|e| CliError::input(format!("{}: {e}", self.graph.display())))
    }

    fn describe(&self) -> serde_json::Value {
        json!({ "graph": self.graph, "indexing": Indexing::from(self.indexing) })
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GeneratorKind {
    RegularTree,
    RandomTree,
    Dcsbm,
}

#[derive(Args)]
struct GenerateArgs {
    /// Graph family; optional when --config names one
    #[arg(long, value_enum)]
    kind: Option<GeneratorKind>,
    /// JSON generator config (same shape as the `graph` field of an experiment config)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    /// Node count
    #[arg(long, short = 'n')]
    nodes: Option<usize>,
    #[arg(long)]
    communities: Option<usize>,
    #[arg(long)]
    p_in: Option<f64>,
    #[arg(long)]
    p_out: Option<f64>,
    #[arg(long)]
    pareto_alpha: Option<f64>,
    #[arg(long)]
    pareto_threshold: Option<f64>,
    /// Target expected mean degree (DC-SBM)
    #[arg(long)]
    mean_degree: Option<f64>,
    /// Use θ = 1 for every node (plain planted partition)
    #[arg(long)]
    no_degree_correction: bool,
    /// Keep only the largest connected component
    #[arg(long)]
    largest_component: bool,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Source node(s); a uniform node of the largest component when omitted
    #[arg(long, value_delimiter = ',')]
    source: Vec<String>,
    /// Stop once this many nodes are infected
    #[arg(long, conflicts_with = "time", required_unless_present = "time")]
    size: Option<usize>,
    /// Stop at this time horizon (continuous-time run)
    #[arg(long)]
    time: Option<f64>,
    /// Per-edge infection rate for timed runs
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write trace.csv, snapshot.txt and manifest.json here instead of stdout
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum InferMethod {
    /// Exact posterior, ranked by probability
    Bayes,
    /// Exact posterior, ranked by expected distance to the source
    BayesDist,
    /// Most likely set of --sources sources
    Multi,
    /// Greedy elimination
    Ge,
    /// Mean-field approximation
    Mfa,
    /// Rumor centrality
    Rc,
    /// Jordan center
    Jc,
    /// Degree centrality
    Dc,
    /// Uniformly random ranking
    Random,
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Infected nodes, one per line
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long, value_enum)]
    method: InferMethod,
    /// Number of sources for --method multi
    #[arg(long)]
    sources: Option<usize>,
    /// Report log scores for the exact methods
    #[arg(long)]
    log: bool,
    /// Largest snapshot accepted by the exact methods
    #[arg(long, default_value_t = DEFAULT_DP_CAP)]
    cap: usize,
    /// Also write the mean-field system (S as triplets, z) to --out-dir
    #[arg(long)]
    dump_system: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write ranking.csv and manifest.json here instead of stdout
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Experiment config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Use this edge list instead of the config's graph
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "zero")]
    indexing: IndexingArg,
    /// Comma-separated methods
    #[arg(long, value_delimiter = ',', value_parser = parse_method)]
    methods: Option<Vec<Method>>,
    /// Comma-separated infection sizes
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Rank denominator: snapshot size or network size
    #[arg(long, value_enum)]
    normalize: Option<NormalizeArg>,
    /// Largest snapshot on which the exact methods run
    #[arg(long)]
    bayes_cap: Option<usize>,
    /// Worker threads (default: RAYON_NUM_THREADS or all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Leave mean_ms empty so reruns produce identical CSVs
    #[arg(long)]
    no_timing: bool,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    Snapshot,
    Network,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

#[derive(Args)]
struct StatsArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Accepted for uniformity; statistics are deterministic
    #[arg(long)]
    seed: Option<u64>,
    /// Write stats.csv and manifest.json here instead of stdout
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PlotArgs {
    /// results.csv written by `evaluate`
    #[arg(long)]
    results: PathBuf,
    #[arg(long, default_value = "")]
    title: String,
    /// Accepted for uniformity; plotting is deterministic
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(output::EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Simulate(a) => simulate(a),
        Command::Infer(a) => infer(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Stats(a) => stats(a),
        Command::Plot(a) => plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("config serializes")
}

fn resolve_generator(a: &GenerateArgs) -> CliResult<GraphSource> {
    let from_config = match &a.config {
        Some(path) => {
            let bytes = read_file(path)?;
            let source: GraphSource = serde_json::from_slice(&bytes)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            Some(source)
        }
        None => None,
    };
    let config_kind = from_config.as_ref().map(|s| match s {
        GraphSource::RegularTree { .. } => Ok(GeneratorKind::RegularTree),
        GraphSource::RandomTree { .. } => Ok(GeneratorKind::RandomTree),
        GraphSource::Dcsbm(_) => Ok(GeneratorKind::Dcsbm),
        GraphSource::File { .. } => Err(CliError::usage("generator config cannot be of kind `file`")),
    });
    let kind = match (a.kind, config_kind.transpose()?) {
        (Some(k), _) => k,
        (None, Some(k)) => k,
        (None, None) => return Err(CliError::usage("one of --kind or --config is required")),
    };
    let base = from_config.filter(|_| config_kind_matches(a.kind, kind));
    let missing = |flag: &str| CliError::usage(format!("--{flag} is required for this generator"));

    Ok(match kind {
        GeneratorKind::RegularTree => {
            let (d0, h0) = match base {
                Some(GraphSource::RegularTree { degree, depth }) => (Some(degree), Some(depth)),
                _ => (None, None),
            };
            GraphSource::RegularTree {
                degree: a.degree.or(d0).ok_or_else(|| missing("degree"))?,
                depth: a.depth.or(h0).ok_or_else(|| missing("depth"))?,
            }
        }
        GeneratorKind::RandomTree => {
            let (n0, s0) = match base {
                Some(GraphSource::RandomTree { n, seed }) => (Some(n), seed),
                _ => (None, 0),
            };
            GraphSource::RandomTree {
                n: a.nodes.or(n0).ok_or_else(|| missing("nodes"))?,
                seed: a.seed.unwrap_or(s0),
            }
        }
        GeneratorKind::Dcsbm => {
            let mut cfg = match base {
                Some(GraphSource::Dcsbm(cfg)) => cfg,
                _ => {
                    let n = a.nodes.ok_or_else(|| missing("nodes"))?;
                    let mut cfg = DcsbmConfig::planted_three_block(n, 0.0, 0);
                    cfg.target_mean_degree = None;
                    cfg
                }
            };
            if let Some(n) = a.nodes {
                cfg.n = n;
            }
            if let Some(c) = a.communities {
                cfg.communities = c;
            }
            if let Some(p) = a.p_in {
                cfg.p_in = p;
            }
            if let Some(p) = a.p_out {
                cfg.p_out = p;
            }
            if let Some(x) = a.pareto_alpha {
                cfg.pareto_alpha = x;
            }
            if let Some(x) = a.pareto_threshold {
                cfg.pareto_threshold = x;
            }
            if a.mean_degree.is_some() {
                cfg.target_mean_degree = a.mean_degree;
            }
            if a.no_degree_correction {
                cfg.degree_corrected = false;
            }
            if a.largest_component {
                cfg.largest_component = true;
            }
            if let Some(s) = a.seed {
                cfg.seed = s;
            }
            GraphSource::Dcsbm(cfg)
        }
    })
}

/// An explicit --kind that differs from the config file discards the file.
fn config_kind_matches(flag: Option<GeneratorKind>, resolved: GeneratorKind) -> bool {
    flag.is_none_or(|k| k == resolved)
}

fn generate(a: GenerateArgs) -> CliResult<()> {
    let source = resolve_generator(&a)?;
    let mut sidecar = json!({ "generator": to_json(&source) });
    let graph = match &source {
        GraphSource::Dcsbm(cfg) => {
            let sample = sample_dcsbm(cfg)?;
            sidecar["block"] = to_json(&sample.block);
            sidecar["scale"] = json!(sample.scale);
            sidecar["expected_mean_degree"] = json!(sample.expected_mean_degree);
            sample.graph
        }
        other => other.load()?.0,
    };
    sidecar["stats"] = to_json(&graph_stats(&graph));
    let seed = match &source {
        GraphSource::RandomTree { seed, .. } => Some(*seed),
        GraphSource::Dcsbm(cfg) => Some(cfg.seed),
        _ => None,
    };

    ensure_dir(&a.out_dir)?;
    let mut edges = Vec::new();
    write_edge_list(&graph, &mut edges)?;
    write_file(&a.out_dir.join("graph.edges"), edges)?;
    write_file(
        &a.out_dir.join("graph.json"),
        serde_json::to_string_pretty(&sidecar).unwrap() + "\n",
    )?;
    let mut manifest = RunManifest::new("generate", to_json(&source), seed);
    if let Some(path) = &a.config {
        manifest = manifest.input(path)?;
    }
    manifest.write(&a.out_dir)?;
    eprintln!(
        "wrote {} nodes, {} edges to {}",
        graph.node_count(),
        graph.edge_count(),
        a.out_dir.display()
    );
    Ok(())
}

fn resolve_nodes(tokens: &[String], labels: &NodeLabels, graph: &Graph) -> CliResult<NodeSet> {
    let mut nodes = Vec::with_capacity(tokens.len());
    for t in tokens {
        let v = labels.resolve(t.trim())?;
        graph.check_node(v)?;
        nodes.push(v);
    }
    Ok(NodeSet::new(nodes))
}

fn trace_csv(trace: &InfectionTrace, labels: &NodeLabels) -> String {
    let mut out = String::from("step,node,time\n");
    for (step, &v) in trace.order.iter().enumerate() {
        let time = trace.times.as_ref().map(|t| t[step].to_string()).unwrap_or_default();
        let _ = writeln!(out, "{step},{},{time}", labels.display(v));
    }
    out
}

fn simulate(a: SimulateArgs) -> CliResult<()> {
    let (graph, labels) = a.graph.load()?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let sources = if a.source.is_empty() {
        let pool = graph.largest_component_nodes();
        if pool.is_empty() {
            return Err(CliError::input("graph has no nodes"));
        }
        NodeSet::singleton(pool.members()[rng.random_range(0..pool.len())])
    } else {
        resolve_nodes(&a.source, &labels, &graph)?
    };
    let trace = match (a.size, a.time) {
        (Some(size), _) => simulate_until_size(&graph, &sources, size, &mut rng)?,
        (None, Some(horizon)) => simulate_until_time(&graph, &sources, a.beta, horizon, &mut rng)?,
        (None, None) => unreachable!("clap requires --size or --time"),
    };
    let csv = trace_csv(&trace, &labels);
    match &a.out_dir {
        None => print!("{csv}"),
        Some(dir) => {
            ensure_dir(dir)?;
            write_file(&dir.join("trace.csv"), &csv)?;
            let mut snap = String::new();
            for v in trace.snapshot().iter() {
                let _ = writeln!(snap, "{}", labels.display(v));
            }
            write_file(&dir.join("snapshot.txt"), snap)?;
            let config = json!({
                "input": a.graph.describe(),
                "sources": sources.iter().map(|v| labels.display(v)).collect::<Vec<_>>(),
                "size": a.size,
                "time": a.time,
                "beta": a.beta,
            });
            RunManifest::new("simulate", config, Some(a.seed))
                .input(&a.graph.graph)?
                .write(dir)?;
        }
    }
    Ok(())
}

fn ranking_csv(ranking: &Ranking, labels: &NodeLabels) -> String {
    let mut out = String::from("node,score,rank\n");
    for e in ranking.entries() {
        let _ = writeln!(out, "{},{},{}", labels.display(e.node), e.score, e.rank);
    }
    out
}

fn infer(a: InferArgs) -> CliResult<()> {
    if a.dump_system && (a.method != InferMethod::Mfa || a.out_dir.is_none()) {
        return Err(CliError::usage("--dump-system needs --method mfa and --out-dir"));
    }
    if a.sources.is_some() != (a.method == InferMethod::Multi) {
        return Err(CliError::usage("--sources is required with, and only valid for, --method multi"));
    }
    let (graph, labels) = a.graph.load()?;
    let snap_bytes = read_file(&a.snapshot)?;
    let snapshot = read_node_set(BufReader::new(Cursor::new(snap_bytes)), &labels, &graph)
        .map_err(|e| CliError::input(format!("{}: {e}", a.snapshot.display())))?;
    let exact_cap = |e: sourcetrace::EstimationError| match e {
        sourcetrace::EstimationError::TooLarge { size, cap } => CliError::infeasible(format!(
            "snapshot of size {size} exceeds the configured exact-inference cap of {cap} (--cap)"
        )),
        other => other.into(),
    };
    let log = |p: f64| if a.log { p.ln() } else { p };

    let mut extra_files: Vec<(&str, String)> = Vec::new();
    let csv = match a.method {
        InferMethod::Multi => {
            let s = a.sources.unwrap();
            let (set, likelihood) =
                exact::multi_source_map_capped(&graph, &snapshot, s, a.cap).map_err(exact_cap)?;
            let mut out = String::from("node,likelihood\n");
            for v in set.iter() {
                let _ = writeln!(out, "{},{}", labels.display(v), log(likelihood));
            }
            out
        }
        method => {
            let ranking = match method {
                InferMethod::Bayes => {
                    let post = exact::posterior_capped(&graph, &snapshot, a.cap).map_err(exact_cap)?;
                    Ranking::from_scores(
                        post.iter().map(|(v, p)| (v, log(p))),
                        sourcetrace::Order::Descending,
                    )
                }
                InferMethod::BayesDist => {
                    let post = exact::posterior_capped(&graph, &snapshot, a.cap).map_err(exact_cap)?;
                    exact::distance_rank(&graph, &post)
                }
                InferMethod::Ge => {
                    let (log_, _) = greedy::ge_eliminate_traced(&graph, &snapshot)?;
                    let mut steps = String::from("step,node,score\n");
                    for (i, (v, score)) in log_.removed.iter().enumerate() {
                        let _ = writeln!(steps, "{},{},{score}", i + 1, labels.display(*v));
                    }
                    extra_files.push(("elimination.csv", steps));
                    greedy::ge_rank(&graph, &snapshot)?
                }
                InferMethod::Mfa => {
                    let system = mean_field::build_system(&graph, &snapshot)?;
                    let solution = system.solve();
                    if solution.degenerate {
                        eprintln!(
                            "warning: mean-field system is singular or ill-conditioned; using the {:?} solution (relative residual {:.3e})",
                            solution.method, solution.residual
                        );
                    }
                    if a.dump_system {
                        extra_files.extend(dump_system(&system, &labels));
                    }
                    Ranking::from_scores(
                        snapshot.iter().zip(solution.b_hat.iter().copied()),
                        sourcetrace::Order::Descending,
                    )
                }
                InferMethod::Rc => baselines::rumor_centrality_rank(&graph, &snapshot)?,
                InferMethod::Jc => baselines::jordan_center_rank(&graph, &snapshot)?,
                InferMethod::Dc => baselines::degree_centrality_rank(&graph, &snapshot)?,
                InferMethod::Random => {
                    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
                    baselines::random_rank(&snapshot, &mut rng)?
                }
                InferMethod::Multi => unreachable!(),
            };
            ranking_csv(&ranking, &labels)
        }
    };

    match &a.out_dir {
        None => print!("{csv}"),
        Some(dir) => {
            ensure_dir(dir)?;
            let name = if a.method == InferMethod::Multi { "sources.csv" } else { "ranking.csv" };
            write_file(&dir.join(name), &csv)?;
            for (file, contents) in &extra_files {
                write_file(&dir.join(file), contents)?;
            }
            if labels.is_table() {
                let mut table = Vec::new();
                labels.write_table(&mut table)?;
                write_file(&dir.join("labels.tsv"), table)?;
            }
            let config = json!({
                "input": a.graph.describe(),
                "snapshot": a.snapshot,
                "method": a.method,
                "sources": a.sources,
                "log": a.log,
                "cap": a.cap,
            });
            RunManifest::new("infer", config, Some(a.seed))
                .input(&a.graph.graph)?
                .input(&a.snapshot)?
                .write(dir)?;
        }
    }
    Ok(())
}

fn dump_system(system: &mean_field::MeanFieldSystem, labels: &NodeLabels) -> Vec<(&'static str, String)> {
    let members = system.snapshot.members();
    let name = |t: usize| labels.display(members[t]);
    let mut s = String::from("row,col,value\n");
    for (r, c, v) in system.matrix.triplets() {
        let _ = writeln!(s, "{},{},{v}", name(r), name(c));
    }
    let mut z = String::from("node,z\n");
    for (t, v) in system.z.iter().enumerate() {
        let _ = writeln!(z, "{},{v}", name(t));
    }
    vec![("system_s.csv", s), ("system_z.csv", z)]
}

fn evaluate(a: EvaluateArgs) -> CliResult<()> {
    let bytes = read_file(&a.config)?;
    let mut cfg: ExperimentConfig = serde_json::from_slice(&bytes)
        .map_err(|e| CliError::input(format!("{}: {e}", a.config.display())))?;
    if let Some(path) = &a.graph {
        cfg.graph = GraphSource::File {
            path: path.clone(),
            indexing: a.indexing.into(),
        };
    }
    if let Some(m) = a.methods {
        cfg.methods = m;
    }
    if let Some(s) = a.sizes {
        cfg.sizes = s;
    }
    if let Some(r) = a.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(n) = a.normalize {
        cfg.normalization = match n {
            NormalizeArg::Snapshot => Normalization::Snapshot,
            NormalizeArg::Network => Normalization::Network,
        };
    }
    if let Some(c) = a.bayes_cap {
        cfg.bayes_cap = c;
    }
    cfg.validate()?;

    let run = || evaluation::run_experiment(&cfg);
    let result = match a.threads {
        Some(0) => return Err(CliError::usage("--threads must be positive")),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(CliError::input)?
            .install(run),
        None => run(),
    }?;

    ensure_dir(&a.out_dir)?;
    let mut csv = Vec::new();
    result.write_csv(&mut csv, !a.no_timing)?;
    write_file(&a.out_dir.join("results.csv"), csv)?;
    let metadata = json!({
        "config": to_json(&result.config),
        "seed": result.config.seed,
        "stats": to_json(&result.stats),
        "skipped": result.rows.iter().filter(|r| r.skipped())
            .map(|r| json!({ "method": r.method, "k": r.k, "reason": format!("exact methods capped at |O| ≤ {}", cfg.bayes_cap) }))
            .collect::<Vec<_>>(),
    });
    write_file(
        &a.out_dir.join("metadata.json"),
        serde_json::to_string_pretty(&metadata).unwrap() + "\n",
    )?;
    let mut manifest = RunManifest::new("evaluate", to_json(&cfg), Some(cfg.seed)).input(&a.config)?;
    if let GraphSource::File { path, .. } = &cfg.graph {
        manifest = manifest.input(path)?;
    }
    manifest.write(&a.out_dir)?;
    Ok(())
}

fn stats(a: StatsArgs) -> CliResult<()> {
    let (graph, _) = a.graph.load()?;
    let s = graph_stats(&graph);
    let csv = format!(
        "nodes,edges,mean_degree,max_degree,clustering\n{},{},{},{},{}\n",
        s.nodes, s.edges, s.mean_degree, s.max_degree, s.clustering
    );
    match &a.out_dir {
        None => print!("{csv}"),
        Some(dir) => {
            ensure_dir(dir)?;
            write_file(&dir.join("stats.csv"), csv)?;
            RunManifest::new("stats", a.graph.describe(), a.seed)
                .input(&a.graph.graph)?
                .write(dir)?;
        }
    }
    Ok(())
}

fn plot(a: PlotArgs) -> CliResult<()> {
    let text = String::from_utf8(read_file(&a.results)?)
        .map_err(|_| CliError::input(format!("{}: not UTF-8", a.results.display())))?;
    let series = series_from_csv(&text).map_err(|e| CliError::input(format!("{}: {e}", a.results.display())))?;
    let opts = ChartOptions {
        title: a.title.clone(),
        ..ChartOptions::default()
    };
    ensure_dir(&a.out_dir)?;
    write_file(&a.out_dir.join("plot.svg"), render_svg(&series, &opts))?;
    RunManifest::new("plot", json!({ "results": a.results, "title": a.title }), a.seed)
        .input(&a.results)?
        .write(&a.out_dir)?;
    Ok(())
}

