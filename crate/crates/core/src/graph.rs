//! Undirected simple graphs in compressed sparse row form.
//!
//! Every estimator in this crate reads the network through [`Graph`]: sorted
//! neighbor lists, degrees, cut volumes `vol(S, T) = Σ_{i∈S, j∈T} A_ij`, BFS
//! distances and connectivity of induced subgraphs. Graphs are immutable once
//! built and can be shared freely across threads.

use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Distance reported by [`Graph::bfs_distances`] for nodes in another component.
pub const UNREACHABLE: usize = usize::MAX;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: self-loop on node {node} is not allowed")]
    SelfLoopAt { line: usize, node: String },
    #[error("self-loop on node {0} is not allowed")]
    SelfLoop(usize),
    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("unknown node label `{0}`")]
    UnknownLabel(String),
    #[error("node set must be nonempty")]
    EmptySet,
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for GraphError {
    fn from(e: std::io::Error) -> Self {
        GraphError::Io(e.to_string())
    }
}

/// A sorted set of distinct node indices.
///
/// When used as an enclosing snapshot `O`, a subset `I ⊆ O` can be encoded as
/// a bitmask over the positions of `O` (bit `t` set iff the `t`-th smallest
/// member of `O` belongs to `I`). Masks are only available for `|O| ≤ 63`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct NodeSet {
    members: Vec<usize>,
}

/// Largest snapshot that still fits the `u64` subset encoding.
pub const MAX_MASK_BITS: usize = 63;

impl NodeSet {
    pub fn new<I: IntoIterator<Item = usize>>(nodes: I) -> Self {
        let mut members: Vec<usize> = nodes.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        NodeSet { members }
    }

    pub fn empty() -> Self {
        NodeSet::default()
    }

    pub fn singleton(node: usize) -> Self {
        NodeSet {
            members: vec![node],
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, node: usize) -> bool {
        self.members.binary_search(&node).is_ok()
    }

    /// Position of `node` inside this set, i.e. its bit in subset masks.
    pub fn index_of(&self, node: usize) -> Option<usize> {
        self.members.binary_search(&node).ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.members.iter().copied()
    }

    pub fn is_subset_of(&self, other: &NodeSet) -> bool {
        self.members.iter().all(|&v| other.contains(v))
    }

    /// Bitmask of `subset` relative to `self`. `None` if `subset ⊄ self` or
    /// `self` is too large for a machine word.
    pub fn mask_of(&self, subset: &NodeSet) -> Option<u64> {
        if self.len() > MAX_MASK_BITS {
            return None;
        }
        let mut mask = 0u64;
        for v in subset.iter() {
            mask |= 1u64 << self.index_of(v)?;
        }
        Some(mask)
    }

    /// Inverse of [`NodeSet::mask_of`]. Bits beyond `len()` are ignored.
    pub fn subset_from_mask(&self, mask: u64) -> NodeSet {
        let members = self
            .members
            .iter()
            .enumerate()
            .filter(|(t, _)| *t < 64 && mask >> t & 1 == 1)
            .map(|(_, &v)| v)
            .collect();
        NodeSet { members }
    }

    /// Mask with every member of `self` set.
    pub fn full_mask(&self) -> Option<u64> {
        (self.len() <= MAX_MASK_BITS).then(|| {
            if self.is_empty() {
                0
            } else {
                u64::MAX >> (64 - self.len())
            }
        })
    }
}

impl FromIterator<usize> for NodeSet {
    fn from_iter<T: IntoIterator<Item = usize>>(iter: T) -> Self {
        NodeSet::new(iter)
    }
}

/// Undirected simple graph with dense `0..n` node indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

impl Graph {
    /// Builds a graph on at least `n` nodes. Duplicate and reversed edges are
    /// collapsed; the node count grows to cover the largest endpoint.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Graph, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut pairs = Vec::new();
        let mut n = n;
        for (a, b) in edges {
            if a == b {
                return Err(GraphError::SelfLoop(a));
            }
            n = n.max(a + 1).max(b + 1);
            pairs.push((a, b));
            pairs.push((b, a));
        }
        pairs.sort_unstable();
        pairs.dedup();

        let mut offsets = vec![0usize; n + 1];
        for &(a, _) in &pairs {
            offsets[a + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = pairs.into_iter().map(|(_, b)| b).collect();
        Ok(Graph { offsets, targets })
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    #[inline]
    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.targets[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        a < self.node_count() && self.neighbors(a).binary_search(&b).is_ok()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count())
            .flat_map(move |a| self.neighbors(a).iter().map(move |&b| (a, b)))
            .filter(|(a, b)| a < b)
    }

    pub fn check_node(&self, node: usize) -> Result<(), GraphError> {
        if node < self.node_count() {
            Ok(())
        } else {
            Err(GraphError::NodeOutOfRange {
                node,
                n: self.node_count(),
            })
        }
    }

    pub fn check_set(&self, set: &NodeSet) -> Result<(), GraphError> {
        match set.members().last() {
            Some(&last) => self.check_node(last),
            None => Ok(()),
        }
    }

    /// `vol(S, T) = Σ_{i∈S, j∈T} A_ij`. `S` and `T` may overlap.
    pub fn cut_volume(&self, s: &NodeSet, t: &NodeSet) -> Result<u64, GraphError> {
        self.check_set(s)?;
        self.check_set(t)?;
        let (outer, inner) = if s.len() <= t.len() { (s, t) } else { (t, s) };
        Ok(outer
            .iter()
            .map(|i| self.neighbors(i).iter().filter(|&&j| inner.contains(j)).count() as u64)
            .sum())
    }

    /// `vol(S, Sᶜ)`: number of edges leaving `S`.
    pub fn boundary_volume(&self, s: &NodeSet) -> Result<u64, GraphError> {
        self.check_set(s)?;
        Ok(s.iter()
            .map(|i| self.neighbors(i).iter().filter(|&&j| !s.contains(j)).count() as u64)
            .sum())
    }

    /// Number of common neighbors of `i` and `j` that lie in `s`.
    pub fn two_path_volume(&self, i: usize, j: usize, s: &NodeSet) -> Result<u64, GraphError> {
        self.check_node(i)?;
        self.check_node(j)?;
        let (a, b) = (self.neighbors(i), self.neighbors(j));
        let (mut x, mut y, mut count) = (0, 0, 0u64);
        while x < a.len() && y < b.len() {
            match a[x].cmp(&b[y]) {
                std::cmp::Ordering::Less => x += 1,
                std::cmp::Ordering::Greater => y += 1,
                std::cmp::Ordering::Equal => {
                    if s.contains(a[x]) {
                        count += 1;
                    }
                    x += 1;
                    y += 1;
                }
            }
        }
        Ok(count)
    }

    /// Hop distances from `source`; [`UNREACHABLE`] outside its component.
    pub fn bfs_distances(&self, source: usize) -> Result<Vec<usize>, GraphError> {
        self.check_node(source)?;
        let mut dist = vec![UNREACHABLE; self.node_count()];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &w in self.neighbors(u) {
                if dist[w] == UNREACHABLE {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        Ok(dist)
    }

    /// Connectivity of the induced subgraph `G_S` and its articulation nodes.
    ///
    /// When `G_S` is disconnected the articulation nodes are the cut vertices
    /// of its individual components.
    pub fn induced_connectivity(&self, s: &NodeSet) -> Result<Connectivity, GraphError> {
        if s.is_empty() {
            return Err(GraphError::EmptySet);
        }
        self.check_set(s)?;
        let local = InducedSubgraph::new(self, s);
        let alive = vec![true; local.len()];
        let cuts = local.cut_vertices(&alive);
        Ok(Connectivity {
            is_connected: cuts.components == 1,
            articulation: NodeSet::new(
                (0..local.len())
                    .filter(|&v| cuts.is_cut[v])
                    .map(|v| local.node(v)),
            ),
        })
    }

    /// Connected component id of every node, numbered in order of smallest member.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let n = self.node_count();
        let mut label = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        for start in 0..n {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = count;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &w in self.neighbors(u) {
                    if label[w] == usize::MAX {
                        label[w] = count;
                        stack.push(w);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }

    /// Nodes of the largest connected component (smallest id wins ties).
    pub fn largest_component_nodes(&self) -> NodeSet {
        let (count, label) = self.components();
        if count == 0 {
            return NodeSet::empty();
        }
        let mut sizes = vec![0usize; count];
        for &c in &label {
            sizes[c] += 1;
        }
        let best = (0..count).max_by_key(|&c| (sizes[c], std::cmp::Reverse(c))).unwrap();
        NodeSet::new((0..self.node_count()).filter(|&v| label[v] == best))
    }

    /// Induced subgraph on `nodes`, relabeled densely. Returns the graph and the
    /// original id of every new node.
    pub fn subgraph(&self, nodes: &NodeSet) -> (Graph, Vec<usize>) {
        let old: Vec<usize> = nodes.members().to_vec();
        let edges = old.iter().enumerate().flat_map(|(a, &u)| {
            self.neighbors(u)
                .iter()
                .filter_map(move |&w| nodes.index_of(w).filter(|&b| a < b).map(|b| (a, b)))
        });
        let graph = Graph::from_edges(old.len(), edges.collect::<Vec<_>>())
            .expect("subgraph of a simple graph is simple");
        (graph, old)
    }

    pub fn is_connected(&self) -> bool {
        self.node_count() == 0 || self.components().0 == 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Connectivity {
    pub is_connected: bool,
    pub articulation: NodeSet,
}

/// Adjacency of `G_S` over local indices `0..|S|` (positions in the sorted set).
#[derive(Debug, Clone)]
pub struct InducedSubgraph<'a> {
    nodes: &'a NodeSet,
    offsets: Vec<usize>,
    targets: Vec<usize>,
}

/// Cut-vertex pass result; also serves as reusable scratch space.
#[derive(Default)]
pub(crate) struct CutVertices {
    pub components: usize,
    pub is_cut: Vec<bool>,
    disc: Vec<usize>,
    low: Vec<usize>,
    // (node, parent, next neighbor cursor)
    stack: Vec<(usize, usize, usize)>,
}

impl<'a> InducedSubgraph<'a> {
    pub fn new(graph: &Graph, nodes: &'a NodeSet) -> Self {
        let mut offsets = Vec::with_capacity(nodes.len() + 1);
        let mut targets = Vec::new();
        offsets.push(0);
        for v in nodes.iter() {
            targets.extend(graph.neighbors(v).iter().filter_map(|&w| nodes.index_of(w)));
            offsets.push(targets.len());
        }
        InducedSubgraph {
            nodes,
            offsets,
            targets,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Global id of local node `v`.
    #[inline]
    pub fn node(&self, v: usize) -> usize {
        self.nodes.members()[v]
    }

    /// Local neighbors of local node `v`, ascending.
    #[inline]
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    /// Hop distances inside the induced subgraph from local node `source`.
    pub fn bfs(&self, source: usize, dist: &mut [usize], queue: &mut VecDeque<usize>) {
        dist.fill(UNREACHABLE);
        queue.clear();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &w in self.neighbors(u) {
                if dist[w] == UNREACHABLE {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
    }

    /// Cut vertices of the subgraph restricted to `alive` local nodes, by an
    /// iterative Hopcroft–Tarjan low-link pass.
    pub(crate) fn cut_vertices(&self, alive: &[bool]) -> CutVertices {
        let mut out = CutVertices::default();
        self.cut_vertices_into(alive, &mut out);
        out
    }

    pub(crate) fn cut_vertices_into(&self, alive: &[bool], out: &mut CutVertices) {
        let k = self.len();
        let CutVertices {
            components,
            is_cut,
            disc,
            low,
            stack,
        } = out;
        disc.clear();
        disc.resize(k, usize::MAX);
        low.clear();
        low.resize(k, 0);
        is_cut.clear();
        is_cut.resize(k, false);
        stack.clear();
        *components = 0;
        let mut clock = 0;

        for root in 0..k {
            if !alive[root] || disc[root] != usize::MAX {
                continue;
            }
            *components += 1;
            disc[root] = clock;
            low[root] = clock;
            clock += 1;
            let mut root_children = 0;
            stack.push((root, usize::MAX, 0));
            while let Some(&mut (u, parent, ref mut cursor)) = stack.last_mut() {
                let nbrs = self.neighbors(u);
                if *cursor < nbrs.len() {
                    let w = nbrs[*cursor];
                    *cursor += 1;
                    if !alive[w] || w == parent {
                        continue;
                    }
                    if disc[w] == usize::MAX {
                        disc[w] = clock;
                        low[w] = clock;
                        clock += 1;
                        if u == root {
                            root_children += 1;
                        }
                        stack.push((w, u, 0));
                    } else {
                        low[u] = low[u].min(disc[w]);
                    }
                } else {
                    stack.pop();
                    if parent != usize::MAX {
                        low[parent] = low[parent].min(low[u]);
                        if parent != root && low[u] >= disc[parent] {
                            is_cut[parent] = true;
                        }
                    }
                }
            }
            if root_children >= 2 {
                is_cut[root] = true;
            }
        }
    }
}

/// How node tokens in an edge-list or snapshot file map to node indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Indexing {
    /// Integer ids used as-is.
    #[default]
    Zero,
    /// Integer ids starting at 1.
    One,
    /// Arbitrary tokens, assigned dense ids in order of first appearance.
    Label,
}

/// Translation between file tokens and dense node indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeLabels {
    Offset(usize),
    Table {
        names: Vec<String>,
        index: HashMap<String, usize>,
    },
}

impl NodeLabels {
    pub fn for_indexing(indexing: Indexing) -> Self {
        match indexing {
            Indexing::Zero => NodeLabels::Offset(0),
            Indexing::One => NodeLabels::Offset(1),
            Indexing::Label => NodeLabels::Table {
                names: Vec::new(),
                index: HashMap::new(),
            },
        }
    }

    /// Rebuilds a label table from a two-column `id label` sidecar.
    pub fn read_table<R: BufRead>(reader: R) -> Result<Self, GraphError> {
        let mut pairs = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(id), Some(name), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(GraphError::Parse {
                    line: lineno + 1,
                    message: "expected `id label`".into(),
                });
            };
            let id: usize = id.parse().map_err(|_| GraphError::Parse {
                line: lineno + 1,
                message: format!("invalid node id `{id}`"),
            })?;
            pairs.push((id, name.to_string()));
        }
        pairs.sort();
        let mut names = Vec::with_capacity(pairs.len());
        let mut index = HashMap::new();
        for (expected, (id, name)) in pairs.into_iter().enumerate() {
            if id != expected {
                return Err(GraphError::Parse {
                    line: 0,
                    message: format!("label table is not dense at id {expected}"),
                });
            }
            index.insert(name.clone(), id);
            names.push(name);
        }
        Ok(NodeLabels::Table { names, index })
    }

    fn intern(&mut self, token: &str, line: usize) -> Result<usize, GraphError> {
        match self {
            NodeLabels::Offset(base) => parse_index(token, *base, line),
            NodeLabels::Table { names, index } => {
                if let Some(&id) = index.get(token) {
                    return Ok(id);
                }
                let id = names.len();
                names.push(token.to_string());
                index.insert(token.to_string(), id);
                Ok(id)
            }
        }
    }

    /// Resolves a token without extending the table.
    pub fn resolve(&self, token: &str) -> Result<usize, GraphError> {
        match self {
            NodeLabels::Offset(base) => parse_index(token, *base, 0),
            NodeLabels::Table { index, .. } => index
                .get(token)
                .copied()
                .ok_or_else(|| GraphError::UnknownLabel(token.to_string())),
        }
    }

    /// External name of a node.
    pub fn display(&self, node: usize) -> String {
        match self {
            NodeLabels::Offset(base) => (node + base).to_string(),
            NodeLabels::Table { names, .. } => names
                .get(node)
                .cloned()
                .unwrap_or_else(|| format!("#{node}")),
        }
    }

    pub fn is_table(&self) -> bool {
        matches!(self, NodeLabels::Table { .. })
    }

    pub fn write_table<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        if let NodeLabels::Table { names, .. } = self {
            for (id, name) in names.iter().enumerate() {
                writeln!(out, "{id}\t{name}")?;
            }
        }
        Ok(())
    }
}

fn parse_index(token: &str, base: usize, line: usize) -> Result<usize, GraphError> {
    let value: usize = token.parse().map_err(|_| GraphError::Parse {
        line,
        message: format!("invalid node id `{token}`"),
    })?;
    value.checked_sub(base).ok_or_else(|| GraphError::Parse {
        line,
        message: format!("node id {value} below index base {base}"),
    })
}

/// Parses a whitespace-separated edge list. `#` comment lines and blank lines
/// are skipped; line numbers in errors are 1-based.
pub fn read_edge_list<R: BufRead>(
    reader: R,
    indexing: Indexing,
) -> Result<(Graph, NodeLabels), GraphError> {
    let mut labels = NodeLabels::for_indexing(indexing);
    let mut edges = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let lineno = lineno + 1;
        let mut parts = trimmed.split_whitespace();
        let (Some(a), Some(b), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(GraphError::Parse {
                line: lineno,
                message: format!("expected two node ids, got `{trimmed}`"),
            });
        };
        if a == b {
            return Err(GraphError::SelfLoopAt {
                line: lineno,
                node: a.to_string(),
            });
        }
        let a = labels.intern(a, lineno)?;
        let b = labels.intern(b, lineno)?;
        if a == b {
            return Err(GraphError::SelfLoopAt {
                line: lineno,
                node: labels.display(a),
            });
        }
        edges.push((a, b));
    }
    let n = match &labels {
        NodeLabels::Table { names, .. } => names.len(),
        NodeLabels::Offset(_) => 0,
    };
    Ok((Graph::from_edges(n, edges)?, labels))
}

/// Reads a snapshot file: one node token per line, `#` comments allowed.
pub fn read_node_set<R: BufRead>(
    reader: R,
    labels: &NodeLabels,
    graph: &Graph,
) -> Result<NodeSet, GraphError> {
    let mut nodes = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let token = line.trim();
        if token.is_empty() || token.starts_with('#') {
            continue;
        }
        let node = labels.resolve(token).map_err(|e| match e {
            GraphError::Parse { message, .. } => GraphError::Parse {
                line: lineno + 1,
                message,
            },
            other => other,
        })?;
        graph.check_node(node)?;
        nodes.push(node);
    }
    Ok(NodeSet::new(nodes))
}

/// Writes the graph as a zero-based edge list, one `a b` pair per line with `a < b`.
pub fn write_edge_list<W: Write>(graph: &Graph, mut out: W) -> std::io::Result<()> {
    for (a, b) in graph.edges() {
        writeln!(out, "{a} {b}")?;
    }
    Ok(())
}
