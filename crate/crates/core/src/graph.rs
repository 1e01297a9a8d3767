//! Simple undirected graphs on dense vertex ids `0..n`, plus the handful of
//! structural utilities the search and the experiments need: excess, degree
//! pruning, external neighbourhoods, induced subgraphs and the two-graph
//! induced-path predicate.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Vertex id. Vertices of a graph with `n` vertices are `0..n`.
pub type Vertex = u32;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("edge ({u}, {v}) has an endpoint outside 0..{n}")]
    OutOfRange { u: Vertex, v: Vertex, n: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(Vertex),
    #[error("graphs have different vertex counts ({0} vs {1})")]
    VertexCountMismatch(usize, usize),
    #[error("edge ({0}, {1}) of the subgraph is missing from the host graph")]
    NotASubgraph(Vertex, Vertex),
    #[error("vertex count {0} exceeds the supported maximum")]
    TooLarge(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("malformed graph JSON: {0}")]
    Json(String),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Membership bitset over `0..n` with a cached cardinality.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct VertexSet {
    words: Vec<u64>,
    universe: usize,
    len: usize,
}

impl VertexSet {
    pub fn new(universe: usize) -> Self {
        VertexSet {
            words: vec![0; universe.div_ceil(64)],
            universe,
            len: 0,
        }
    }

    pub fn full(universe: usize) -> Self {
        let mut s = Self::new(universe);
        for v in 0..universe {
            s.insert(v as Vertex);
        }
        s
    }

    pub fn from_vertices(universe: usize, vertices: impl IntoIterator<Item = Vertex>) -> Self {
        let mut s = Self::new(universe);
        for v in vertices {
            s.insert(v);
        }
        s
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn contains(&self, v: Vertex) -> bool {
        let v = v as usize;
        v < self.universe && self.words[v / 64] >> (v % 64) & 1 == 1
    }

    /// Returns true if `v` was not already present.
    pub fn insert(&mut self, v: Vertex) -> bool {
        let i = v as usize;
        assert!(i < self.universe, "vertex {v} outside universe {}", self.universe);
        let mask = 1u64 << (i % 64);
        let fresh = self.words[i / 64] & mask == 0;
        if fresh {
            self.words[i / 64] |= mask;
            self.len += 1;
        }
        fresh
    }

    pub fn remove(&mut self, v: Vertex) -> bool {
        let i = v as usize;
        if i >= self.universe {
            return false;
        }
        let mask = 1u64 << (i % 64);
        let present = self.words[i / 64] & mask != 0;
        if present {
            self.words[i / 64] &= !mask;
            self.len -= 1;
        }
        present
    }

    /// Members in increasing order.
    pub fn iter(&self) -> impl Iterator<Item = Vertex> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros() as usize;
                w &= w - 1;
                Some((wi * 64 + b) as Vertex)
            })
        })
    }

    pub fn to_vec(&self) -> Vec<Vertex> {
        self.iter().collect()
    }
}

impl fmt::Debug for VertexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

/// Simple undirected graph with sorted adjacency lists.
///
/// Immutable once built; share it behind `Arc` across threads.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<Vertex>>,
    m: usize,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, m={}, edges=", self.n(), self.m)?;
        f.debug_list().entries(self.edges()).finish()?;
        write!(f, ")")
    }
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            m: 0,
        }
    }

    /// Builds a simple graph, silently merging duplicate pairs.
    pub fn from_edge_list(n: usize, edges: &[(Vertex, Vertex)]) -> Result<Self, GraphError> {
        if n > Vertex::MAX as usize {
            return Err(GraphError::TooLarge(n));
        }
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(GraphError::OutOfRange { u, v, n });
            }
            if u == v {
                return Err(GraphError::SelfLoop(u));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        Ok(Self::from_raw_adjacency(adj))
    }

    /// Sorts and deduplicates each list. Callers guarantee symmetry and no loops.
    pub(crate) fn from_raw_adjacency(mut adj: Vec<Vec<Vertex>>) -> Self {
        let mut twice_m = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            twice_m += list.len();
        }
        Graph { adj, m: twice_m / 2 }
    }

    pub fn complete(n: usize) -> Self {
        let adj = (0..n)
            .map(|v| (0..n as Vertex).filter(|&w| w as usize != v).collect())
            .collect();
        Self::from_raw_adjacency(adj)
    }

    /// Path `0 - 1 - ... - (n-1)`.
    pub fn path(n: usize) -> Self {
        let edges: Vec<_> = (1..n as Vertex).map(|v| (v - 1, v)).collect();
        Self::from_edge_list(n, &edges).expect("path edges are valid")
    }

    /// Cycle `0 - 1 - ... - (n-1) - 0`, `n >= 3`.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a cycle needs at least 3 vertices");
        let mut edges: Vec<_> = (1..n as Vertex).map(|v| (v - 1, v)).collect();
        edges.push((n as Vertex - 1, 0));
        Self::from_edge_list(n, &edges).expect("cycle edges are valid")
    }

    /// Star with centre 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        let edges: Vec<_> = (1..=leaves as Vertex).map(|v| (0, v)).collect();
        Self::from_edge_list(leaves + 1, &edges).expect("star edges are valid")
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.adj.len()
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn neighbours(&self, v: Vertex) -> &[Vertex] {
        &self.adj[v as usize]
    }

    #[inline]
    pub fn degree(&self, v: Vertex) -> usize {
        self.adj[v as usize].len()
    }

    #[inline]
    pub fn has_edge(&self, u: Vertex, v: Vertex) -> bool {
        let (a, b) = if self.degree(u) <= self.degree(v) { (u, v) } else { (v, u) };
        self.adj[a as usize].binary_search(&b).is_ok()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (Vertex, Vertex)> + '_ {
        self.adj.iter().enumerate().flat_map(|(u, list)| {
            let u = u as Vertex;
            list.iter().filter(move |&&v| v > u).map(move |&v| (u, v))
        })
    }

    pub fn is_subgraph_of(&self, host: &Graph) -> Result<(), GraphError> {
        if self.n() != host.n() {
            return Err(GraphError::VertexCountMismatch(self.n(), host.n()));
        }
        match self.edges().find(|&(u, v)| !host.has_edge(u, v)) {
            Some((u, v)) => Err(GraphError::NotASubgraph(u, v)),
            None => Ok(()),
        }
    }

    /// Number of connected components, isolated vertices included.
    pub fn component_count(&self) -> usize {
        let n = self.n();
        let mut seen = vec![false; n];
        let mut stack = Vec::new();
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            stack.push(s as Vertex);
            while let Some(v) = stack.pop() {
                for &w in self.neighbours(v) {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        stack.push(w);
                    }
                }
            }
        }
        count
    }

    /// Disjoint union; `other`'s vertices are shifted by `self.n()`.
    pub fn disjoint_union(&self, other: &Graph) -> Graph {
        let shift = self.n() as Vertex;
        let mut adj = self.adj.clone();
        adj.extend(
            other
                .adj
                .iter()
                .map(|list| list.iter().map(|&w| w + shift).collect()),
        );
        Graph {
            adj,
            m: self.m + other.m,
        }
    }

    /// Same graph with vertex `v` renamed to `perm[v]`.
    pub fn relabel(&self, perm: &[Vertex]) -> Graph {
        assert_eq!(perm.len(), self.n());
        let mut adj = vec![Vec::new(); self.n()];
        for (v, list) in self.adj.iter().enumerate() {
            adj[perm[v] as usize] = list.iter().map(|&w| perm[w as usize]).collect();
        }
        Self::from_raw_adjacency(adj)
    }

    /// Number of edges with both endpoints in `s`.
    pub fn edges_within(&self, s: &VertexSet) -> usize {
        s.iter()
            .map(|v| self.neighbours(v).iter().filter(|&&w| w > v && s.contains(w)).count())
            .sum()
    }
}

/// Sum over components of `|E(C)| - |V(C)| + 1`.
pub fn excess(g: &Graph) -> usize {
    // m - n + c is never negative: each component spans a tree.
    g.m() + g.component_count() - g.n()
}

/// Result of iterated low-degree deletion.
#[derive(Debug, Clone)]
pub struct Pruned {
    /// Surviving subgraph, relabelled `0..kept.len()` in increasing original order.
    pub graph: Graph,
    /// `kept[i]` is the original label of vertex `i` of `graph`.
    pub kept: Vec<Vertex>,
    pub removed: VertexSet,
}

/// Repeatedly deletes vertices of degree at most `d` until none is left.
///
/// The survivor set is the largest subgraph with minimum degree above `d`,
/// which does not depend on the deletion order.
pub fn prune_min_degree(g: &Graph, d: usize) -> Pruned {
    let n = g.n();
    let mut degree: Vec<usize> = (0..n).map(|v| g.degree(v as Vertex)).collect();
    let mut removed = VertexSet::new(n);
    let mut queue: Vec<Vertex> = (0..n as Vertex).filter(|&v| degree[v as usize] <= d).collect();
    for &v in &queue {
        removed.insert(v);
    }
    while let Some(v) = queue.pop() {
        for &w in g.neighbours(v) {
            if removed.contains(w) {
                continue;
            }
            degree[w as usize] -= 1;
            if degree[w as usize] <= d {
                removed.insert(w);
                queue.push(w);
            }
        }
    }
    let keep = VertexSet::from_vertices(n, (0..n as Vertex).filter(|&v| !removed.contains(v)));
    let (graph, kept) = induced_subgraph(g, &keep);
    Pruned {
        graph,
        kept,
        removed,
    }
}

/// True iff `seq` is a path of `gp` whose vertex set induces exactly that
/// path in `g`. The empty sequence and single vertices are paths of length 0.
pub fn is_path_in_gprime_induced_in_g(
    gp: &Graph,
    g: &Graph,
    seq: &[Vertex],
) -> Result<bool, GraphError> {
    gp.is_subgraph_of(g)?;
    if let Some(&v) = seq.iter().find(|&&v| v as usize >= g.n()) {
        return Err(GraphError::OutOfRange { u: v, v, n: g.n() });
    }
    Ok(path_pairs_hold(seq, |a, b| gp.has_edge(a, b), |a, b| g.has_edge(a, b)))
}

/// Pair-level check shared by the graph predicate and the ledger audits:
/// consecutive pairs satisfy `step`, non-consecutive pairs fail `host`,
/// and no vertex repeats.
pub(crate) fn path_pairs_hold(
    seq: &[Vertex],
    step: impl Fn(Vertex, Vertex) -> bool,
    host: impl Fn(Vertex, Vertex) -> bool,
) -> bool {
    for (i, &a) in seq.iter().enumerate() {
        for (j, &b) in seq.iter().enumerate().skip(i + 1) {
            if a == b {
                return false;
            }
            if j == i + 1 {
                if !step(a, b) {
                    return false;
                }
            } else if host(a, b) {
                return false;
            }
        }
    }
    true
}

/// Vertices outside `s` with at least one neighbour in `s`.
pub fn external_neighbourhood(g: &Graph, s: &VertexSet) -> VertexSet {
    let mut out = VertexSet::new(g.n());
    for v in s.iter() {
        for &w in g.neighbours(v) {
            if !s.contains(w) {
                out.insert(w);
            }
        }
    }
    out
}

/// Subgraph induced by `s`, relabelled `0..|s|` in increasing order; the
/// returned vector maps new labels to old ones.
pub fn induced_subgraph(g: &Graph, s: &VertexSet) -> (Graph, Vec<Vertex>) {
    let old_of_new: Vec<Vertex> = s.iter().collect();
    let mut new_of_old = vec![Vertex::MAX; g.n()];
    for (i, &v) in old_of_new.iter().enumerate() {
        new_of_old[v as usize] = i as Vertex;
    }
    let adj = old_of_new
        .iter()
        .map(|&v| {
            g.neighbours(v)
                .iter()
                .filter_map(|&w| {
                    let x = new_of_old[w as usize];
                    (x != Vertex::MAX).then_some(x)
                })
                .collect::<Vec<_>>()
        })
        .collect();
    (Graph::from_raw_adjacency(adj), old_of_new)
}

// ---------------------------------------------------------------------------
// External formats
// ---------------------------------------------------------------------------

/// JSON mirror of the edge-list format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GraphJson {
    pub n: usize,
    pub edges: Vec<[Vertex; 2]>,
}

impl From<&Graph> for GraphJson {
    fn from(g: &Graph) -> Self {
        GraphJson {
            n: g.n(),
            edges: g.edges().map(|(u, v)| [u, v]).collect(),
        }
    }
}

impl TryFrom<GraphJson> for Graph {
    type Error = GraphError;

    fn try_from(j: GraphJson) -> Result<Self, Self::Error> {
        let edges: Vec<_> = j.edges.iter().map(|e| (e[0], e[1])).collect();
        Graph::from_edge_list(j.n, &edges)
    }
}

pub fn graph_from_json(text: &str) -> Result<Graph, GraphError> {
    let j: GraphJson = serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))?;
    Graph::try_from(j)
}

pub fn graph_to_json(g: &Graph) -> String {
    serde_json::to_string(&GraphJson::from(g)).expect("graph JSON serialises")
}

/// Parses the text edge-list format: a header `n m`, then `m` lines `u v`.
///
/// Blank lines and `#` comments are ignored. Labels that are not integers
/// below `n` are mapped to unused ids in order of first appearance; the
/// returned map lists every such label with its id.
pub fn parse_edge_list<R: BufRead>(reader: R) -> Result<(Graph, Vec<(String, Vertex)>), GraphError> {
    let mut header: Option<(usize, usize)> = None;
    let mut raw: Vec<(String, String, usize)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| GraphError::Io(e.to_string()))?;
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() != 2 {
            return Err(GraphError::Parse {
                line: lineno,
                msg: format!("expected two fields, found {}", toks.len()),
            });
        }
        if header.is_none() {
            let parse = |t: &str| {
                t.parse::<usize>().map_err(|_| GraphError::Parse {
                    line: lineno,
                    msg: format!("header field `{t}` is not a count"),
                })
            };
            header = Some((parse(toks[0])?, parse(toks[1])?));
        } else {
            raw.push((toks[0].to_string(), toks[1].to_string(), lineno));
        }
    }
    let (n, m) = header.ok_or(GraphError::Parse {
        line: 0,
        msg: "missing `n m` header".into(),
    })?;
    if raw.len() != m {
        return Err(GraphError::Parse {
            line: raw.last().map_or(1, |r| r.2),
            msg: format!("header promises {m} edges, found {}", raw.len()),
        });
    }

    let numeric = |t: &str| t.parse::<usize>().ok().filter(|&v| v < n);
    let mut used = vec![false; n];
    for (a, b, _) in &raw {
        for t in [a, b] {
            if let Some(v) = numeric(t) {
                used[v] = true;
            }
        }
    }
    let mut labels: HashMap<String, Vertex> = HashMap::new();
    let mut label_order: Vec<(String, Vertex)> = Vec::new();
    let mut next_free = 0usize;
    let mut edges = Vec::with_capacity(m);
    for (a, b, lineno) in &raw {
        let mut ends = [0 as Vertex; 2];
        for (slot, t) in ends.iter_mut().zip([a, b]) {
            *slot = match numeric(t) {
                Some(v) => v as Vertex,
                None => match labels.get(t.as_str()) {
                    Some(&v) => v,
                    None => {
                        while next_free < n && used[next_free] {
                            next_free += 1;
                        }
                        if next_free >= n {
                            return Err(GraphError::Parse {
                                line: *lineno,
                                msg: format!("label `{t}` does not fit in {n} vertices"),
                            });
                        }
                        used[next_free] = true;
                        let v = next_free as Vertex;
                        labels.insert(t.clone(), v);
                        label_order.push((t.clone(), v));
                        v
                    }
                },
            };
        }
        if ends[0] == ends[1] {
            return Err(GraphError::Parse {
                line: *lineno,
                msg: format!("self-loop at `{a}`"),
            });
        }
        edges.push((ends[0], ends[1]));
    }
    Ok((Graph::from_edge_list(n, &edges)?, label_order))
}

pub fn write_edge_list<W: Write>(g: &Graph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", g.n(), g.m())?;
    for (u, v) in g.edges() {
        writeln!(out, "{u} {v}")?;
    }
    Ok(())
}
