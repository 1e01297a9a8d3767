//! Local-sparsity and expansion conditions that force the search to build a
//! long induced path, plus the Ramsey-style pipeline built on top of them.
//!
//! If every set of fewer than `ℓ + s1 + s2` vertices spans fewer than `2·s2`
//! edges of `G`, and every `s1`-set of `G'` has at least `s2 + ℓ` external
//! neighbours, then running the search on `(G', G)` until `|S1| = s1` or
//! `|S2| = s2` leaves a stack of at least `ℓ + 1` vertices.

use serde::Serialize;
use thiserror::Error;

use crate::dfs::{dfs_run_observed, DfsError, RunOptions, StopReason, StopRule, VertexOrdering};
use crate::graph::{
    induced_subgraph, is_path_in_gprime_induced_in_g, prune_min_degree, Graph, GraphError, Pruned, Vertex, VertexSet,
};
use crate::source::{QuerySource, SourceError};

/// Largest vertex count the exhaustive checkers accept.
pub const EXACT_CHECK_CAP: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GuaranteeParams {
    pub s1: usize,
    pub s2: usize,
    pub ell: usize,
}

impl GuaranteeParams {
    pub fn new(s1: usize, s2: usize, ell: usize) -> Result<Self, GuaranteeError> {
        if s1 == 0 || s2 == 0 || ell == 0 {
            return Err(GuaranteeError::InvalidParams { s1, s2, ell });
        }
        Ok(GuaranteeParams { s1, s2, ell })
    }

    /// `ℓ + s1 + s2`.
    pub fn total(&self) -> usize {
        self.ell + self.s1 + self.s2
    }
}

/// Outcome of an exhaustive condition check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CheckOutcome {
    Pass,
    Witness { set: Vec<Vertex> },
    Undecided { reason: String },
}

impl CheckOutcome {
    pub fn is_pass(&self) -> bool {
        matches!(self, CheckOutcome::Pass)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationCause {
    TooFewVertices { n: usize, needed: usize },
    StoppedShort {
        stop_reason: StopReason,
        stack: usize,
        s1: usize,
        s2: usize,
        t: usize,
    },
}

#[derive(Debug, Error, PartialEq)]
pub enum GuaranteeError {
    #[error("parameters must be positive (s1 = {s1}, s2 = {s2}, ell = {ell})")]
    InvalidParams { s1: usize, s2: usize, ell: usize },
    #[error("hypotheses violated: {0:?}")]
    HypothesesViolated(ViolationCause),
    #[error("returned sequence failed certification: {0:?}")]
    CertificateFailed(Vec<Vertex>),
    #[error("colouring has {got} entries for {expected} edges")]
    ColouringSize { got: usize, expected: usize },
    #[error("edge colour {colour} is not below k = {k}")]
    ColourOutOfRange { colour: u32, k: u32 },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Source(#[from] SourceError),
    #[error(transparent)]
    Dfs(#[from] DfsError),
}

fn masks(g: &Graph) -> Vec<u32> {
    (0..g.n() as Vertex)
        .map(|v| g.neighbours(v).iter().fold(0u32, |m, &w| m | 1 << w))
        .collect()
}

fn mask_to_vec(s: u32) -> Vec<Vertex> {
    (0..32).filter(|&v| s >> v & 1 == 1).collect()
}

/// Calls `f` on every `k`-subset of `0..n` as a bitmask until it returns
/// `false`. Returns whether the enumeration ran to the end.
fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(u32) -> bool) -> bool {
    if k > n {
        return true;
    }
    if k == 0 {
        return f(0);
    }
    let limit = 1u64 << n;
    let mut s: u64 = (1u64 << k) - 1;
    while s < limit {
        if !f(s as u32) {
            return false;
        }
        // next subset of the same size
        let c = s & s.wrapping_neg();
        let r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
    }
    true
}

fn edges_in(adj: &[u32], s: u32) -> usize {
    let mut it = s;
    let mut twice = 0;
    while it != 0 {
        let v = it.trailing_zeros() as usize;
        it &= it - 1;
        twice += (adj[v] & s).count_ones() as usize;
    }
    twice / 2
}

/// Do all sets of fewer than `size_cap` vertices span fewer than `edge_cap`
/// edges?
///
/// Spanned edges only grow when vertices are added, so only sets of size
/// `min(size_cap - 1, n)` need to be examined.
pub fn check_local_density(g: &Graph, size_cap: usize, edge_cap: usize) -> CheckOutcome {
    let n = g.n();
    let k = size_cap.saturating_sub(1).min(n);
    if size_cap == 0 {
        return CheckOutcome::Pass;
    }
    if edge_cap == 0 {
        // the empty set already spans 0 ≥ 0 edges
        return CheckOutcome::Witness { set: Vec::new() };
    }
    // cheap degree bound: any k-set spans at most half the k largest degrees
    let mut degrees: Vec<usize> = (0..n as Vertex).map(|v| g.degree(v)).collect();
    degrees.sort_unstable_by(|a, b| b.cmp(a));
    let top: usize = degrees.iter().take(k).map(|&d| d.min(k.saturating_sub(1))).sum::<usize>() / 2;
    if top.min(g.m()) < edge_cap {
        return CheckOutcome::Pass;
    }
    if n > EXACT_CHECK_CAP {
        return CheckOutcome::Undecided {
            reason: format!("{n} vertices exceed the exhaustive limit of {EXACT_CHECK_CAP}"),
        };
    }
    let adj = masks(g);
    let mut witness = None;
    for_each_subset(n, k, |s| {
        if edges_in(&adj, s) >= edge_cap {
            witness = Some(s);
            false
        } else {
            true
        }
    });
    match witness {
        Some(s) => CheckOutcome::Witness { set: mask_to_vec(s) },
        None => CheckOutcome::Pass,
    }
}

/// Does every set of exactly `s1` vertices have at least `need` neighbours
/// outside itself in `gp`?
pub fn check_expansion(gp: &Graph, s1: usize, need: usize) -> CheckOutcome {
    let n = gp.n();
    if s1 > n {
        return CheckOutcome::Pass;
    }
    if need > n - s1 {
        // no set can have that many outside neighbours; any one is a witness
        return CheckOutcome::Witness {
            set: (0..s1 as Vertex).collect(),
        };
    }
    if n > EXACT_CHECK_CAP {
        return CheckOutcome::Undecided {
            reason: format!("{n} vertices exceed the exhaustive limit of {EXACT_CHECK_CAP}"),
        };
    }
    let adj = masks(gp);
    let mut witness = None;
    for_each_subset(n, s1, |s| {
        let mut it = s;
        let mut nb = 0u32;
        while it != 0 {
            let v = it.trailing_zeros() as usize;
            it &= it - 1;
            nb |= adj[v];
        }
        if ((nb & !s).count_ones() as usize) < need {
            witness = Some(s);
            false
        } else {
            true
        }
    });
    match witness {
        Some(s) => CheckOutcome::Witness { set: mask_to_vec(s) },
        None => CheckOutcome::Pass,
    }
}

/// Both conditions for the given parameters.
pub fn hypotheses_hold(gp: &Graph, g: &Graph, params: &GuaranteeParams) -> (CheckOutcome, CheckOutcome) {
    (
        check_local_density(g, params.total(), 2 * params.s2),
        check_expansion(gp, params.s1, params.s2 + params.ell),
    )
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GuaranteedPath {
    /// Stack contents when the run stopped, bottom first.
    pub path: Vec<Vertex>,
    pub length: usize,
    pub stop_reason: StopReason,
    pub rounds: u64,
    pub s1_final: usize,
    pub s2_final: usize,
}

/// Runs the search on `(gp, g)` and stops as soon as the stack holds
/// `ℓ + 1` vertices, `|S1| = s1` or `|S2| = s2`. The stack is returned
/// only after it has been certified as a `gp`-path induced in `g`.
pub fn find_induced_path_guaranteed(
    gp: &Graph,
    g: &Graph,
    params: GuaranteeParams,
    order: VertexOrdering,
) -> Result<GuaranteedPath, GuaranteeError> {
    gp.is_subgraph_of(g)?;
    let n = g.n();
    if n < params.total() {
        return Err(GuaranteeError::HypothesesViolated(ViolationCause::TooFewVertices {
            n,
            needed: params.total(),
        }));
    }
    let mut src = QuerySource::fixed(gp.clone(), g.clone())?;
    let stop = StopRule {
        s1: Some(params.s1),
        s2: Some(params.s2),
        stack_vertices: Some(params.ell + 1),
        query_budget: None,
    };
    let opts = RunOptions {
        trace_every: None,
        finalize: false,
    };
    let (rec, _) = dfs_run_observed(order, &mut src, stop, opts, |_, _| {})?;
    if rec.final_stack.len() <= params.ell {
        return Err(GuaranteeError::HypothesesViolated(ViolationCause::StoppedShort {
            stop_reason: rec.stop_reason,
            stack: rec.final_stack.len(),
            s1: rec.s1_final,
            s2: rec.s2_final,
            t: rec.t_final,
        }));
    }
    if !is_path_in_gprime_induced_in_g(gp, g, &rec.final_stack)? {
        return Err(GuaranteeError::CertificateFailed(rec.final_stack));
    }
    Ok(GuaranteedPath {
        length: rec.final_stack.len() - 1,
        path: rec.final_stack,
        stop_reason: rec.stop_reason,
        rounds: rec.rounds,
        s1_final: rec.s1_final,
        s2_final: rec.s2_final,
    })
}

// ---------------------------------------------------------------------------
// Colourings and the Ramsey pipeline
// ---------------------------------------------------------------------------

/// Edge colouring aligned with `Graph::edges()` order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeColouring {
    k: u32,
    colours: Vec<u32>,
    // offset of vertex v's first upper edge in `colours`
    offsets: Vec<usize>,
}

impl EdgeColouring {
    pub fn new(g: &Graph, k: u32, colours: Vec<u32>) -> Result<Self, GuaranteeError> {
        if colours.len() != g.m() {
            return Err(GuaranteeError::ColouringSize {
                got: colours.len(),
                expected: g.m(),
            });
        }
        if let Some(&c) = colours.iter().find(|&&c| c >= k) {
            return Err(GuaranteeError::ColourOutOfRange { colour: c, k });
        }
        let mut offsets = Vec::with_capacity(g.n() + 1);
        let mut acc = 0;
        for v in 0..g.n() as Vertex {
            offsets.push(acc);
            acc += g.neighbours(v).iter().filter(|&&w| w > v).count();
        }
        offsets.push(acc);
        Ok(EdgeColouring { k, colours, offsets })
    }

    /// Every edge gets colour 0.
    pub fn single(g: &Graph, k: u32) -> Self {
        Self::new(g, k.max(1), vec![0; g.m()]).expect("colour 0 is always valid")
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn colours(&self) -> &[u32] {
        &self.colours
    }

    /// Colour of edge `{a, b}` of `g`, or `None` for a non-edge.
    pub fn colour_of(&self, g: &Graph, a: Vertex, b: Vertex) -> Option<u32> {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let nb = g.neighbours(lo);
        let first_upper = nb.partition_point(|&w| w <= lo);
        let idx = nb[first_upper..].binary_search(&hi).ok()?;
        Some(self.colours[self.offsets[lo as usize] + idx])
    }

    /// Edge count per colour.
    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k as usize];
        for &c in &self.colours {
            sizes[c as usize] += 1;
        }
        sizes
    }

    /// Colour with the most edges; ties go to the lowest index.
    pub fn densest_class(&self) -> u32 {
        let sizes = self.class_sizes();
        let mut best = 0;
        for (c, &s) in sizes.iter().enumerate() {
            if s > sizes[best] {
                best = c;
            }
        }
        best as u32
    }

    /// Spanning subgraph formed by the edges of one colour.
    pub fn class_graph(&self, g: &Graph, colour: u32) -> Graph {
        let edges: Vec<(Vertex, Vertex)> = g
            .edges()
            .zip(&self.colours)
            .filter(|(_, &c)| c == colour)
            .map(|(e, _)| e)
            .collect();
        Graph::from_edge_list(g.n(), &edges).expect("edges come from a valid graph")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PipelineMode {
    /// Majority colour, prune degree ≤ 16.
    TwoColour,
    /// Densest of `k` colours, prune degree ≤ ⌊d/4⌋ with `d = c·ln k / 2`.
    Multi { c: f64 },
}

impl PipelineMode {
    pub fn prune_threshold(&self, k: u32) -> usize {
        match *self {
            PipelineMode::TwoColour => 16,
            PipelineMode::Multi { c } => {
                let d = c * (k as f64).ln() / 2.0;
                (d / 4.0).floor().max(0.0) as usize
            }
        }
    }

    /// Default parameters multiplied by `scale`, each rounded and at least 1.
    /// `n` is the host vertex count; in multicolour mode the per-colour size
    /// `n / k` enters the formulas.
    pub fn default_params(&self, n: usize, k: u32, scale: f64) -> GuaranteeParams {
        let r = |x: f64| (x * scale).round().max(1.0) as usize;
        match *self {
            PipelineMode::TwoColour => {
                let ell = r(7.0 * n as f64 / 1e7);
                GuaranteeParams {
                    s1: 3 * ell,
                    s2: 24 * ell,
                    ell,
                }
            }
            PipelineMode::Multi { c } => {
                let kf = k as f64;
                let lk = kf.ln();
                let base = n as f64 / kf / (c.powi(3) * kf);
                GuaranteeParams {
                    ell: r(base / lk.powi(3)),
                    s1: r(base / lk.powi(3)),
                    s2: r(base / lk.powi(2)),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageSizes {
    pub host_vertices: usize,
    pub host_edges: usize,
    pub class_vertices: usize,
    pub class_edges: usize,
    pub pruned_vertices: usize,
    pub pruned_edges: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub monochromatic: bool,
    pub path_in_gprime: bool,
    pub induced_in_host: bool,
}

impl Certificate {
    pub fn holds(&self) -> bool {
        self.monochromatic && self.path_in_gprime && self.induced_in_host
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum PipelineOutcome {
    Certified {
        /// Host labels.
        path: Vec<Vertex>,
        length: usize,
        stop_reason: StopReason,
        certificate: Certificate,
    },
    TooSmall {
        needed: usize,
        available: usize,
    },
    HypothesesViolated {
        cause: ViolationCause,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineReport {
    pub colour: u32,
    pub prune_threshold: usize,
    pub params: GuaranteeParams,
    pub stages: StageSizes,
    pub outcome: PipelineOutcome,
}

impl PipelineReport {
    pub fn path(&self) -> Option<&[Vertex]> {
        match &self.outcome {
            PipelineOutcome::Certified { path, .. } => Some(path),
            _ => None,
        }
    }

    pub fn certified(&self) -> bool {
        matches!(&self.outcome, PipelineOutcome::Certified { certificate, .. } if certificate.holds())
    }
}

/// Graphs produced by the first pipeline stages.
#[derive(Debug, Clone)]
pub struct PipelineGraphs {
    pub colour: u32,
    pub prune_threshold: usize,
    /// Spanning subgraph of the chosen colour.
    pub class: Graph,
    /// Pruned class graph `G'`, relabelled; `pruned.kept` maps back to host labels.
    pub pruned: Pruned,
    /// `G[V(G')]` with the same labels as `pruned.graph`.
    pub host_part: Graph,
}

impl PipelineGraphs {
    pub fn stages(&self, g: &Graph) -> StageSizes {
        StageSizes {
            host_vertices: g.n(),
            host_edges: g.m(),
            class_vertices: (0..g.n() as Vertex).filter(|&v| self.class.degree(v) > 0).count(),
            class_edges: self.class.m(),
            pruned_vertices: self.pruned.graph.n(),
            pruned_edges: self.pruned.graph.m(),
        }
    }

    pub fn to_host(&self, seq: &[Vertex]) -> Vec<Vertex> {
        seq.iter().map(|&v| self.pruned.kept[v as usize]).collect()
    }
}

/// Densest colour class, pruned to minimum degree above the mode's threshold,
/// together with the host graph induced on the survivors.
pub fn pipeline_graphs(
    g: &Graph,
    colouring: &EdgeColouring,
    mode: PipelineMode,
) -> Result<PipelineGraphs, GuaranteeError> {
    if colouring.colours.len() != g.m() {
        return Err(GuaranteeError::ColouringSize {
            got: colouring.colours.len(),
            expected: g.m(),
        });
    }
    let colour = colouring.densest_class();
    let class = colouring.class_graph(g, colour);
    let prune_threshold = mode.prune_threshold(colouring.k);
    let pruned = prune_min_degree(&class, prune_threshold);
    let keep = VertexSet::from_vertices(g.n(), pruned.kept.iter().copied());
    let (host_part, host_labels) = induced_subgraph(g, &keep);
    debug_assert_eq!(host_labels, pruned.kept);
    Ok(PipelineGraphs {
        colour,
        prune_threshold,
        class,
        pruned,
        host_part,
    })
}

/// Certificate of a host-labelled sequence against the pipeline graphs.
pub fn certify_monochromatic(
    g: &Graph,
    colouring: &EdgeColouring,
    graphs: &PipelineGraphs,
    local: &[Vertex],
) -> Result<Certificate, GuaranteeError> {
    let path = graphs.to_host(local);
    Ok(Certificate {
        monochromatic: path
            .windows(2)
            .all(|w| colouring.colour_of(g, w[0], w[1]) == Some(graphs.colour)),
        path_in_gprime: is_path_in_gprime_induced_in_g(&graphs.pruned.graph, &graphs.pruned.graph, local)?,
        induced_in_host: is_path_in_gprime_induced_in_g(g, g, &path)?,
    })
}

/// Picks the densest colour class, prunes it to minimum degree above the
/// mode's threshold, and searches the pruned graph `G'` inside `G[V(G')]`.
pub fn ramsey_pipeline(
    g: &Graph,
    colouring: &EdgeColouring,
    mode: PipelineMode,
    params: GuaranteeParams,
) -> Result<PipelineReport, GuaranteeError> {
    let graphs = pipeline_graphs(g, colouring, mode)?;
    let stages = graphs.stages(g);
    let pruned = &graphs.pruned;
    let report = |outcome| PipelineReport {
        colour: graphs.colour,
        prune_threshold: graphs.prune_threshold,
        params,
        stages: stages.clone(),
        outcome,
    };

    if pruned.graph.n() < params.total() {
        return Ok(report(PipelineOutcome::TooSmall {
            needed: params.total(),
            available: pruned.graph.n(),
        }));
    }
    let order = VertexOrdering::identity(pruned.graph.n());
    match find_induced_path_guaranteed(&pruned.graph, &graphs.host_part, params, order) {
        Ok(found) => {
            let certificate = certify_monochromatic(g, colouring, &graphs, &found.path)?;
            Ok(report(PipelineOutcome::Certified {
                length: found.length,
                path: graphs.to_host(&found.path),
                stop_reason: found.stop_reason,
                certificate,
            }))
        }
        Err(GuaranteeError::HypothesesViolated(cause)) => Ok(report(PipelineOutcome::HypothesesViolated { cause })),
        Err(e) => Err(e),
    }
}
