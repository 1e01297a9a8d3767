//! Edge-query answering for the search.
//!
//! A [`QuerySource`] either reads answers off a fixed pair of graphs
//! `G' ⊆ G`, or invents them on first use from a seeded Bernoulli stream so
//! that the fully exposed graph is distributed as `G(n, p)`. Every answered
//! pair is kept in a ledger and repeated queries replay the recorded answer.
//!
//! The ledger never stores the `Θ(n²)` negative answers individually. Queries
//! issued by the search engine are logged as scan events (a run of `T` scanned
//! by one stack vertex in one round, or a scan of the stack by one candidate),
//! and membership is decided from those events plus the round at which each
//! vertex left `T` and entered/left the stack.

use std::collections::{HashMap, HashSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, GraphError, Vertex};

/// Name and version of the pseudo-random generator behind every stream.
pub const GENERATOR_NAME: &str =
    "rand_chacha::ChaCha8Rng (rand_chacha 0.3; stream 0 edges/queries, 1 finalization, 2 orderings, 3 colourings)";

/// Round marker for "never happened".
pub(crate) const NEVER: u64 = u64::MAX;

#[derive(Debug, Error, PartialEq)]
pub enum SourceError {
    #[error("probability {0} is outside [0, 1]")]
    InvalidProbability(f64),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("the search needs a source with no recorded queries")]
    NotFresh,
    #[error("ordering covers {got} vertices but the source has {expected}")]
    SizeMismatch { expected: usize, got: usize },
}

pub(crate) fn check_probability(p: f64) -> Result<(), SourceError> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(SourceError::InvalidProbability(p))
    }
}

/// Number of failures before the next success of a Bernoulli(`p`) sequence.
fn geometric_gap(rng: &mut ChaCha8Rng, p: f64) -> u64 {
    if p <= 0.0 {
        return u64::MAX;
    }
    if p >= 1.0 {
        return 0;
    }
    // 1 - u lies in (0, 1]
    let u: f64 = 1.0 - rng.gen::<f64>();
    let g = (u.ln() / (-p).ln_1p()).floor();
    if g >= u64::MAX as f64 {
        u64::MAX
    } else {
        g as u64
    }
}

/// Deterministic i.i.d. Bernoulli(`p`) sequence `X_1, X_2, ...`.
///
/// The sequence is generated as run lengths (geometric gaps between ones), so
/// its values depend only on `(seed, p)`; reading it one draw at a time or a
/// whole run at once yields the same bits. `index` counts variables consumed.
#[derive(Debug, Clone)]
pub struct BernoulliStream {
    seed: u64,
    p: f64,
    index: u64,
    gap: u64,
    rng: ChaCha8Rng,
}

impl BernoulliStream {
    pub fn new(seed: u64, p: f64) -> Result<Self, SourceError> {
        check_probability(p)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        let gap = geometric_gap(&mut rng, p);
        Ok(BernoulliStream {
            seed,
            p,
            index: 0,
            gap,
            rng,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Variables consumed so far.
    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn next_bit(&mut self) -> bool {
        self.index += 1;
        if self.gap == 0 {
            self.gap = geometric_gap(&mut self.rng, self.p);
            true
        } else {
            if self.gap != u64::MAX {
                self.gap -= 1;
            }
            false
        }
    }

    /// Reads up to `max` variables, stopping after the first one. Returns the
    /// number of zeros preceding that one, or `None` if all `max` were zero.
    pub fn zeros_before_one(&mut self, max: u64) -> Option<u64> {
        if self.gap < max {
            let g = self.gap;
            self.index += g + 1;
            self.gap = geometric_gap(&mut self.rng, self.p);
            Some(g)
        } else {
            self.index += max;
            if self.gap != u64::MAX {
                self.gap -= max;
            }
            None
        }
    }
}

/// Calls `f(w, v)` for the pairs `w < v` of `0..n` selected independently
/// with probability `p`, in colex order (by `v`, then `w`).
pub(crate) fn for_each_bernoulli_pair(
    n: usize,
    p: f64,
    rng: &mut ChaCha8Rng,
    mut f: impl FnMut(Vertex, Vertex),
) {
    if n < 2 || p <= 0.0 {
        return;
    }
    let (mut v, mut w) = (1u64, 0u64);
    let n = n as u64;
    // `w` is the index of the next candidate within row `v`
    loop {
        let gap = geometric_gap(rng, p);
        w = w.saturating_add(gap);
        while v < n && w >= v {
            w -= v;
            v += 1;
        }
        if v >= n {
            return;
        }
        f(w as Vertex, v as Vertex);
        w += 1;
    }
}

/// `G(n, p)` sampled directly; deterministic per seed.
pub fn sample_gnp(n: usize, p: f64, seed: u64) -> Result<Graph, SourceError> {
    check_probability(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let mut adj = vec![Vec::new(); n];
    for_each_bernoulli_pair(n, p, &mut rng, |w, v| {
        adj[w as usize].push(v);
        adj[v as usize].push(w);
    });
    Ok(Graph::from_raw_adjacency(adj))
}

pub(crate) fn pair_count(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

#[inline]
fn pair_key(a: Vertex, b: Vertex) -> u64 {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    (lo as u64) << 32 | hi as u64
}

/// Where a query was issued from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryContext {
    /// `(u, t)` with `u` on top of the stack and `t` unvisited.
    Step2,
    /// `(t, u')` with `t` the candidate and `u'` lower on the stack.
    Step3,
    Other,
}

/// Recorded answer for one unordered pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Answer {
    pub in_eprime: bool,
    pub in_e: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct QueryCounters {
    /// Distinct pairs answered.
    pub new_queries: u64,
    /// Distinct pairs queried from the top of the stack into `T`.
    pub ut_queries: u64,
}

#[derive(Debug, Clone)]
enum Mode {
    Fixed { gp: Arc<Graph>, g: Arc<Graph> },
    Generative(Box<Generative>),
}

#[derive(Debug, Clone)]
struct Generative {
    n: usize,
    stream: BernoulliStream,
    positives: HashSet<u64>,
    exposed: Vec<Vec<Vertex>>,
    exposed_m: usize,
    dsu: Dsu,
}

#[derive(Debug, Clone)]
struct Dsu {
    parent: Vec<u32>,
    size: Vec<u32>,
    components: usize,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
            components: n,
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        let mut root = x;
        while self.parent[root as usize] != root {
            root = self.parent[root as usize];
        }
        while self.parent[x as usize] != root {
            let next = self.parent[x as usize];
            self.parent[x as usize] = root;
            x = next;
        }
        root
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
        self.components -= 1;
    }
}

/// One step-2 scan: the top vertex queried every vertex still unvisited at
/// the start of `round` whose position lies in `from..=to`.
#[derive(Debug, Clone, Copy)]
struct Burst {
    round: u64,
    from: u32,
    to: u32,
}

/// One step-3 scan: candidate queried every stack vertex other than `top`
/// present during `round` whose position is at most `cutoff`.
#[derive(Debug, Clone, Copy)]
struct StackScan {
    round: u64,
    top: Vertex,
    cutoff: u32,
}

/// Query history of a search run.
#[derive(Debug, Clone)]
struct ScanLog {
    pos: Vec<u32>,
    left_t: Vec<u64>,
    entered_u: Vec<u64>,
    left_u: Vec<u64>,
    bursts: Vec<Vec<Burst>>,
    stack_scans: Vec<Option<StackScan>>,
}

impl ScanLog {
    fn new(pos: &[u32]) -> Self {
        let n = pos.len();
        ScanLog {
            pos: pos.to_vec(),
            left_t: vec![NEVER; n],
            entered_u: vec![NEVER; n],
            left_u: vec![NEVER; n],
            bursts: vec![Vec::new(); n],
            stack_scans: vec![None; n],
        }
    }

    fn scanned_by(&self, scanner: Vertex, x: Vertex) -> bool {
        let px = self.pos[x as usize];
        let bursts = &self.bursts[scanner as usize];
        // bursts of one scanner cover increasing, disjoint position ranges
        let i = bursts.partition_point(|b| b.to < px);
        if let Some(b) = bursts.get(i) {
            if b.from <= px && self.left_t[x as usize] >= b.round {
                return true;
            }
        }
        if let Some(s) = self.stack_scans[scanner as usize] {
            let xi = x as usize;
            if x != s.top
                && px <= s.cutoff
                && self.entered_u[xi] < s.round
                && self.left_u[xi] > s.round
            {
                return true;
            }
        }
        false
    }

    fn covers(&self, a: Vertex, b: Vertex) -> bool {
        self.scanned_by(a, b) || self.scanned_by(b, a)
    }
}

/// Pair-answer provider with a consistency ledger.
///
/// Single-owner mutable state: one search run owns one source.
#[derive(Debug, Clone)]
pub struct QuerySource {
    mode: Mode,
    explicit: HashMap<u64, Answer>,
    log: Option<ScanLog>,
    counters: QueryCounters,
    finalized: bool,
}

impl QuerySource {
    /// Answers read off `gp ⊆ g` (same vertex set).
    pub fn fixed(gp: impl Into<Arc<Graph>>, g: impl Into<Arc<Graph>>) -> Result<Self, SourceError> {
        let (gp, g) = (gp.into(), g.into());
        gp.is_subgraph_of(&g)?;
        Ok(Self::with_mode(Mode::Fixed { gp, g }))
    }

    /// Answers drawn lazily from a Bernoulli(`p`) stream; here `G' = G`.
    pub fn generative(n: usize, p: f64, seed: u64) -> Result<Self, SourceError> {
        let stream = BernoulliStream::new(seed, p)?;
        Ok(Self::with_mode(Mode::Generative(Box::new(Generative {
            n,
            stream,
            positives: HashSet::new(),
            exposed: vec![Vec::new(); n],
            exposed_m: 0,
            dsu: Dsu::new(n),
        }))))
    }

    fn with_mode(mode: Mode) -> Self {
        QuerySource {
            mode,
            explicit: HashMap::new(),
            log: None,
            counters: QueryCounters::default(),
            finalized: false,
        }
    }

    pub fn n(&self) -> usize {
        match &self.mode {
            Mode::Fixed { g, .. } => g.n(),
            Mode::Generative(gen) => gen.n,
        }
    }

    pub fn is_finalized(&self) -> bool {
        self.finalized
    }

    pub fn is_generative(&self) -> bool {
        matches!(self.mode, Mode::Generative(_))
    }

    pub fn counters(&self) -> QueryCounters {
        self.counters
    }

    /// Seed of the underlying stream (generative mode only).
    pub fn seed(&self) -> Option<u64> {
        match &self.mode {
            Mode::Generative(gen) => Some(gen.stream.seed()),
            Mode::Fixed { .. } => None,
        }
    }

    /// Stream variables consumed (generative mode only).
    pub fn stream_index(&self) -> Option<u64> {
        match &self.mode {
            Mode::Generative(gen) => Some(gen.stream.index()),
            Mode::Fixed { .. } => None,
        }
    }

    /// The fixed graphs `(G', G)`, if any.
    pub fn fixed_graphs(&self) -> Option<(&Graph, &Graph)> {
        match &self.mode {
            Mode::Fixed { gp, g } => Some((gp, g)),
            Mode::Generative(_) => None,
        }
    }

    /// Answer recorded for `{a, b}`, or `None` if the pair was never queried.
    pub fn recorded(&self, a: Vertex, b: Vertex) -> Option<Answer> {
        if a == b {
            return None;
        }
        if let Some(&ans) = self.explicit.get(&pair_key(a, b)) {
            return Some(ans);
        }
        let logged = self.log.as_ref().is_some_and(|log| log.covers(a, b));
        match &self.mode {
            Mode::Generative(gen) => {
                if gen.positives.contains(&pair_key(a, b)) {
                    Some(Answer { in_eprime: true, in_e: true })
                } else if logged || self.finalized {
                    Some(Answer { in_eprime: false, in_e: false })
                } else {
                    None
                }
            }
            Mode::Fixed { gp, g } => {
                if logged || self.finalized {
                    Some(Answer {
                        in_eprime: gp.has_edge(a, b),
                        in_e: g.has_edge(a, b),
                    })
                } else {
                    None
                }
            }
        }
    }

    fn query(&mut self, a: Vertex, b: Vertex, ctx: QueryContext) -> Answer {
        assert_ne!(a, b, "queried a pair (v, v)");
        assert!((a.max(b) as usize) < self.n(), "queried vertex outside the source");
        if let Some(ans) = self.recorded(a, b) {
            return ans;
        }
        let ans = match &mut self.mode {
            Mode::Fixed { gp, g } => Answer {
                in_eprime: gp.has_edge(a, b),
                in_e: g.has_edge(a, b),
            },
            Mode::Generative(gen) => {
                let x = gen.stream.next_bit();
                Answer { in_eprime: x, in_e: x }
            }
        };
        if ans.in_e && self.is_generative() {
            self.record_positive(a, b);
        } else {
            self.explicit.insert(pair_key(a, b), ans);
        }
        self.counters.new_queries += 1;
        if ctx == QueryContext::Step2 {
            self.counters.ut_queries += 1;
        }
        ans
    }

    /// Is `(u, t)` an edge of `E'`?
    pub fn query_eprime(&mut self, u: Vertex, t: Vertex, ctx: QueryContext) -> bool {
        self.query(u, t, ctx).in_eprime
    }

    /// Is `(t, u')` an edge of `E`?
    pub fn query_e(&mut self, t: Vertex, u2: Vertex) -> bool {
        self.query(t, u2, QueryContext::Step3).in_e
    }

    /// Answers every pair not asked so far and returns the exposed graph.
    ///
    /// In generative mode the unasked pairs are decided by a second,
    /// independent Bernoulli stream with the same seed, so the result is
    /// distributed exactly as `G(n, p)`.
    pub fn finalize(&mut self) -> Graph {
        if self.finalized {
            return self.exposed_graph();
        }
        let total = pair_count(self.n());
        match &self.mode {
            Mode::Fixed { g, .. } => {
                let g = Graph::clone(g);
                self.counters.new_queries = total;
                self.finalized = true;
                g
            }
            Mode::Generative(gen) => {
                let (n, p, seed) = (gen.n, gen.stream.p(), gen.stream.seed());
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(1);
                let mut accepted = Vec::new();
                for_each_bernoulli_pair(n, p, &mut rng, |w, v| {
                    if self.recorded(w, v).is_none() {
                        accepted.push((w, v));
                    }
                });
                for (w, v) in accepted {
                    self.record_positive(w, v);
                }
                self.finalized = true;
                self.counters.new_queries = total;
                self.exposed_graph()
            }
        }
    }

    /// Graph of positive answers so far (generative), or `G` (fixed).
    pub fn exposed_graph(&self) -> Graph {
        match &self.mode {
            Mode::Fixed { g, .. } => Graph::clone(g),
            Mode::Generative(gen) => Graph::from_raw_adjacency(gen.exposed.clone()),
        }
    }

    /// Edge count of the exposed graph (generative) or of `G` (fixed).
    pub fn exposed_edge_count(&self) -> usize {
        match &self.mode {
            Mode::Fixed { g, .. } => g.m(),
            Mode::Generative(gen) => gen.exposed_m,
        }
    }

    /// Excess of the exposed graph, maintained incrementally (generative mode).
    pub fn exposed_excess(&self) -> Option<usize> {
        match &self.mode {
            Mode::Generative(gen) => Some(gen.exposed_m + gen.dsu.components - gen.n),
            Mode::Fixed { .. } => None,
        }
    }

    /// Positive pairs exposed so far, each once with `a < b` (generative mode).
    pub fn exposed_edges(&self) -> Vec<(Vertex, Vertex)> {
        match &self.mode {
            Mode::Generative(gen) => gen
                .exposed
                .iter()
                .enumerate()
                .flat_map(|(a, list)| {
                    list.iter()
                        .filter(move |&&b| b as usize > a)
                        .map(move |&b| (a as Vertex, b))
                })
                .collect(),
            Mode::Fixed { .. } => Vec::new(),
        }
    }

    fn record_positive(&mut self, a: Vertex, b: Vertex) {
        if let Mode::Generative(gen) = &mut self.mode {
            if gen.positives.insert(pair_key(a, b)) {
                gen.exposed[a as usize].push(b);
                gen.exposed[b as usize].push(a);
                gen.exposed_m += 1;
                gen.dsu.union(a, b);
            }
        }
    }

    // -- engine hooks -------------------------------------------------------

    pub(crate) fn begin_run(&mut self, pos: &[u32]) -> Result<(), SourceError> {
        if pos.len() != self.n() {
            return Err(SourceError::SizeMismatch {
                expected: self.n(),
                got: pos.len(),
            });
        }
        if self.counters.new_queries != 0 || self.log.is_some() {
            return Err(SourceError::NotFresh);
        }
        self.log = Some(ScanLog::new(pos));
        Ok(())
    }

    fn log_mut(&mut self) -> &mut ScanLog {
        self.log.as_mut().expect("begin_run precedes engine hooks")
    }

    pub(crate) fn note_left_t(&mut self, v: Vertex, round: u64) {
        self.log_mut().left_t[v as usize] = round;
    }

    pub(crate) fn note_pushed(&mut self, v: Vertex, round: u64) {
        self.log_mut().entered_u[v as usize] = round;
    }

    pub(crate) fn note_popped(&mut self, v: Vertex, round: u64) {
        self.log_mut().left_u[v as usize] = round;
    }

    /// Logs a step-2 scan of `queried` fresh pairs covering positions `from..=to`.
    pub(crate) fn log_burst(&mut self, u: Vertex, round: u64, from: u32, to: u32, queried: u64) {
        if queried > 0 {
            self.log_mut().bursts[u as usize].push(Burst { round, from, to });
        }
        self.counters.new_queries += queried;
        self.counters.ut_queries += queried;
    }

    /// Logs a step-3 scan that asked `fresh` previously unasked pairs.
    pub(crate) fn log_stack_scan(&mut self, t: Vertex, round: u64, top: Vertex, cutoff: u32, fresh: u64) {
        self.log_mut().stack_scans[t as usize] = Some(StackScan { round, top, cutoff });
        self.counters.new_queries += fresh;
    }

    /// Generative mode: answers `available` fresh pairs in order, stopping at
    /// the first positive; returns its index among them.
    pub(crate) fn draw_first_positive(&mut self, available: u64) -> Option<u64> {
        match &mut self.mode {
            Mode::Generative(gen) => gen.stream.zeros_before_one(available),
            Mode::Fixed { .. } => unreachable!("fixed sources read answers off the graphs"),
        }
    }

    pub(crate) fn expose(&mut self, a: Vertex, b: Vertex) {
        self.record_positive(a, b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_answers() {
        let k3 = Graph::complete(3);
        let mut src = QuerySource::fixed(k3.clone(), k3).unwrap();
        assert!(src.query_eprime(0, 1, QueryContext::Step2));
        assert_eq!(src.counters().ut_queries, 1);

        let mut src = QuerySource::fixed(Graph::path(3), Graph::complete(3)).unwrap();
        assert!(src.query_e(0, 2));
        assert!(!src.query_eprime(0, 2, QueryContext::Other));
        assert_eq!(src.counters().new_queries, 1);

        assert!(QuerySource::fixed(Graph::complete(3), Graph::path(3)).is_err());
    }

    #[test]
    fn generative_extremes_and_replay() {
        let mut src = QuerySource::generative(10, 0.0, 3).unwrap();
        assert!(!src.query_eprime(0, 1, QueryContext::Step2));
        let mut src = QuerySource::generative(10, 1.0, 3).unwrap();
        assert!(src.query_e(4, 7));

        let mut src = QuerySource::generative(50, 0.5, 11).unwrap();
        let first: Vec<bool> = (1..40).map(|v| src.query_eprime(0, v, QueryContext::Step2)).collect();
        let again: Vec<bool> = (1..40).map(|v| src.query_e(v, 0)).collect();
        assert_eq!(first, again);
        assert_eq!(src.counters().new_queries, 39);
        assert_eq!(src.counters().ut_queries, 39);
        assert_eq!(src.stream_index(), Some(39));
    }

    #[test]
    fn finalize_small_cases() {
        let mut src = QuerySource::generative(3, 1.0, 0).unwrap();
        assert_eq!(src.finalize(), Graph::complete(3));
        let mut src = QuerySource::generative(3, 0.0, 0).unwrap();
        assert_eq!(src.finalize(), Graph::empty(3));

        let run = |seed| {
            let mut s = QuerySource::generative(100, 0.5, seed).unwrap();
            s.query_e(3, 9);
            s.finalize()
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));

        let mut src = QuerySource::generative(30, 0.3, 5).unwrap();
        src.query_e(1, 2);
        let g = src.finalize();
        assert_eq!(src.counters().new_queries, pair_count(30));
        assert_eq!(src.finalize(), g);
        for (a, b) in (0..30u32).flat_map(|a| (a + 1..30).map(move |b| (a, b))) {
            assert_eq!(src.recorded(a, b).unwrap().in_e, g.has_edge(a, b));
        }
    }

    #[test]
    fn stream_is_consumption_independent() {
        let mut one = BernoulliStream::new(42, 0.1).unwrap();
        let bits: Vec<bool> = (0..5000).map(|_| one.next_bit()).collect();

        let mut runs = BernoulliStream::new(42, 0.1).unwrap();
        let mut replay = Vec::new();
        let mut chunk = 1u64;
        while replay.len() < 5000 {
            let max = chunk.min(5000 - replay.len() as u64);
            match runs.zeros_before_one(max) {
                Some(g) => {
                    replay.extend(std::iter::repeat_n(false, g as usize));
                    replay.push(true);
                }
                None => replay.extend(std::iter::repeat_n(false, max as usize)),
            }
            chunk = chunk % 17 + 3;
        }
        assert_eq!(bits, replay);
        assert_eq!(runs.index(), 5000);
    }

    #[test]
    fn gnp_sampler_extremes() {
        assert_eq!(sample_gnp(5, 0.0, 1).unwrap(), Graph::empty(5));
        assert_eq!(sample_gnp(5, 1.0, 1).unwrap(), Graph::complete(5));
        assert_eq!(sample_gnp(40, 0.2, 9).unwrap(), sample_gnp(40, 0.2, 9).unwrap());
        assert!(sample_gnp(5, 1.5, 1).is_err());
    }

    #[test]
    fn exposed_excess_tracks_cycles() {
        let mut src = QuerySource::generative(4, 1.0, 0).unwrap();
        src.query_e(0, 1);
        src.query_e(1, 2);
        assert_eq!(src.exposed_excess(), Some(0));
        src.query_e(2, 0);
        assert_eq!(src.exposed_excess(), Some(1));
        src.finalize();
        assert_eq!(src.exposed_excess(), Some(3));
    }
}
