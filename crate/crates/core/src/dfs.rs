//! Depth-first search that keeps its stack an induced path.
//!
//! Vertices move `T → U` (the stack) and leave the stack into `S1`, or go
//! straight from `T` into `S2` when the candidate sees a second stack vertex.
//! At every point the stack spells a path of `G'` that is induced in `G`.
//!
//! Each stack vertex resumes its scan of `T` where it last stopped. The
//! vertices it skipped earlier were answered negatively and the ledger would
//! replay those answers, so this visits the same candidates as rescanning
//! from the front, with `O(n²)` total query work instead of `O(n³)`.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::graph::Vertex;
use crate::source::{QuerySource, SourceError};

#[derive(Debug, Error, PartialEq)]
pub enum DfsError {
    #[error("round requested on a finished search")]
    Terminal,
    #[error("not a permutation of 0..{0}")]
    InvalidOrdering(usize),
    #[error(transparent)]
    Source(#[from] SourceError),
}

/// A permutation `pi` of the vertices and its inverse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexOrdering {
    pi: Vec<Vertex>,
    pos: Vec<u32>,
}

impl VertexOrdering {
    pub fn identity(n: usize) -> Self {
        let pi: Vec<Vertex> = (0..n as Vertex).collect();
        VertexOrdering { pos: pi.clone(), pi }
    }

    pub fn from_permutation(pi: Vec<Vertex>) -> Result<Self, DfsError> {
        let n = pi.len();
        let mut pos = vec![u32::MAX; n];
        for (i, &v) in pi.iter().enumerate() {
            if v as usize >= n || pos[v as usize] != u32::MAX {
                return Err(DfsError::InvalidOrdering(n));
            }
            pos[v as usize] = i as u32;
        }
        Ok(VertexOrdering { pi, pos })
    }

    /// Uniformly random ordering, deterministic per seed.
    pub fn shuffled(n: usize, seed: u64) -> Self {
        let mut pi: Vec<Vertex> = (0..n as Vertex).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        pi.shuffle(&mut rng);
        Self::from_permutation(pi).expect("a shuffle is a permutation")
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// Vertex at position `i`.
    #[inline]
    pub fn at(&self, i: usize) -> Vertex {
        self.pi[i]
    }

    /// Position of `v`.
    #[inline]
    pub fn pos(&self, v: Vertex) -> u32 {
        self.pos[v as usize]
    }

    pub fn as_slice(&self) -> &[Vertex] {
        &self.pi
    }

    pub(crate) fn positions(&self) -> &[u32] {
        &self.pos
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Place {
    T,
    U,
    S1,
    S2,
}

/// What a round did.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepTag {
    /// Empty stack: the first unvisited vertex was pushed.
    Seed,
    /// A candidate with no other stack neighbour was pushed.
    Push,
    /// A candidate adjacent to a lower stack vertex went to `S2`.
    Discard,
    /// The top found no candidate and went to `S1`.
    Retire,
}

/// The vertex a round moved, and the stack vertex that triggered a discard.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RoundEvent {
    pub round: u64,
    pub step: StepTag,
    pub vertex: Vertex,
    pub blocker: Option<Vertex>,
}

/// Counts of unvisited vertices per position, with order statistics.
#[derive(Debug, Clone)]
struct Fenwick {
    tree: Vec<u32>,
}

impl Fenwick {
    fn full(n: usize) -> Self {
        let mut tree = vec![0u32; n + 1];
        for i in 1..=n {
            tree[i] += 1;
            let j = i + (i & i.wrapping_neg());
            if j <= n {
                tree[j] += tree[i];
            }
        }
        Fenwick { tree }
    }

    fn remove(&mut self, pos: usize) {
        let mut i = pos + 1;
        while i < self.tree.len() {
            self.tree[i] -= 1;
            i += i & i.wrapping_neg();
        }
    }

    /// Members with position `< end`.
    fn prefix(&self, end: usize) -> u64 {
        let mut i = end;
        let mut s = 0u64;
        while i > 0 {
            s += self.tree[i] as u64;
            i &= i - 1;
        }
        s
    }

    /// Position of the `k`-th member (1-based).
    fn select(&self, mut k: u64) -> usize {
        let n = self.tree.len() - 1;
        let mut idx = 0usize;
        let mut step = n.checked_next_power_of_two().unwrap_or(0).max(1);
        while step > 0 {
            let next = idx + step;
            if next <= n && (self.tree[next] as u64) < k {
                idx = next;
                k -= self.tree[next] as u64;
            }
            step >>= 1;
        }
        idx
    }
}

/// `G'` neighbours of each vertex as positions, sorted, with a scan cursor.
#[derive(Debug, Clone)]
struct FixedCursor {
    nbr_pos: Vec<Vec<u32>>,
    cursor: Vec<u32>,
}

/// Four-set partition `(U, T, S1, S2)` plus scan positions.
#[derive(Debug, Clone)]
pub struct DfsState {
    order: VertexOrdering,
    place: Vec<Place>,
    stack: Vec<Vertex>,
    unvisited: Fenwick,
    t_len: usize,
    s1_len: usize,
    s2_len: usize,
    scan_pos: Vec<u32>,
    round: u64,
    prev_explored: usize,
    last: Option<RoundEvent>,
    started: bool,
    fixed: Option<FixedCursor>,
    scratch: Vec<u32>,
}

impl DfsState {
    /// `U = S1 = S2 = ∅`, `T = V`.
    pub fn new(order: VertexOrdering) -> Self {
        let n = order.len();
        DfsState {
            place: vec![Place::T; n],
            stack: Vec::new(),
            unvisited: Fenwick::full(n),
            t_len: n,
            s1_len: 0,
            s2_len: 0,
            scan_pos: vec![0; n],
            round: 0,
            prev_explored: 0,
            last: None,
            started: false,
            fixed: None,
            scratch: Vec::new(),
            order,
        }
    }

    pub fn n(&self) -> usize {
        self.place.len()
    }

    pub fn order(&self) -> &VertexOrdering {
        &self.order
    }

    /// Stack contents, bottom to top.
    pub fn stack(&self) -> &[Vertex] {
        &self.stack
    }

    pub fn place(&self, v: Vertex) -> Place {
        self.place[v as usize]
    }

    pub fn members(&self, which: Place) -> impl Iterator<Item = Vertex> + '_ {
        self.place
            .iter()
            .enumerate()
            .filter(move |(_, &p)| p == which)
            .map(|(v, _)| v as Vertex)
    }

    pub fn u_len(&self) -> usize {
        self.stack.len()
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn s1_len(&self) -> usize {
        self.s1_len
    }

    pub fn s2_len(&self) -> usize {
        self.s2_len
    }

    /// `|U ∪ S1 ∪ S2|`.
    pub fn explored(&self) -> usize {
        self.n() - self.t_len
    }

    /// `|U ∪ S1 ∪ S2|` before the latest round.
    pub fn explored_before_last_round(&self) -> usize {
        self.prev_explored
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn last_event(&self) -> Option<RoundEvent> {
        self.last
    }

    /// Position up to which `v` has scanned `T`.
    pub fn scan_position(&self, v: Vertex) -> u32 {
        self.scan_pos[v as usize]
    }

    pub fn is_terminal(&self) -> bool {
        self.stack.is_empty() && self.t_len == 0
    }

    fn take_from_t(&mut self, v: Vertex, src: &mut QuerySource) {
        debug_assert_eq!(self.place[v as usize], Place::T);
        self.unvisited.remove(self.order.pos(v) as usize);
        self.t_len -= 1;
        src.note_left_t(v, self.round);
    }

    fn push(&mut self, v: Vertex, src: &mut QuerySource) {
        self.place[v as usize] = Place::U;
        self.stack.push(v);
        src.note_pushed(v, self.round);
    }

    fn start(&mut self, src: &mut QuerySource) -> Result<(), DfsError> {
        src.begin_run(self.order.positions())?;
        if let Some((gp, _)) = src.fixed_graphs() {
            let nbr_pos = (0..self.n() as Vertex)
                .map(|v| {
                    let mut ps: Vec<u32> = gp.neighbours(v).iter().map(|&w| self.order.pos(w)).collect();
                    ps.sort_unstable();
                    ps
                })
                .collect();
            self.fixed = Some(FixedCursor {
                nbr_pos,
                cursor: vec![0; self.n()],
            });
        }
        self.started = true;
        Ok(())
    }

    /// First unvisited `G'`-neighbour of `u` at position `>= from`.
    fn next_candidate(&mut self, u: Vertex, from: u32, src: &mut QuerySource) -> Option<u32> {
        match &mut self.fixed {
            Some(fc) => {
                let list = &fc.nbr_pos[u as usize];
                let cur = &mut fc.cursor[u as usize];
                while let Some(&q) = list.get(*cur as usize) {
                    if q >= from && self.place[self.order.at(q as usize) as usize] == Place::T {
                        return Some(q);
                    }
                    *cur += 1;
                }
                None
            }
            None => {
                let before = self.unvisited.prefix(from as usize);
                let available = self.t_len as u64 - before;
                src.draw_first_positive(available)
                    .map(|g| self.unvisited.select(before + g + 1) as u32)
            }
        }
    }

    /// Scans `U \ {u}` for a neighbour of `t` in `G`; returns the hit, if any.
    fn stack_neighbour(&mut self, t: Vertex, u: Vertex, src: &mut QuerySource) -> Option<Vertex> {
        let pt = self.order.pos(t);
        let below = &self.stack[..self.stack.len() - 1];
        // a lower vertex w already asked about t iff its scan went past t
        let (hit_pos, fresh) = match src.fixed_graphs() {
            Some((_, g)) => {
                let hit = g
                    .neighbours(t)
                    .iter()
                    .filter(|&&w| w != u && self.place[w as usize] == Place::U)
                    .map(|&w| self.order.pos(w))
                    .min();
                let cutoff = hit.unwrap_or(u32::MAX);
                let fresh = below
                    .iter()
                    .filter(|&&w| self.order.pos(w) <= cutoff && self.scan_pos[w as usize] <= pt)
                    .count() as u64;
                (hit, fresh)
            }
            None => {
                self.scratch.clear();
                self.scratch.extend(
                    below
                        .iter()
                        .filter(|&&w| self.scan_pos[w as usize] <= pt)
                        .map(|&w| self.order.pos(w)),
                );
                let available = self.scratch.len() as u64;
                match src.draw_first_positive(available) {
                    Some(g) => {
                        let (_, &mut q, _) = self.scratch.select_nth_unstable(g as usize);
                        (Some(q), g + 1)
                    }
                    None => (None, available),
                }
            }
        };
        src.log_stack_scan(t, self.round, u, hit_pos.unwrap_or(u32::MAX), fresh);
        hit_pos.map(|q| self.order.at(q as usize))
    }

    /// Runs one round and reports what it did.
    pub fn round_step(&mut self, src: &mut QuerySource) -> Result<StepTag, DfsError> {
        if self.is_terminal() {
            return Err(DfsError::Terminal);
        }
        if !self.started {
            self.start(src)?;
        }
        self.round += 1;
        self.prev_explored = self.explored();
        let round = self.round;

        let Some(&u) = self.stack.last() else {
            let v = self.order.at(self.unvisited.select(1));
            self.take_from_t(v, src);
            self.push(v, src);
            self.last = Some(RoundEvent { round, step: StepTag::Seed, vertex: v, blocker: None });
            return Ok(StepTag::Seed);
        };

        let from = self.scan_pos[u as usize];
        let found = self.next_candidate(u, from, src);
        let n = self.n();
        let to = found.unwrap_or(n as u32 - 1);
        let queried = if from as usize >= n {
            0
        } else {
            self.unvisited.prefix(to as usize + 1) - self.unvisited.prefix(from as usize)
        };
        src.log_burst(u, round, from, to, queried);

        let Some(q) = found else {
            self.scan_pos[u as usize] = n as u32;
            self.stack.pop();
            self.place[u as usize] = Place::S1;
            self.s1_len += 1;
            src.note_popped(u, round);
            self.last = Some(RoundEvent { round, step: StepTag::Retire, vertex: u, blocker: None });
            return Ok(StepTag::Retire);
        };

        self.scan_pos[u as usize] = q + 1;
        let t = self.order.at(q as usize);
        if src.is_generative() {
            src.expose(u, t);
        }
        self.take_from_t(t, src);
        match self.stack_neighbour(t, u, src) {
            Some(w) => {
                if src.is_generative() {
                    src.expose(t, w);
                }
                self.place[t as usize] = Place::S2;
                self.s2_len += 1;
                self.last = Some(RoundEvent { round, step: StepTag::Discard, vertex: t, blocker: Some(w) });
                Ok(StepTag::Discard)
            }
            None => {
                self.push(t, src);
                self.last = Some(RoundEvent { round, step: StepTag::Push, vertex: t, blocker: None });
                Ok(StepTag::Push)
            }
        }
    }
}

/// Initial state for an ordering.
pub fn dfs_init(order: VertexOrdering) -> DfsState {
    DfsState::new(order)
}

/// One round of the search.
pub fn dfs_round(state: &mut DfsState, src: &mut QuerySource) -> Result<StepTag, DfsError> {
    state.round_step(src)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Exhausted,
    S1Hit,
    S2Hit,
    PathHit,
    QueryBudget,
}

/// When to stop early. Every field is optional; `StopRule::default()` never
/// stops before exhaustion.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct StopRule {
    /// Stop once `|S1|` reaches this.
    pub s1: Option<usize>,
    /// Stop once `|S2|` reaches this.
    pub s2: Option<usize>,
    /// Stop once the stack holds this many vertices.
    pub stack_vertices: Option<usize>,
    /// Stop once this many distinct pairs were answered.
    pub query_budget: Option<u64>,
}

impl StopRule {
    pub fn never() -> Self {
        Self::default()
    }

    pub fn check(&self, state: &DfsState, src: &QuerySource) -> Option<StopReason> {
        if self.stack_vertices.is_some_and(|k| state.u_len() >= k) {
            Some(StopReason::PathHit)
        } else if self.s1.is_some_and(|k| state.s1_len() >= k) {
            Some(StopReason::S1Hit)
        } else if self.s2.is_some_and(|k| state.s2_len() >= k) {
            Some(StopReason::S2Hit)
        } else if self.query_budget.is_some_and(|b| src.counters().new_queries >= b) {
            Some(StopReason::QueryBudget)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep a trace entry every this many rounds.
    pub trace_every: Option<u64>,
    /// Expose all remaining pairs after natural termination (generative mode).
    pub finalize: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            trace_every: None,
            finalize: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub round: u64,
    pub step: StepTag,
    pub vertex: Vertex,
    pub u: usize,
    pub t: usize,
    pub s1: usize,
    pub s2: usize,
    pub ut_queries: u64,
    pub new_queries: u64,
}

/// Outcome of a search run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RunRecord {
    pub n: usize,
    pub rounds: u64,
    /// Peak stack size.
    pub max_u: usize,
    /// Stack contents when the peak was first reached.
    pub best_path: Vec<Vertex>,
    /// Edges of `best_path`, i.e. `max_u - 1` (0 for an empty run).
    pub path_length: usize,
    /// Stack contents when the run stopped.
    pub final_stack: Vec<Vertex>,
    pub s1_final: usize,
    pub s2_final: usize,
    pub t_final: usize,
    pub ut_queries: u64,
    pub new_queries: u64,
    pub ut_queries_at_peak: u64,
    pub stop_reason: StopReason,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceEntry>,
}

/// Runs rounds until the search is exhausted or `stop` fires, calling
/// `observe` after every round.
pub fn dfs_run_observed(
    order: VertexOrdering,
    src: &mut QuerySource,
    stop: StopRule,
    opts: RunOptions,
    mut observe: impl FnMut(&DfsState, &QuerySource),
) -> Result<(RunRecord, DfsState), DfsError> {
    let mut state = DfsState::new(order);
    let mut max_u = 0;
    let mut best_path = Vec::new();
    let mut ut_at_peak = 0;
    let mut trace = Vec::new();

    let reason = loop {
        if let Some(r) = stop.check(&state, src) {
            break r;
        }
        if state.is_terminal() {
            break StopReason::Exhausted;
        }
        let step = state.round_step(src)?;
        if state.u_len() > max_u {
            max_u = state.u_len();
            best_path.clone_from(&state.stack);
            ut_at_peak = src.counters().ut_queries;
        }
        if let Some(every) = opts.trace_every {
            if every > 0 && state.round % every == 0 {
                let c = src.counters();
                trace.push(TraceEntry {
                    round: state.round,
                    step,
                    vertex: state.last.map_or(0, |e| e.vertex),
                    u: state.u_len(),
                    t: state.t_len(),
                    s1: state.s1_len(),
                    s2: state.s2_len(),
                    ut_queries: c.ut_queries,
                    new_queries: c.new_queries,
                });
            }
        }
        observe(&state, src);
    };

    let counters = src.counters();
    let record = RunRecord {
        n: state.n(),
        rounds: state.round,
        max_u,
        path_length: max_u.saturating_sub(1),
        best_path,
        final_stack: state.stack.clone(),
        s1_final: state.s1_len,
        s2_final: state.s2_len,
        t_final: state.t_len,
        ut_queries: counters.ut_queries,
        new_queries: counters.new_queries,
        ut_queries_at_peak: ut_at_peak,
        stop_reason: reason,
        trace,
    };
    if reason == StopReason::Exhausted && opts.finalize && src.is_generative() {
        src.finalize();
    }
    Ok((record, state))
}

/// Runs the search to exhaustion or until `stop` fires.
pub fn dfs_run(
    order: VertexOrdering,
    src: &mut QuerySource,
    stop: StopRule,
    opts: RunOptions,
) -> Result<RunRecord, DfsError> {
    dfs_run_observed(order, src, stop, opts, |_, _| {}).map(|(r, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn fixed(g: &Graph) -> QuerySource {
        QuerySource::fixed(g.clone(), g.clone()).unwrap()
    }

    #[test]
    fn initial_partition() {
        let s = dfs_init(VertexOrdering::identity(3));
        assert_eq!(s.t_len(), 3);
        assert_eq!(s.u_len() + s.s1_len() + s.s2_len(), 0);
        assert!(!s.is_terminal());
        assert!(dfs_init(VertexOrdering::identity(0)).is_terminal());
    }

    #[test]
    fn single_vertex() {
        let g = Graph::empty(1);
        let mut src = fixed(&g);
        let mut s = dfs_init(VertexOrdering::identity(1));
        assert_eq!(dfs_round(&mut s, &mut src), Ok(StepTag::Seed));
        assert_eq!(dfs_round(&mut s, &mut src), Ok(StepTag::Retire));
        assert!(s.is_terminal());
        assert_eq!(dfs_round(&mut s, &mut src), Err(DfsError::Terminal));
    }

    #[test]
    fn fenwick_select_and_prefix() {
        let mut f = Fenwick::full(10);
        f.remove(0);
        f.remove(4);
        f.remove(9);
        assert_eq!(f.prefix(5), 3);
        assert_eq!(f.select(1), 1);
        assert_eq!(f.select(4), 5);
        assert_eq!(f.select(7), 8);
    }

    #[test]
    fn ordering_validation() {
        assert!(VertexOrdering::from_permutation(vec![0, 0, 1]).is_err());
        assert!(VertexOrdering::from_permutation(vec![0, 3, 1]).is_err());
        let o = VertexOrdering::from_permutation(vec![2, 0, 1]).unwrap();
        assert_eq!(o.pos(2), 0);
        assert_eq!(o.at(2), 1);
        let s = VertexOrdering::shuffled(50, 4);
        assert_eq!(s, VertexOrdering::shuffled(50, 4));
        assert_ne!(s, VertexOrdering::identity(50));
    }

    #[test]
    fn used_source_is_rejected() {
        let g = Graph::complete(3);
        let mut src = fixed(&g);
        src.query_e(0, 1);
        let r = dfs_run(VertexOrdering::identity(3), &mut src, StopRule::never(), RunOptions::default());
        assert_eq!(r, Err(DfsError::Source(SourceError::NotFresh)));
    }
}
