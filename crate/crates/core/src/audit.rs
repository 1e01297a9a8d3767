//! Checks of the four structural properties of the search at a given round.
//!
//! * (A) every `S1 × T` pair was asked and is a non-edge of `G'`;
//! * (B) `|U ∪ S1 ∪ S2|` never shrinks, and grows by one whenever a vertex
//!   leaves `T`;
//! * (C) `G[U ∪ S1 ∪ S2]` has at least `2|S2|` edges;
//! * (D) the stack is a `G'`-path induced in `G`.
//!
//! In generative mode the graph is the one exposed so far, and the run also
//! checks `|S2| ≤ excess(exposed graph)`.

use serde::Serialize;

use crate::dfs::{DfsState, Place, StepTag};
use crate::graph::{is_path_in_gprime_induced_in_g, path_pairs_hold, Vertex};
use crate::source::QuerySource;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AuditReport {
    pub round: u64,
    pub partition: bool,
    pub a: bool,
    pub b: bool,
    pub c: bool,
    pub d: bool,
    /// `None` in fixed mode.
    pub s2_within_excess: Option<bool>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.partition && self.a && self.b && self.c && self.d && self.s2_within_excess != Some(false)
    }
}

fn partition_ok(state: &DfsState) -> bool {
    let n = state.n();
    let mut counts = [0usize; 4];
    for v in 0..n as Vertex {
        counts[state.place(v) as usize] += 1;
    }
    let on_stack_ok = state.stack().iter().all(|&v| state.place(v) == Place::U);
    counts[Place::T as usize] == state.t_len()
        && counts[Place::U as usize] == state.u_len()
        && counts[Place::S1 as usize] == state.s1_len()
        && counts[Place::S2 as usize] == state.s2_len()
        && on_stack_ok
}

fn retired_pairs_ok(src: &QuerySource, s: Vertex, t_members: &[Vertex]) -> bool {
    t_members
        .iter()
        .all(|&t| matches!(src.recorded(s, t), Some(a) if !a.in_eprime))
}

fn growth_ok(state: &DfsState) -> bool {
    let before = state.explored_before_last_round();
    let now = state.explored();
    match state.last_event().map(|e| e.step) {
        None => now == 0,
        Some(StepTag::Retire) => now == before,
        Some(_) => now == before + 1,
    }
}

fn explored_edges(state: &DfsState, src: &QuerySource) -> usize {
    let explored = |v: Vertex| state.place(v) != Place::T;
    match src.fixed_graphs() {
        Some((_, g)) => g.edges().filter(|&(a, b)| explored(a) && explored(b)).count(),
        None => src
            .exposed_edges()
            .into_iter()
            .filter(|&(a, b)| explored(a) && explored(b))
            .count(),
    }
}

/// Stack pairs checked against the ledger: consecutive pairs answered as
/// `G'`-edges, all others answered as `G`-non-edges.
fn stack_ok(stack: &[Vertex], src: &QuerySource) -> bool {
    let ledger_ok = path_pairs_hold(
        stack,
        |a, b| src.recorded(a, b).is_some_and(|x| x.in_eprime),
        |a, b| src.recorded(a, b).is_none_or(|x| x.in_e),
    );
    let graphs_ok = match src.fixed_graphs() {
        Some((gp, g)) => is_path_in_gprime_induced_in_g(gp, g, stack).unwrap_or(false),
        None => true,
    };
    ledger_ok && graphs_ok
}

/// Full audit of one state. Cost is `O(|S1|·|T| + |U|² + n + m)`.
pub fn audit_invariants(state: &DfsState, src: &QuerySource) -> AuditReport {
    let t_members: Vec<Vertex> = state.members(Place::T).collect();
    let a = state
        .members(Place::S1)
        .all(|s| retired_pairs_ok(src, s, &t_members));
    AuditReport {
        round: state.round(),
        partition: partition_ok(state),
        a,
        b: growth_ok(state),
        c: explored_edges(state, src) >= 2 * state.s2_len(),
        d: stack_ok(state.stack(), src),
        s2_within_excess: src.exposed_excess().map(|x| state.s2_len() <= x),
    }
}

/// Per-round auditor for long runs.
///
/// Property (A) is checked in full while `|S1|·|T|` is small and otherwise
/// only for the vertex retired in the latest round: `T` only shrinks and
/// recorded answers never change, so earlier retirements stay covered.
/// Property (D) likewise checks the whole stack while it is short and
/// otherwise the newly pushed vertex against the rest, after confirming the
/// stack below it is unchanged.
#[derive(Debug, Clone)]
pub struct Auditor {
    pub full_pair_limit: usize,
    pub full_stack_limit: usize,
    prev_stack: Vec<Vertex>,
    pub rounds_checked: u64,
    pub failures: Vec<AuditReport>,
}

impl Default for Auditor {
    fn default() -> Self {
        Auditor {
            full_pair_limit: 4096,
            full_stack_limit: 48,
            prev_stack: Vec::new(),
            rounds_checked: 0,
            failures: Vec::new(),
        }
    }
}

impl Auditor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn check(&mut self, state: &DfsState, src: &QuerySource) -> AuditReport {
        let t_members: Vec<Vertex> = state.members(Place::T).collect();
        let a = if state.s1_len() * t_members.len() <= self.full_pair_limit {
            state
                .members(Place::S1)
                .all(|s| retired_pairs_ok(src, s, &t_members))
        } else {
            match state.last_event() {
                Some(e) if e.step == StepTag::Retire => retired_pairs_ok(src, e.vertex, &t_members),
                _ => true,
            }
        };

        let stack = state.stack();
        let d = if stack.len() <= self.full_stack_limit {
            stack_ok(stack, src)
        } else {
            let prev = &self.prev_stack;
            if stack.len() == prev.len() + 1 && stack[..prev.len()] == prev[..] {
                let top = stack[stack.len() - 1];
                let below = &stack[..stack.len() - 1];
                let joined = src
                    .recorded(below[below.len() - 1], top)
                    .is_some_and(|x| x.in_eprime);
                let induced = below[..below.len() - 1]
                    .iter()
                    .all(|&w| src.recorded(w, top).is_some_and(|x| !x.in_e));
                joined && induced && !below.contains(&top)
            } else {
                stack.len() + 1 == prev.len() && stack[..] == prev[..stack.len()] || stack[..] == prev[..]
            }
        };
        self.prev_stack.clear();
        self.prev_stack.extend_from_slice(stack);

        let report = AuditReport {
            round: state.round(),
            partition: partition_ok(state),
            a,
            b: growth_ok(state),
            c: explored_edges(state, src) >= 2 * state.s2_len(),
            d,
            s2_within_excess: src.exposed_excess().map(|x| state.s2_len() <= x),
        };
        self.rounds_checked += 1;
        if !report.passed() {
            self.failures.push(report.clone());
        }
        report
    }
}
