mod common;

use common::{random_graph, random_ordering, random_subgraph, reference_dfs, rng};
use induced_paths::{
    audit_invariants, dfs_init, dfs_round, dfs_run, dfs_run_observed, excess, Graph, Place, QuerySource,
    RunOptions, StepTag, StopReason, StopRule, Vertex, VertexOrdering,
};
use rand::Rng;

fn fixed(g: &Graph) -> QuerySource {
    QuerySource::fixed(g.clone(), g.clone()).unwrap()
}

fn members(state: &induced_paths::DfsState, p: Place) -> Vec<Vertex> {
    state.members(p).collect()
}

#[test]
fn triangle_trace() {
    let g = Graph::complete(3);
    let mut src = fixed(&g);
    let mut s = dfs_init(VertexOrdering::identity(3));
    let mut steps = Vec::new();
    while !s.is_terminal() {
        steps.push(dfs_round(&mut s, &mut src).unwrap());
        assert!(audit_invariants(&s, &src).passed());
    }
    use StepTag::*;
    assert_eq!(steps, vec![Seed, Push, Discard, Retire, Retire]);
    assert_eq!(members(&s, Place::S1), vec![0, 1]);
    assert_eq!(members(&s, Place::S2), vec![2]);

    let rec = dfs_run(VertexOrdering::identity(3), &mut fixed(&g), StopRule::never(), RunOptions::default()).unwrap();
    assert_eq!(rec.max_u, 2);
    assert_eq!(rec.best_path, vec![0, 1]);
    assert_eq!(rec.stop_reason, StopReason::Exhausted);
}

#[test]
fn four_cycle_trace() {
    let g = Graph::cycle(4);
    let mut src = fixed(&g);
    let mut s = dfs_init(VertexOrdering::identity(4));
    let mut steps = Vec::new();
    while !s.is_terminal() {
        steps.push(dfs_round(&mut s, &mut src).unwrap());
        if steps.len() == 4 {
            assert_eq!(s.stack(), &[0, 1, 2]);
            assert_eq!(members(&s, Place::S2), vec![3]);
        }
    }
    use StepTag::*;
    assert_eq!(steps, vec![Seed, Push, Push, Discard, Retire, Retire, Retire]);
    assert_eq!(members(&s, Place::S1), vec![0, 1, 2]);

    let rec = dfs_run(VertexOrdering::identity(4), &mut fixed(&g), StopRule::never(), RunOptions::default()).unwrap();
    assert_eq!(rec.max_u, 3);
    assert_eq!(rec.s2_final, 1);
}

#[test]
fn path_trace_and_early_stop() {
    let g = Graph::path(4);
    let rec = dfs_run(VertexOrdering::identity(4), &mut fixed(&g), StopRule::never(), RunOptions::default()).unwrap();
    assert_eq!(rec.max_u, 4);
    assert_eq!(rec.best_path, vec![0, 1, 2, 3]);
    assert_eq!(rec.path_length, 3);
    assert_eq!(rec.s2_final, 0);
    assert_eq!(rec.s1_final, 4);

    let stop = StopRule {
        stack_vertices: Some(3),
        ..StopRule::default()
    };
    let rec = dfs_run(VertexOrdering::identity(4), &mut fixed(&g), stop, RunOptions::default()).unwrap();
    assert_eq!(rec.stop_reason, StopReason::PathHit);
    assert_eq!(rec.path_length, 2);
    assert_eq!(rec.final_stack, vec![0, 1, 2]);
}

#[test]
fn exhaustion_covers_everything() {
    let mut r = rng(1);
    for _ in 0..50 {
        let n = r.gen_range(0..30);
        let g = random_graph(n, r.gen_range(0.0..0.6), &mut r);
        let (rec, state) = dfs_run_observed(
            random_ordering(n, &mut r),
            &mut fixed(&g),
            StopRule::never(),
            RunOptions::default(),
            |_, _| {},
        )
        .unwrap();
        assert!(state.is_terminal());
        assert_eq!(rec.s1_final + rec.s2_final, n);
        assert_eq!(rec.t_final, 0);
        assert_eq!(rec.path_length, rec.max_u.saturating_sub(1));
        // each vertex enters the stack or S2 once, and each stack vertex leaves once
        assert_eq!(rec.rounds as usize, n + rec.s1_final);
    }
}

#[test]
fn matches_reference_on_fixed_graphs() {
    let mut r = rng(7);
    for case in 0..300 {
        let n = r.gen_range(1..40);
        let g = random_graph(n, [0.05, 0.1, 0.3, 0.7][case % 4], &mut r);
        let gp = random_subgraph(&g, r.gen_range(0.3..=1.0), &mut r);
        let order = random_ordering(n, &mut r);

        let mut ref_src = QuerySource::fixed(gp.clone(), g.clone()).unwrap();
        let reference = reference_dfs(&order, &mut ref_src);

        let mut src = QuerySource::fixed(gp.clone(), g.clone()).unwrap();
        let opts = RunOptions { finalize: false, ..RunOptions::default() };
        let (rec, state) = dfs_run_observed(order.clone(), &mut src, StopRule::never(), opts, |_, _| {}).unwrap();

        assert_eq!(rec.max_u, reference.max_u, "case {case}");
        assert_eq!(rec.best_path, reference.best_path, "case {case}");
        assert_eq!(members(&state, Place::S1), reference.s1, "case {case}");
        assert_eq!(members(&state, Place::S2), reference.s2, "case {case}");
        assert_eq!(rec.rounds, reference.rounds);
        assert_eq!(src.counters(), ref_src.counters(), "case {case}");
        for a in 0..n as Vertex {
            for b in a + 1..n as Vertex {
                assert_eq!(src.recorded(a, b), ref_src.recorded(a, b), "case {case} pair ({a},{b})");
            }
        }
    }
}

#[test]
fn matches_reference_in_generative_mode() {
    let mut r = rng(8);
    for case in 0..200 {
        let n = r.gen_range(1..60);
        let p = [0.5 / n as f64, 1.5 / n as f64, 4.0 / n as f64, 0.3, 0.8][case % 5].min(1.0);
        let seed = r.gen();
        let order = random_ordering(n, &mut r);

        let mut ref_src = QuerySource::generative(n, p, seed).unwrap();
        let reference = reference_dfs(&order, &mut ref_src);

        let mut src = QuerySource::generative(n, p, seed).unwrap();
        let opts = RunOptions { finalize: false, ..RunOptions::default() };
        let (rec, state) = dfs_run_observed(order.clone(), &mut src, StopRule::never(), opts, |_, _| {}).unwrap();

        assert_eq!(rec.best_path, reference.best_path, "case {case}");
        assert_eq!(members(&state, Place::S1), reference.s1, "case {case}");
        assert_eq!(members(&state, Place::S2), reference.s2, "case {case}");
        assert_eq!(src.counters(), ref_src.counters(), "case {case}");
        assert_eq!(src.stream_index(), ref_src.stream_index(), "case {case}");
        assert_eq!(src.stream_index(), Some(src.counters().new_queries));
        assert_eq!(src.exposed_graph(), ref_src.exposed_graph());
        for a in 0..n as Vertex {
            for b in a + 1..n as Vertex {
                assert_eq!(src.recorded(a, b), ref_src.recorded(a, b), "case {case} pair ({a},{b})");
            }
        }
    }
}

#[test]
fn generative_runs_finalize_and_are_deterministic() {
    let run = |seed| {
        let mut src = QuerySource::generative(300, 1.2 / 300.0, seed).unwrap();
        let rec = dfs_run(VertexOrdering::identity(300), &mut src, StopRule::never(), RunOptions::default()).unwrap();
        (rec, src.exposed_graph(), src.counters())
    };
    let (a, ga, ca) = run(5);
    let (b, gb, _) = run(5);
    assert_eq!(a, b);
    assert_eq!(ga, gb);
    assert_eq!(ca.new_queries, 300 * 299 / 2);
    assert!(a.s2_final <= excess(&ga));
}

#[test]
fn fixed_runs_are_deterministic() {
    let mut r = rng(3);
    let g = random_graph(60, 0.1, &mut r);
    let order = random_ordering(60, &mut r);
    let opts = RunOptions { trace_every: Some(3), finalize: true };
    let a = dfs_run(order.clone(), &mut fixed(&g), StopRule::never(), opts).unwrap();
    let b = dfs_run(order, &mut fixed(&g), StopRule::never(), opts).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.trace.len() as u64, a.rounds / 3);
}

#[test]
fn stop_rules() {
    let g = Graph::complete(6);
    let rec = dfs_run(
        VertexOrdering::identity(6),
        &mut fixed(&g),
        StopRule { s2: Some(2), ..StopRule::default() },
        RunOptions::default(),
    )
    .unwrap();
    assert_eq!(rec.stop_reason, StopReason::S2Hit);
    assert_eq!(rec.s2_final, 2);

    let rec = dfs_run(
        VertexOrdering::identity(6),
        &mut fixed(&Graph::empty(6)),
        StopRule { s1: Some(4), ..StopRule::default() },
        RunOptions::default(),
    )
    .unwrap();
    assert_eq!(rec.stop_reason, StopReason::S1Hit);
    assert_eq!(rec.s1_final, 4);

    let mut src = QuerySource::generative(100, 0.01, 1).unwrap();
    let rec = dfs_run(
        VertexOrdering::identity(100),
        &mut src,
        StopRule { query_budget: Some(500), ..StopRule::default() },
        RunOptions::default(),
    )
    .unwrap();
    assert_eq!(rec.stop_reason, StopReason::QueryBudget);
    assert!(rec.new_queries >= 500);
    assert!(!src.is_finalized());
}
