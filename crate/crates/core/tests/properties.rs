mod common;

use common::{brute_max_edges, induced_path_order, naive_properties};
use induced_paths::bounds::{cut_bound, ln_rational, sparse_sets_bound, sparse_sets_total_rational, Alpha, CutParams, SparseSetsParams};
use induced_paths::guarantees::{check_local_density, CheckOutcome};
use induced_paths::oracle::max_edges_bounded_set;
use induced_paths::{
    dfs_init, dfs_round, dfs_run, excess, is_path_in_gprime_induced_in_g, longest_gprime_path_induced_in_g_exact,
    longest_induced_path_exact, prune_min_degree, Graph, Place, QuerySource, RunOptions, StepTag, StopRule, Vertex,
    VertexOrdering, VertexSet,
};
use proptest::prelude::*;
use proptest::sample::subsequence;

fn graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (0..=max_n).prop_flat_map(|n| {
        let pairs = n * n.saturating_sub(1) / 2;
        (Just(n), prop::collection::vec(any::<bool>(), pairs))
    })
    .prop_map(|(n, bits)| {
        let mut edges = Vec::new();
        let mut k = 0;
        for a in 0..n as Vertex {
            for b in a + 1..n as Vertex {
                if bits[k] {
                    edges.push((a, b));
                }
                k += 1;
            }
        }
        Graph::from_edge_list(n, &edges).unwrap()
    })
}

/// A host graph, a subgraph of it, and an ordering of its vertices.
fn instance(max_n: usize) -> impl Strategy<Value = (Graph, Graph, Vec<Vertex>)> {
    graph(max_n).prop_flat_map(|g| {
        let m = g.m();
        let n = g.n();
        let perm = Just((0..n as Vertex).collect::<Vec<_>>()).prop_shuffle();
        (Just(g), prop::collection::vec(any::<bool>(), m), perm)
    })
    .prop_map(|(g, keep, perm)| {
        let edges: Vec<_> = g.edges().zip(&keep).filter(|(_, &k)| k).map(|(e, _)| e).collect();
        let gp = Graph::from_edge_list(g.n(), &edges).unwrap();
        (gp, g, perm)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn search_properties_hold_every_round((gp, g, perm) in instance(16)) {
        let mut src = QuerySource::fixed(gp.clone(), g.clone()).unwrap();
        let mut state = dfs_init(VertexOrdering::from_permutation(perm).unwrap());
        while !state.is_terminal() {
            let before = state.explored();
            let step = dfs_round(&mut state, &mut src).unwrap();
            let left_t = step != StepTag::Retire;
            if let Err(e) = naive_properties(&state, &gp, &g, &src, before, left_t) {
                prop_assert!(false, "round {}: {}", state.round(), e);
            }
        }
        prop_assert_eq!(state.members(Place::T).count(), 0);
    }

    #[test]
    fn best_path_is_certified_and_bounded((gp, g, perm) in instance(14)) {
        let mut src = QuerySource::fixed(gp.clone(), g.clone()).unwrap();
        let order = VertexOrdering::from_permutation(perm).unwrap();
        let rec = dfs_run(order, &mut src, StopRule::never(), RunOptions::default()).unwrap();
        prop_assert!(is_path_in_gprime_induced_in_g(&gp, &g, &rec.best_path).unwrap());
        let best = longest_gprime_path_induced_in_g_exact(&gp, &g).unwrap().length;
        prop_assert!(rec.path_length <= best);
    }

    #[test]
    fn excess_relabel_and_union((g, h) in (graph(12), graph(12)), seed in any::<u64>()) {
        let perm = VertexOrdering::shuffled(g.n(), seed);
        prop_assert_eq!(excess(&g.relabel(perm.as_slice())), excess(&g));
        prop_assert_eq!(excess(&g.disjoint_union(&h)), excess(&g) + excess(&h));
    }

    #[test]
    fn pruning_is_order_independent(g in graph(14), d in 0usize..5, seed in any::<u64>()) {
        let pruned = prune_min_degree(&g, d);
        // peel in a random order until nothing of degree ≤ d remains
        let order = VertexOrdering::shuffled(g.n(), seed);
        let mut alive = vec![true; g.n()];
        loop {
            let deg = |v: Vertex| g.neighbours(v).iter().filter(|&&w| alive[w as usize]).count();
            let victim = order.as_slice().iter().copied().find(|&v| alive[v as usize] && deg(v) <= d);
            match victim {
                Some(v) => alive[v as usize] = false,
                None => break,
            }
        }
        let expected: Vec<Vertex> = (0..g.n() as Vertex).filter(|&v| alive[v as usize]).collect();
        prop_assert_eq!(&pruned.kept, &expected);
        let again = prune_min_degree(&pruned.graph, d);
        prop_assert_eq!(again.graph.n(), pruned.graph.n());
    }

    #[test]
    fn induced_paths_have_one_fewer_edge(g in graph(10), picks in subsequence((0..10u32).collect::<Vec<_>>(), 0..=10)) {
        let seq: Vec<Vertex> = picks.into_iter().filter(|&v| (v as usize) < g.n()).collect();
        if is_path_in_gprime_induced_in_g(&g, &g, &seq).unwrap() {
            let set = VertexSet::from_vertices(g.n(), seq.iter().copied());
            prop_assert_eq!(g.edges_within(&set), seq.len().saturating_sub(1));
            if !seq.is_empty() {
                prop_assert!(induced_path_order(&g, &set.to_vec()).is_some());
            }
        }
    }

    #[test]
    fn density_checker_matches_dense_set_oracle(g in graph(11), cap in 1usize..8, bound in 0usize..10) {
        let best = max_edges_bounded_set(&g, cap - 1).unwrap().best_edges;
        prop_assert_eq!(best, brute_max_edges(&g, cap - 1));
        let passes = check_local_density(&g, cap, bound) == CheckOutcome::Pass;
        prop_assert_eq!(passes, best < bound);
    }

    #[test]
    fn oracle_is_relabelling_invariant((gp, g, perm) in instance(12)) {
        let a = longest_induced_path_exact(&g).unwrap();
        let b = longest_induced_path_exact(&g.relabel(&perm)).unwrap();
        prop_assert_eq!(a.length, b.length);
        let a = longest_gprime_path_induced_in_g_exact(&gp, &g).unwrap();
        let b = longest_gprime_path_induced_in_g_exact(&gp.relabel(&perm), &g.relabel(&perm)).unwrap();
        prop_assert_eq!(a.length, b.length);
    }

    #[test]
    fn generative_excess_is_tracked(n in 1usize..120, c in 0.5f64..3.0, seed in any::<u64>()) {
        let p = (c / n as f64).min(1.0);
        let mut src = QuerySource::generative(n, p, seed).unwrap();
        let mut state = dfs_init(VertexOrdering::identity(n));
        let mut last_ut = 0;
        while !state.is_terminal() {
            dfs_round(&mut state, &mut src).unwrap();
            let exposed = src.exposed_graph();
            prop_assert_eq!(src.exposed_excess(), Some(excess(&exposed)));
            prop_assert!(state.s2_len() <= excess(&exposed));
            let ut = src.counters().ut_queries;
            prop_assert!(ut >= last_ut);
            last_ut = ut;
        }
        src.finalize();
        prop_assert_eq!(src.counters().new_queries, (n * (n - 1) / 2) as u64);
    }

    #[test]
    fn sparse_sets_monotone_in_p_and_t(n in 10u32..40, t in 2u64..10, p in 0.01f64..0.5, dp in 0.0f64..0.4, num in 8u64..20) {
        let params = |p: f64, t: u64| SparseSetsParams {
            vertices: n as f64,
            scale_n: n as f64,
            p,
            alpha: Alpha::ratio(num, 7),
            max_size: t.min(n as u64),
            split: (n as f64).sqrt(),
        };
        let total = |p: f64, t: u64| sparse_sets_bound(&params(p, t)).unwrap().ln_total_exact.unwrap();
        let q = (p + dp).min(1.0);
        prop_assert!(total(p, t) <= total(q, t) + 1e-12);
        prop_assert!(total(p, t) <= total(p, t + 1) + 1e-12);
        let r = sparse_sets_bound(&params(p, t)).unwrap();
        prop_assert!(r.termwise_ok);
        let exact = sparse_sets_total_rational(&params(p, t)).unwrap();
        let ln_exact = ln_rational(&exact);
        if ln_exact.is_finite() {
            prop_assert!((r.ln_total_exact.unwrap() - ln_exact).exp_m1().abs() < 1e-9);
        }
    }

    #[test]
    fn cut_bound_monotone_in_p(n in 10u32..200, s in 1u32..5, t in 1u32..8, m in 1u32..10, p in 0.001f64..0.5, dp in 0.0f64..0.5) {
        let params = |p: f64| CutParams {
            vertices: n as f64,
            s: s as f64,
            t: t as f64,
            edge_threshold: (m.min(s * t)) as f64,
            p,
            exponent_unit: 1.0,
        };
        let lo = cut_bound(&params(p)).unwrap().ln_bound;
        let hi = cut_bound(&params((p + dp).min(1.0))).unwrap().ln_bound;
        prop_assert!(lo <= hi + 1e-12);
    }
}
