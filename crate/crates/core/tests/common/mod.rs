#![allow(dead_code)]

use induced_paths::{Graph, QueryContext, QuerySource, Vertex, VertexOrdering};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Straightforward version of the search: every round rescans `T` from the
/// front and asks every pair through the ledger API.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceRun {
    pub steps: Vec<&'static str>,
    pub max_u: usize,
    pub best_path: Vec<Vertex>,
    pub s1: Vec<Vertex>,
    pub s2: Vec<Vertex>,
    pub rounds: u64,
}

pub fn reference_dfs(order: &VertexOrdering, src: &mut QuerySource) -> ReferenceRun {
    let n = order.len();
    let mut in_t = vec![true; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<Vertex> = Vec::new();
    let mut out = ReferenceRun {
        steps: Vec::new(),
        max_u: 0,
        best_path: Vec::new(),
        s1: Vec::new(),
        s2: Vec::new(),
        rounds: 0,
    };
    loop {
        let t_left = in_t.iter().any(|&x| x);
        if stack.is_empty() && !t_left {
            break;
        }
        out.rounds += 1;
        if stack.is_empty() {
            let v = (0..n).map(|i| order.at(i)).find(|&v| in_t[v as usize]).unwrap();
            in_t[v as usize] = false;
            on_stack[v as usize] = true;
            stack.push(v);
            out.steps.push("seed");
        } else {
            let u = *stack.last().unwrap();
            let mut found = None;
            for i in 0..n {
                let t = order.at(i);
                if in_t[t as usize] && src.query_eprime(u, t, QueryContext::Step2) {
                    found = Some(t);
                    break;
                }
            }
            match found {
                Some(t) => {
                    in_t[t as usize] = false;
                    let mut blocked = false;
                    for i in 0..n {
                        let w = order.at(i);
                        if w != u && on_stack[w as usize] && src.query_e(t, w) {
                            blocked = true;
                            break;
                        }
                    }
                    if blocked {
                        out.s2.push(t);
                        out.steps.push("discard");
                    } else {
                        on_stack[t as usize] = true;
                        stack.push(t);
                        out.steps.push("push");
                    }
                }
                None => {
                    stack.pop();
                    on_stack[u as usize] = false;
                    out.s1.push(u);
                    out.steps.push("retire");
                }
            }
        }
        if stack.len() > out.max_u {
            out.max_u = stack.len();
            out.best_path = stack.clone();
        }
    }
    out.s1.sort_unstable();
    out.s2.sort_unstable();
    out
}

pub fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    for a in 0..n as Vertex {
        for b in a + 1..n as Vertex {
            if rng.gen_bool(p) {
                edges.push((a, b));
            }
        }
    }
    Graph::from_edge_list(n, &edges).unwrap()
}

/// Random subgraph keeping each edge with probability `keep`.
pub fn random_subgraph(g: &Graph, keep: f64, rng: &mut impl Rng) -> Graph {
    let edges: Vec<_> = g.edges().filter(|_| rng.gen_bool(keep)).collect();
    Graph::from_edge_list(g.n(), &edges).unwrap()
}

pub fn random_ordering(n: usize, rng: &mut impl Rng) -> VertexOrdering {
    use rand::seq::SliceRandom;
    let mut pi: Vec<Vertex> = (0..n as Vertex).collect();
    pi.shuffle(rng);
    VertexOrdering::from_permutation(pi).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Vertices of `mask` (bit `v` set for vertex `v`) in increasing order.
pub fn mask_vertices(mask: u64) -> Vec<Vertex> {
    (0..64).filter(|v| mask >> v & 1 == 1).collect()
}

/// If `G[S]` is a path, its vertices in path order.
pub fn induced_path_order(g: &Graph, set: &[Vertex]) -> Option<Vec<Vertex>> {
    let inside = |v: &Vertex| set.contains(v);
    let deg = |v: Vertex| g.neighbours(v).iter().filter(|w| inside(w)).count();
    let edges: usize = set.iter().map(|&v| deg(v)).sum::<usize>() / 2;
    if set.is_empty() || edges + 1 != set.len() || set.iter().any(|&v| deg(v) > 2) {
        return None;
    }
    let start = *set.iter().find(|&&v| deg(v) <= 1)?;
    let mut order = vec![start];
    let mut prev = None;
    let mut cur = start;
    while let Some(&next) = g
        .neighbours(cur)
        .iter()
        .find(|&&w| inside(&w) && Some(w) != prev)
    {
        prev = Some(cur);
        cur = next;
        order.push(cur);
    }
    (order.len() == set.len()).then_some(order)
}

/// Longest `G'`-path whose vertex set induces a path in `G`, by trying every
/// vertex subset. Returns the length in edges.
pub fn brute_longest_path(gp: &Graph, g: &Graph) -> usize {
    assert!(g.n() <= 20);
    let mut best = 0;
    for mask in 1u64..(1 << g.n()) {
        let k = mask.count_ones() as usize;
        if k <= best + 1 {
            continue;
        }
        if let Some(order) = induced_path_order(g, &mask_vertices(mask)) {
            if order.windows(2).all(|w| gp.has_edge(w[0], w[1])) {
                best = k - 1;
            }
        }
    }
    best
}

/// Largest edge count over vertex sets of size at most `cap`, by enumeration.
pub fn brute_max_edges(g: &Graph, cap: usize) -> usize {
    assert!(g.n() <= 20);
    (0u64..(1 << g.n()))
        .filter(|m| m.count_ones() as usize <= cap)
        .map(|m| {
            g.edges()
                .filter(|&(a, b)| m >> a & 1 == 1 && m >> b & 1 == 1)
                .count()
        })
        .max()
        .unwrap_or(0)
}

/// Recomputes the four structural properties of a search state directly
/// from the two graphs of a fixed source. `explored_before` is the size of
/// `U ∪ S1 ∪ S2` before the latest round and `left_t` whether that round
/// took a vertex out of `T`.
pub fn naive_properties(
    state: &induced_paths::DfsState,
    gp: &Graph,
    g: &Graph,
    src: &QuerySource,
    explored_before: usize,
    left_t: bool,
) -> Result<(), String> {
    use induced_paths::Place;
    let n = g.n() as Vertex;
    let of = |p: Place| (0..n).filter(|&v| state.place(v) == p).collect::<Vec<_>>();
    let (t, u, s1, s2) = (of(Place::T), of(Place::U), of(Place::S1), of(Place::S2));
    if t.len() + u.len() + s1.len() + s2.len() != g.n() {
        return Err("partition".into());
    }
    let mut stack_sorted = state.stack().to_vec();
    stack_sorted.sort_unstable();
    if stack_sorted != u {
        return Err("stack does not match U".into());
    }
    for &s in &s1 {
        for &x in &t {
            if gp.has_edge(s, x) || src.recorded(s, x).is_none() {
                return Err(format!("A: pair ({s}, {x})"));
            }
        }
    }
    let explored = u.len() + s1.len() + s2.len();
    if explored != explored_before + usize::from(left_t) {
        return Err("B".into());
    }
    let e = g
        .edges()
        .filter(|&(a, b)| state.place(a) != Place::T && state.place(b) != Place::T)
        .count();
    if e < 2 * s2.len() {
        return Err("C".into());
    }
    let st = state.stack();
    for i in 0..st.len() {
        for j in i + 1..st.len() {
            let ok = if j == i + 1 {
                gp.has_edge(st[i], st[j])
            } else {
                !g.has_edge(st[i], st[j])
            };
            if !ok {
                return Err(format!("D: stack positions {i}, {j}"));
            }
        }
    }
    Ok(())
}
