//! Exhaustive ground truth for small graphs: longest induced paths (one- and
//! two-graph variants) and the densest set under a size cap.
//!
//! All searches work on `u32` adjacency masks.

use serde::Serialize;
use thiserror::Error;

use crate::graph::{Graph, GraphError, Vertex};

pub const INDUCED_PATH_CAP: usize = 30;
pub const TWO_GRAPH_PATH_CAP: usize = 25;
pub const DENSE_SET_CAP: usize = 25;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("exact search supports at most {cap} vertices, got {n}")]
    TooLarge { n: usize, cap: usize },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Longest path found by an exact search. `length` counts edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathWitness {
    pub length: usize,
    pub witness: Vec<Vertex>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DenseSet {
    pub best_edges: usize,
    pub witness: Vec<Vertex>,
}

fn masks(g: &Graph) -> Vec<u32> {
    (0..g.n() as Vertex)
        .map(|v| g.neighbours(v).iter().fold(0u32, |m, &w| m | 1 << w))
        .collect()
}

fn check_cap(n: usize, cap: usize) -> Result<(), OracleError> {
    if n > cap {
        Err(OracleError::TooLarge { n, cap })
    } else {
        Ok(())
    }
}

/// Longest induced path of `g`.
pub fn longest_induced_path_exact(g: &Graph) -> Result<PathWitness, OracleError> {
    check_cap(g.n(), INDUCED_PATH_CAP)?;
    let m = masks(g);
    Ok(PathSearch::new(&m, &m).run())
}

/// Longest path of `gp` whose vertex set induces exactly that path in `g`.
pub fn longest_gprime_path_induced_in_g_exact(gp: &Graph, g: &Graph) -> Result<PathWitness, OracleError> {
    gp.is_subgraph_of(g)?;
    check_cap(g.n(), TWO_GRAPH_PATH_CAP)?;
    Ok(PathSearch::new(&masks(gp), &masks(g)).run())
}

/// Branch and bound over paths rooted at their smallest vertex. The path is
/// grown at its right end first; once the search switches to the left end
/// it never returns to the right.
struct PathSearch<'a> {
    step: &'a [u32],
    closed: Vec<u32>,
    n: usize,
    best: Vec<Vertex>,
}

#[derive(Clone, Copy)]
struct Ends {
    path: u32,
    left: Vertex,
    right: Vertex,
    // union of closed host neighbourhoods of every path vertex except the
    // right (resp. left) end
    cover_but_right: u32,
    cover_but_left: u32,
    // union over interior vertices only
    cover_interior: u32,
}

impl<'a> PathSearch<'a> {
    fn new(step: &'a [u32], host: &'a [u32]) -> Self {
        let closed = host.iter().enumerate().map(|(v, &m)| m | 1 << v).collect();
        PathSearch {
            step,
            closed,
            n: host.len(),
            best: Vec::new(),
        }
    }

    fn run(mut self) -> PathWitness {
        let all = if self.n == 32 { u32::MAX } else { (1u32 << self.n) - 1 };
        for root in 0..self.n as Vertex {
            // vertices below the root may not appear
            let above = all & !((1u32 << root) | ((1u32 << root) - 1));
            if 1 + above.count_ones() as usize <= self.best.len() {
                break;
            }
            let ends = Ends {
                path: 1 << root,
                left: root,
                right: root,
                cover_but_right: 0,
                cover_but_left: 0,
                cover_interior: 0,
            };
            let mut seq = std::collections::VecDeque::from([root]);
            self.grow(ends, above, true, &mut seq);
        }
        let length = self.best.len().saturating_sub(1);
        PathWitness {
            length,
            witness: self.best,
        }
    }

    fn record(&mut self, seq: &std::collections::VecDeque<Vertex>) {
        if seq.len() > self.best.len() {
            self.best = seq.iter().copied().collect();
        }
    }

    fn grow(&mut self, e: Ends, allowed: u32, right_phase: bool, seq: &mut std::collections::VecDeque<Vertex>) {
        self.record(seq);
        let avail = allowed & !e.path & !e.cover_interior;
        if e.path.count_ones() as usize + avail.count_ones() as usize <= self.best.len() {
            return;
        }
        if right_phase {
            let mut cands = self.step[e.right as usize] & allowed & !e.path & !e.cover_but_right;
            while cands != 0 {
                let x = cands.trailing_zeros() as Vertex;
                cands &= cands - 1;
                let single = e.left == e.right;
                let next = Ends {
                    path: e.path | 1 << x,
                    left: e.left,
                    right: x,
                    cover_but_right: e.cover_but_right | self.closed[e.right as usize],
                    cover_but_left: if single {
                        self.closed[x as usize]
                    } else {
                        e.cover_but_left | self.closed[x as usize]
                    },
                    cover_interior: if single {
                        0
                    } else {
                        e.cover_interior | self.closed[e.right as usize]
                    },
                };
                seq.push_back(x);
                self.grow(next, allowed, true, seq);
                seq.pop_back();
            }
            if e.left != e.right {
                self.grow_left(e, allowed, seq);
            }
        } else {
            self.grow_left(e, allowed, seq);
        }
    }

    fn grow_left(&mut self, e: Ends, allowed: u32, seq: &mut std::collections::VecDeque<Vertex>) {
        let mut cands = self.step[e.left as usize] & allowed & !e.path & !e.cover_but_left;
        while cands != 0 {
            let x = cands.trailing_zeros() as Vertex;
            cands &= cands - 1;
            let next = Ends {
                path: e.path | 1 << x,
                left: x,
                right: e.right,
                cover_but_right: e.cover_but_right | self.closed[x as usize],
                cover_but_left: e.cover_but_left | self.closed[e.left as usize],
                cover_interior: e.cover_interior | self.closed[e.left as usize],
            };
            seq.push_front(x);
            self.grow(next, allowed, false, seq);
            seq.pop_front();
        }
    }
}

/// Largest number of edges spanned by a vertex set of size at most `size_cap`.
pub fn max_edges_bounded_set(g: &Graph, size_cap: usize) -> Result<DenseSet, OracleError> {
    let n = g.n();
    check_cap(n, DENSE_SET_CAP)?;
    let m = masks(g);
    let mut order: Vec<Vertex> = (0..n as Vertex).collect();
    order.sort_by_key(|&v| std::cmp::Reverse(m[v as usize].count_ones()));
    let mut search = DenseSearch {
        adj: &m,
        order,
        cap: size_cap.min(n),
        best_edges: 0,
        best_set: 0,
    };
    let rest = order_mask(&search.order);
    search.branch(0, 0, 0, rest);
    let witness = (0..n as Vertex).filter(|&v| search.best_set >> v & 1 == 1).collect();
    Ok(DenseSet {
        best_edges: search.best_edges,
        witness,
    })
}

fn order_mask(order: &[Vertex]) -> u32 {
    order.iter().fold(0, |m, &v| m | 1 << v)
}

struct DenseSearch<'a> {
    adj: &'a [u32],
    order: Vec<Vertex>,
    cap: usize,
    best_edges: usize,
    best_set: u32,
}

impl DenseSearch<'_> {
    /// `rest` holds the undecided vertices `order[idx..]`.
    fn branch(&mut self, idx: usize, set: u32, edges: usize, rest: u32) {
        if edges > self.best_edges || (edges == self.best_edges && set.count_ones() < self.best_set.count_ones()) {
            self.best_edges = edges;
            self.best_set = set;
        }
        let room = self.cap - set.count_ones() as usize;
        if room == 0 || idx == self.order.len() {
            return;
        }
        if edges + self.gain_bound(set, rest, room) <= self.best_edges {
            return;
        }
        let v = self.order[idx];
        let rest2 = rest & !(1 << v);
        let gain = (self.adj[v as usize] & set).count_ones() as usize;
        self.branch(idx + 1, set | 1 << v, edges + gain, rest2);
        self.branch(idx + 1, set, edges, rest2);
    }

    /// Adding `r` vertices from `rest` gains at most the `r` largest values
    /// of `|N(x) ∩ set| + min(|N(x) ∩ rest|, r - 1) / 2`, counted in halves.
    fn gain_bound(&self, set: u32, rest: u32, room: usize) -> usize {
        let r = room.min(rest.count_ones() as usize);
        let mut halves: Vec<usize> = Vec::with_capacity(rest.count_ones() as usize);
        let mut it = rest;
        while it != 0 {
            let x = it.trailing_zeros() as usize;
            it &= it - 1;
            let into_set = (self.adj[x] & set).count_ones() as usize;
            let inside = ((self.adj[x] & rest).count_ones() as usize).min(r.saturating_sub(1));
            halves.push(2 * into_set + inside);
        }
        halves.sort_unstable_by(|a, b| b.cmp(a));
        halves.iter().take(r).sum::<usize>() / 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_induced(g: &Graph) -> usize {
        // longest induced path by enumerating vertex subsets
        let n = g.n();
        let mut best = 0;
        for s in 0u32..1 << n {
            let k = s.count_ones() as usize;
            if k <= best + 1 {
                continue;
            }
            let degs: Vec<usize> = (0..n)
                .filter(|&v| s >> v & 1 == 1)
                .map(|v| g.neighbours(v as Vertex).iter().filter(|&&w| s >> w & 1 == 1).count())
                .collect();
            let edges: usize = degs.iter().sum::<usize>() / 2;
            let ends = degs.iter().filter(|&&d| d == 1).count();
            let connected = {
                let start = s.trailing_zeros();
                let mut seen = 1u32 << start;
                let mut stack = vec![start];
                while let Some(v) = stack.pop() {
                    for &w in g.neighbours(v) {
                        if s >> w & 1 == 1 && seen >> w & 1 == 0 {
                            seen |= 1 << w;
                            stack.push(w);
                        }
                    }
                }
                seen == s
            };
            if connected && edges == k - 1 && ends == 2 && degs.iter().all(|&d| d <= 2) {
                best = k - 1;
            }
        }
        best
    }

    #[test]
    fn small_cases() {
        assert_eq!(longest_induced_path_exact(&Graph::complete(4)).unwrap().length, 1);
        assert_eq!(longest_induced_path_exact(&Graph::cycle(5)).unwrap().length, 3);
        assert_eq!(longest_induced_path_exact(&Graph::cycle(6)).unwrap().length, 4);
        assert_eq!(longest_induced_path_exact(&Graph::path(7)).unwrap().length, 6);
        assert_eq!(longest_induced_path_exact(&Graph::empty(3)).unwrap().length, 0);
        assert_eq!(longest_induced_path_exact(&Graph::empty(0)).unwrap().witness, Vec::<Vertex>::new());
        assert_eq!(longest_induced_path_exact(&Graph::star(5)).unwrap().length, 2);
    }

    #[test]
    fn two_graph_cases() {
        let k4 = Graph::complete(4);
        let matching = Graph::from_edge_list(4, &[(0, 1), (2, 3)]).unwrap();
        assert_eq!(longest_gprime_path_induced_in_g_exact(&matching, &k4).unwrap().length, 1);
        let c4 = Graph::cycle(4);
        let p4 = Graph::path(4);
        let r = longest_gprime_path_induced_in_g_exact(&p4, &c4).unwrap();
        assert_eq!(r.length, 2);
        assert!(crate::graph::is_path_in_gprime_induced_in_g(&p4, &c4, &r.witness).unwrap());
        assert!(longest_gprime_path_induced_in_g_exact(&c4, &p4).is_err());
    }

    #[test]
    fn caps() {
        assert_eq!(
            longest_induced_path_exact(&Graph::empty(31)),
            Err(OracleError::TooLarge { n: 31, cap: 30 })
        );
        assert!(max_edges_bounded_set(&Graph::empty(26), 3).is_err());
    }

    #[test]
    fn matches_subset_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let n = rng.gen_range(1..12);
            let p = rng.gen_range(0.1..0.8);
            let g = crate::source::sample_gnp(n, p, rng.gen()).unwrap();
            let r = longest_induced_path_exact(&g).unwrap();
            assert_eq!(r.length, brute_induced(&g));
            assert_eq!(r.witness.len(), r.length + 1);
            assert!(crate::graph::is_path_in_gprime_induced_in_g(&g, &g, &r.witness).unwrap());
        }
    }

    #[test]
    fn dense_sets() {
        assert_eq!(max_edges_bounded_set(&Graph::complete(5), 3).unwrap().best_edges, 3);
        assert_eq!(max_edges_bounded_set(&Graph::path(8), 5).unwrap().best_edges, 4);
        assert_eq!(max_edges_bounded_set(&Graph::star(6), 4).unwrap().best_edges, 3);
        assert_eq!(max_edges_bounded_set(&Graph::cycle(4), 4).unwrap().best_edges, 4);
        assert_eq!(max_edges_bounded_set(&Graph::complete(4), 0).unwrap().best_edges, 0);
        let r = max_edges_bounded_set(&Graph::cycle(4), 3).unwrap();
        assert_eq!((r.best_edges, r.witness.len()), (2, 3));
    }

    #[test]
    fn dense_sets_match_subset_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12);
        for _ in 0..60 {
            let n = rng.gen_range(1..13);
            let g = crate::source::sample_gnp(n, rng.gen_range(0.1..0.9), rng.gen()).unwrap();
            let cap = rng.gen_range(0..=n);
            let brute = (0u32..1 << n)
                .filter(|s| s.count_ones() as usize <= cap)
                .map(|s| g.edges().filter(|&(a, b)| s >> a & 1 == 1 && s >> b & 1 == 1).count())
                .max()
                .unwrap();
            let r = max_edges_bounded_set(&g, cap).unwrap();
            assert_eq!(r.best_edges, brute);
            assert!(r.witness.len() <= cap);
            let ws = crate::graph::VertexSet::from_vertices(n, r.witness.iter().copied());
            assert_eq!(g.edges_within(&ws), brute);
        }
    }
}
