#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use induced_paths::{Graph, Vertex, VertexOrdering};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_induced-paths"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
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

pub fn random_subgraph(g: &Graph, keep: f64, rng: &mut impl Rng) -> Graph {
    let edges: Vec<_> = g.edges().filter(|_| rng.gen_bool(keep)).collect();
    Graph::from_edge_list(g.n(), &edges).unwrap()
}

pub fn random_ordering(n: usize, rng: &mut impl Rng) -> VertexOrdering {
    let mut pi: Vec<Vertex> = (0..n as Vertex).collect();
    pi.shuffle(rng);
    VertexOrdering::from_permutation(pi).unwrap()
}
