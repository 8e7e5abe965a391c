#![allow(dead_code)]

use longpath::graph::{Graph, Instance};
use rand::seq::SliceRandom;
use rand::Rng;

/// Connected graph: random spanning tree plus `extra` random edges, integer
/// weights in `0..=10`.
pub fn random_connected<R: Rng>(n: usize, extra: usize, rng: &mut R) -> Graph {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut edges = Vec::new();
    for i in 1..n {
        let parent = order[rng.gen_range(0..i)];
        edges.push((order[i], parent, rng.gen_range(0..=10) as f64));
    }
    if n >= 2 {
        for _ in 0..extra {
            let u = rng.gen_range(0..n);
            let v = rng.gen_range(0..n);
            if u != v {
                edges.push((u, v, rng.gen_range(0..=10) as f64));
            }
        }
    }
    Graph::from_edges(n, edges).expect("valid edges")
}

pub fn random_instance<R: Rng>(rng: &mut R, max_n: usize) -> Instance {
    let n = rng.gen_range(2..=max_n);
    let extra = rng.gen_range(0..=(3 * n / 2));
    let graph = random_connected(n, extra, rng);
    let s = rng.gen_range(0..n);
    let mut t = rng.gen_range(0..n - 1);
    if t >= s {
        t += 1;
    }
    Instance::new(graph, s, t).expect("distinct endpoints")
}

pub fn unit_graph(n: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::from_edges(n, edges.iter().map(|&(u, v)| (u, v, 1.0))).unwrap()
}
