mod common;

use longpath::baselines::{dfbnb, exhaustive_dfs};
use longpath::bench::{extract_subgraph_mapped, gen_maze, MazeSpec};
use longpath::graph::{add_universal_endpoints, validate_path, write_graph};
use longpath::lpdp::{solve_instance, SolveMode};
use longpath::partition::{build_hierarchy, PartitionConfig};
use longpath::{Error, Instance, PathResult};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn lpdp(instance: &Instance, target_block_size: usize) -> f64 {
    let config = PartitionConfig { target_block_size, ..Default::default() };
    let h = build_hierarchy(&instance.graph, &config).unwrap();
    solve_instance(instance, &h, &SolveMode::Serial).unwrap().weight
}

/// A random simple walk from `s`, stopping at a dead end or by chance.
fn random_simple_walk(instance: &Instance, rng: &mut ChaCha8Rng) -> PathResult {
    let g = &instance.graph;
    let mut seen = vec![false; g.vertex_count()];
    let mut vertices = vec![instance.source];
    seen[instance.source] = true;
    let mut weight = 0.0;
    loop {
        let v = *vertices.last().unwrap();
        let open: Vec<_> = g.neighbors(v).iter().filter(|&&(w, _)| !seen[w]).collect();
        let Some(&&(w, ew)) = open.choose(rng) else { break };
        seen[w] = true;
        vertices.push(w);
        weight += ew;
        if rng.gen_bool(0.2) {
            break;
        }
    }
    PathResult { vertices, weight }
}

#[test]
fn validate_path_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..1000 {
        let inst = common::random_instance(&mut rng, 12);
        let g = &inst.graph;
        let walk = random_simple_walk(&inst, &mut rng);
        let end = *walk.vertices.last().unwrap();
        assert_eq!(validate_path(g, &walk, inst.source, end).unwrap(), walk.weight);

        let mut heavier = walk.clone();
        heavier.weight += 1.0;
        assert!(matches!(validate_path(g, &heavier, inst.source, end), Err(Error::InvalidPath(_))));

        if walk.vertices.len() >= 2 {
            let mut looped = walk.clone();
            looped.vertices.push(walk.vertices[0]);
            let w = g.weight(end, walk.vertices[0]);
            looped.weight += w.unwrap_or(0.0);
            assert!(validate_path(g, &looped, inst.source, walk.vertices[0]).is_err());

            let mut reversed = walk.clone();
            reversed.vertices.reverse();
            assert!(validate_path(g, &reversed, inst.source, end).is_err());
            assert_eq!(validate_path(g, &reversed, end, inst.source).unwrap(), walk.weight);
        }

        let missing = (0..g.vertex_count()).find(|&u| u != end && !g.has_edge(end, u) && !walk.vertices.contains(&u));
        if let Some(u) = missing {
            let mut jump = walk.clone();
            jump.vertices.push(u);
            assert!(matches!(validate_path(g, &jump, inst.source, u), Err(Error::InvalidPath(_))));
        }

        let mut outside = walk.clone();
        outside.vertices.push(g.vertex_count());
        assert!(validate_path(g, &outside, inst.source, g.vertex_count()).is_err());
    }
}

#[test]
fn universal_endpoints_give_longest_path_overall() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    for _ in 0..40 {
        let n = rng.gen_range(1..=8);
        let g = common::random_connected(n, rng.gen_range(0..=n), &mut rng);
        let mut best: f64 = 0.0;
        for u in 0..n {
            for v in u + 1..n {
                let inst = Instance::new(g.clone(), u, v).unwrap();
                best = best.max(exhaustive_dfs(&inst, None).result.unwrap().weight);
            }
        }
        let extended = add_universal_endpoints(&g).unwrap();
        assert_eq!(lpdp(&extended, 3), best);
        assert_eq!(exhaustive_dfs(&extended, None).result.unwrap().weight, best);
    }
}

#[test]
fn baselines_and_lpdp_agree_on_mazes() {
    for seed in 0..12 {
        let maze = gen_maze(MazeSpec { side: 4 + seed as usize % 5, fill: 0.3, seed }).unwrap();
        let inst = &maze.instance;
        let exact = exhaustive_dfs(inst, None).result.unwrap();
        let bnb = dfbnb(inst, None).result.unwrap();
        assert_eq!(bnb.weight, exact.weight);
        assert_eq!(lpdp(inst, 4), exact.weight);
        assert_eq!(lpdp(inst, 16), exact.weight);
    }
}

#[test]
fn side_two_empty_maze_has_weight_two() {
    let maze = gen_maze(MazeSpec { side: 2, fill: 0.0, seed: 0 }).unwrap();
    assert_eq!(maze.instance.graph.vertex_count(), 4);
    assert_eq!(exhaustive_dfs(&maze.instance, None).result.unwrap().weight, 2.0);
    assert_eq!(lpdp(&maze.instance, 2), 2.0);
}

fn graph_bytes(instance: &Instance) -> Vec<u8> {
    let mut out = Vec::new();
    write_graph(&instance.graph, &mut out).unwrap();
    out
}

#[test]
fn generators_are_deterministic() {
    for seed in 0..5 {
        let spec = MazeSpec { side: 10, fill: 0.4, seed };
        let a = gen_maze(spec).unwrap();
        let b = gen_maze(spec).unwrap();
        assert_eq!(graph_bytes(&a.instance), graph_bytes(&b.instance));
        assert_eq!(a.render(), b.render());

        let big = common::random_connected(40, 30, &mut ChaCha8Rng::seed_from_u64(seed));
        let (x, xm) = extract_subgraph_mapped(&big, 12, seed, false).unwrap();
        let (y, ym) = extract_subgraph_mapped(&big, 12, seed, false).unwrap();
        assert_eq!(graph_bytes(&x), graph_bytes(&y));
        assert_eq!((x.source, x.target, xm), (y.source, y.target, ym));
    }
    let g = gen_maze(MazeSpec { side: 12, fill: 0.3, seed: 1 }).unwrap().instance.graph;
    let config = PartitionConfig { target_block_size: 6, seed: 3, ..Default::default() };
    assert_eq!(build_hierarchy(&g, &config).unwrap(), build_hierarchy(&g, &config).unwrap());
}
