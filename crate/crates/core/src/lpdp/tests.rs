use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::baselines::exhaustive_dfs;
use crate::graph::{validate_path, Graph};
use crate::pair_sets::{enumerate_pair_sets, BoundaryPairSet};
use crate::partition::{boundary_nodes, random_hierarchy};

fn unit(n: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::from_edges(n, edges.iter().map(|&(u, v)| (u, v, 1.0))).unwrap()
}

fn key_of(table: &BlockSolutionTable, pairs: &[(VertexId, VertexId)]) -> Vec<u8> {
    let set = canonicalize(pairs.iter().copied()).unwrap();
    encode_key(&set, &table.boundary).unwrap().into_vec()
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Graph {
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((v, rng.gen_range(0..v), rng.gen_range(0..=10) as f64));
    }
    for _ in 0..rng.gen_range(0..=n) {
        let (u, v) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if u != v {
            edges.push((u, v, rng.gen_range(0..=10) as f64));
        }
    }
    Graph::from_edges(n, edges).unwrap()
}

/// Heaviest vertex-disjoint paths inside `members` joining the proper pairs
/// of `set`, avoiding its singletons; `None` if impossible.
fn brute_force(graph: &Graph, members: &[VertexId], set: &BoundaryPairSet) -> Option<f64> {
    let n = graph.vertex_count();
    let mut allowed = vec![false; n];
    for &v in members {
        allowed[v] = true;
    }
    let mut used = vec![false; n];
    for &(a, b) in set.pairs() {
        used[a] = true;
        used[b] = true;
    }
    let pairs: Vec<_> = set.matching().collect();
    fn join(
        graph: &Graph,
        allowed: &[bool],
        used: &mut Vec<bool>,
        pairs: &[(VertexId, VertexId)],
        v: VertexId,
        weight: f64,
    ) -> Option<f64> {
        let Some(&(_, b)) = pairs.first() else { return Some(weight) };
        let mut best: Option<f64> = None;
        for &(w, ew) in graph.neighbors(v) {
            let found = if w == b {
                match pairs.get(1) {
                    Some(&(next, _)) => join(graph, allowed, used, &pairs[1..], next, weight + ew),
                    None => Some(weight + ew),
                }
            } else if allowed[w] && !used[w] {
                used[w] = true;
                let r = join(graph, allowed, used, pairs, w, weight + ew);
                used[w] = false;
                r
            } else {
                None
            };
            if let Some(f) = found {
                best = Some(best.map_or(f, |x: f64| x.max(f)));
            }
        }
        best
    }
    match pairs.first() {
        None => Some(0.0),
        Some(&(a, _)) => join(graph, &allowed, &mut used, &pairs, a, 0.0),
    }
}

#[test]
fn level_zero_triangle_has_no_clique_edges() {
    let inst = Instance::new(unit(3, &[(0, 1), (1, 2), (2, 0)]), 0, 2).unwrap();
    let h = PartitionHierarchy::single_block(3);
    let layout = BlockLayout::new(&inst, &h).unwrap();
    let aux = AuxiliaryGraph::build(&inst.graph, &h, &layout, 0, 0).unwrap();
    assert_eq!(aux.vertices, vec![0, 1, 2]);
    assert_eq!(aux.boundary_edge_count(), 3);
    assert_eq!(aux.clique_edge_count(), 0);
    assert_eq!(aux.children.len(), 3);
}

#[test]
fn single_child_gives_one_clique() {
    let inst = Instance::new(unit(3, &[(0, 1), (1, 2)]), 0, 2).unwrap();
    let h = PartitionHierarchy::new(vec![vec![0, 0, 0], vec![0, 0, 0]]).unwrap();
    let layout = BlockLayout::new(&inst, &h).unwrap();
    let aux = AuxiliaryGraph::build(&inst.graph, &h, &layout, 1, 0).unwrap();
    assert_eq!(aux.vertices, vec![0, 2]);
    assert_eq!(aux.boundary_edge_count(), 0);
    assert_eq!(aux.clique_edge_count(), 1);
}

#[test]
fn singleton_block_table() {
    // block {1} on a path 0-1-2
    let inst = Instance::new(unit(3, &[(0, 1), (1, 2)]), 0, 2).unwrap();
    let h = PartitionHierarchy::new(vec![vec![0, 1, 2], vec![0, 0, 0]]).unwrap();
    let layout = BlockLayout::new(&inst, &h).unwrap();
    let (table, _) = solve_block(&inst, &h, &layout, 0, 1, &[], &SearchControl::default()).unwrap();
    assert_eq!(table.boundary, vec![1]);
    assert!(table.is_empty());
    assert_eq!(table.lookup(&[]), Some(0.0));
    assert_eq!(table.lookup(&[0, 0]), Some(0.0));
}

#[test]
fn two_vertex_block() {
    let g = Graph::from_edges(4, [(0, 1, 1.0), (1, 2, 3.0), (2, 3, 1.0)]).unwrap();
    let inst = Instance::new(g, 0, 3).unwrap();
    let h = PartitionHierarchy::new(vec![vec![0, 1, 1, 2], vec![0, 0, 0, 0]]).unwrap();
    let layout = BlockLayout::new(&inst, &h).unwrap();
    let (table, _) = solve_block(&inst, &h, &layout, 0, 1, &[], &SearchControl::default()).unwrap();
    assert_eq!(table.boundary, vec![1, 2]);
    assert_eq!(table.lookup(&key_of(&table, &[(1, 2)])), Some(3.0));
    assert_eq!(table.dump(), "{{1,2}} -> 3\n");
}

#[test]
fn four_cycle_split_in_halves() {
    let inst = Instance::new(unit(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]), 0, 2).unwrap();
    let h = PartitionHierarchy::new(vec![vec![0, 0, 1, 1], vec![0, 0, 0, 0]]).unwrap();
    let (tables, _) = solve_tables(&inst, &h, &SolveMode::Serial, Limits::default()).unwrap();
    let top = tables.top();
    assert_eq!(top.boundary, vec![0, 2]);
    assert_eq!(top.lookup(&key_of(top, &[(0, 2)])), Some(2.0));
    let path = reconstruct_path(&tables, &h, &inst).unwrap();
    assert_eq!(validate_path(&inst.graph, &path, 0, 2).unwrap(), 2.0);
}

#[test]
fn equal_endpoints_and_disconnected() {
    let inst = Instance::new(Graph::empty(1), 0, 0).unwrap();
    let p = solve_instance(&inst, &PartitionHierarchy::single_block(1), &SolveMode::Serial).unwrap();
    assert_eq!((p.vertices, p.weight), (vec![0], 0.0));

    let inst = Instance::new(unit(4, &[(0, 1), (2, 3)]), 0, 3).unwrap();
    let h = PartitionHierarchy::new(vec![vec![0, 0, 1, 1], vec![0, 0, 0, 0]]).unwrap();
    for mode in [SolveMode::Serial, SolveMode::Parallel(ParallelConfig::with_threads(2))] {
        assert!(matches!(solve_instance(&inst, &h, &mode), Err(Error::NoPath { from: 0, to: 3 })));
    }
}

/// Three blocks with boundary nodes 0..=9: green {0,1,2,3}, yellow {4,5,6},
/// blue {7,8,9}, plus interior vertices 10..=13.
fn three_block_instance() -> (Instance, PartitionHierarchy) {
    let edges = [
        (0, 10), (10, 1), (2, 11), (11, 3), (10, 11), // green
        (4, 12), (12, 6), (5, 12), // yellow
        (8, 13), (13, 9), (7, 13), // blue
        (1, 4), (6, 7), (7, 2), (3, 8), (5, 8), // between blocks
    ];
    // the heavier edge 12-6 makes the intended path the unique optimum
    let weighted = edges.iter().map(|&(u, v)| (u, v, if (u, v) == (12, 6) { 2.0 } else { 1.0 }));
    let inst = Instance::new(Graph::from_edges(14, weighted).unwrap(), 0, 9).unwrap();
    let mut level0 = vec![0; 14];
    for v in [4, 5, 6, 12] {
        level0[v] = 1;
    }
    for v in [7, 8, 9, 13] {
        level0[v] = 2;
    }
    let h = PartitionHierarchy::new(vec![level0, vec![0; 14]]).unwrap();
    (inst, h)
}

#[test]
fn three_block_example() {
    let (inst, h) = three_block_instance();
    let layout = BlockLayout::new(&inst, &h).unwrap();
    assert_eq!(layout.boundary[0], vec![vec![0, 1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]]);
    let aux = AuxiliaryGraph::build(&inst.graph, &h, &layout, 1, 0).unwrap();
    assert_eq!(aux.vertices, (0..10).collect::<Vec<_>>());
    assert_eq!(aux.boundary_edge_count(), 5);
    assert_eq!(aux.clique_edge_count(), 6 + 3 + 3);

    let solution = solve_with_limits(&inst, &h, &SolveMode::Serial, Limits::default()).unwrap();
    let path = &solution.path;
    assert_eq!(path.vertices, vec![0, 10, 1, 4, 12, 6, 7, 2, 11, 3, 8, 13, 9]);
    assert_eq!(path.weight, exhaustive_dfs(&inst, None).result.unwrap().weight);

    let induced: Vec<_> = (0..3).map(|b| restrict_path(&inst.graph, &h, 0, b, &path.vertices).0).collect();
    let canon = |p: &[(usize, usize)]| canonicalize(p.iter().copied()).unwrap();
    assert_eq!(canon(&induced[0]), canon(&[(0, 1), (2, 3)]));
    assert_eq!(canon(&induced[1]), canon(&[(4, 6)]));
    assert_eq!(canon(&induced[2]), canon(&[(7, 7), (8, 9)]));
}

#[test]
fn tables_match_block_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut checked = 0;
    for _ in 0..120 {
        let n = rng.gen_range(3..=10);
        let graph = random_graph(&mut rng, n);
        let (s, t) = (0, n - 1);
        let inst = Instance::new(graph, s, t).unwrap();
        let h = random_hierarchy(n, rng.gen_range(1..=n / 2 + 1), rng.gen_range(0..2), &mut rng);
        let (tables, _) = solve_tables(&inst, &h, &SolveMode::Serial, Limits::default()).unwrap();
        for level in 0..h.level_count() {
            for (block, members) in h.members(level).iter().enumerate() {
                let table = tables.table(level, block);
                assert_eq!(table.boundary, boundary_nodes(&inst.graph, &h, level, block, &inst));
                if table.boundary.len() > 7 {
                    continue;
                }
                for set in enumerate_pair_sets(&table.boundary).unwrap() {
                    let key = encode_key(&set, &table.boundary).unwrap();
                    let expected = brute_force(&inst.graph, members, &set);
                    assert_eq!(table.lookup(&key), expected, "level {level} block {block} set {set}");
                    if let Some(entry) = table.get(&key) {
                        // stored paths are disjoint, inside the block and carry the weight
                        let paths = unpack_entry(&tables, &h, level, block, &key).unwrap();
                        let mut seen = std::collections::HashSet::new();
                        let mut total = 0.0;
                        for p in &paths {
                            assert!(p.iter().all(|&v| h.block_of(level, v) == block && seen.insert(v)));
                            total += p.windows(2).map(|e| inst.graph.weight(e[0], e[1]).unwrap()).sum::<f64>();
                        }
                        assert_eq!(total, entry.weight);
                    }
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 1500, "only {checked} pair sets checked");
}

#[test]
fn unsolvable_sets_stay_unsolvable() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..30 {
        let n = rng.gen_range(4..=10);
        let inst = Instance::new(random_graph(&mut rng, n), 0, n - 1).unwrap();
        let h = random_hierarchy(n, rng.gen_range(1..=3), 1, &mut rng);
        let (tables, _) = solve_tables(&inst, &h, &SolveMode::Serial, Limits::default()).unwrap();
        for table in tables.tables.iter().flatten() {
            if table.boundary.len() > 6 {
                continue;
            }
            let sets: Vec<_> = enumerate_pair_sets(&table.boundary).unwrap().collect();
            let solvable =
                |p: &BoundaryPairSet| table.lookup(&encode_key(p, &table.boundary).unwrap()).is_some();
            for p in sets.iter().filter(|p| !solvable(p)) {
                for q in sets.iter().filter(|q| p.is_subset_of(q)) {
                    assert!(!solvable(q), "{p} unsolvable but superset {q} solvable");
                }
            }
        }
    }
}

#[test]
fn optimal_path_restricts_to_stored_optima() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..40 {
        let n = rng.gen_range(2..=11);
        let inst = Instance::new(random_graph(&mut rng, n), 0, n - 1).unwrap();
        let h = random_hierarchy(n, rng.gen_range(1..=n), rng.gen_range(0..3), &mut rng);
        let solution = solve_with_limits(&inst, &h, &SolveMode::Serial, Limits::default()).unwrap();
        for level in 0..h.level_count() {
            for block in 0..h.block_count(level) {
                let (pairs, weight) = restrict_path(&inst.graph, &h, level, block, &solution.path.vertices);
                let table = solution.tables.table(level, block);
                let set = canonicalize(pairs).unwrap();
                let key = encode_key(&set, &table.boundary).unwrap();
                assert_eq!(table.lookup(&key), Some(weight), "level {level} block {block} set {set}");
            }
        }
    }
}

#[test]
fn dump_lists_entries_in_key_order() {
    let (inst, h) = three_block_instance();
    let (tables, _) = solve_tables(&inst, &h, &SolveMode::Serial, Limits::default()).unwrap();
    let dump = tables.table(0, 1).dump();
    let lines: Vec<_> = dump.lines().collect();
    assert_eq!(lines.len(), tables.table(0, 1).len());
    assert!(lines.contains(&"{{4,6}} -> 3"));
}

#[test]
fn entry_budget_aborts_cleanly() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let graph = random_graph(&mut rng, 12);
    let inst = Instance::new(graph, 0, 11).unwrap();
    let h = random_hierarchy(12, 3, 1, &mut rng);
    let (tables, _) = solve_tables(&inst, &h, &SolveMode::Serial, Limits::default()).unwrap();
    let needed = tables.total_entries();
    assert!(needed > 2);

    let tight = Limits { time: None, max_entries: Some(needed / 2) };
    match solve_tables(&inst, &h, &SolveMode::Serial, tight) {
        Err(Error::TableLimit(limit)) => assert_eq!(limit, needed / 2),
        other => panic!("expected table limit, got {:?}", other.map(|(t, _)| t.total_entries())),
    }
    let parallel = SolveMode::Parallel(crate::parallel::ParallelConfig::with_threads(3));
    assert!(matches!(solve_tables(&inst, &h, &parallel, tight), Err(Error::TableLimit(_))));

    let roomy = Limits { time: None, max_entries: Some(needed * 4) };
    assert!(solve_tables(&inst, &h, &SolveMode::Serial, roomy).is_ok());
}
