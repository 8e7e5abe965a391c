//! Longest paths by dynamic programming over a partition hierarchy.
//!
//! For every block, bottom-up, a table maps each solvable set of boundary
//! node pairs to the heaviest system of disjoint paths inside the block that
//! connects them. A block's table is computed by [`search`] over its
//! [`AuxiliaryGraph`]: the children's boundary nodes, the original edges
//! between different children and a zero-weight clique per child whose edges
//! stand for paths through that child. The top block's entry for
//! `{source, target}` is the answer; the path itself is unpacked recursively
//! from the stored entries.

pub mod auxiliary;
pub mod search;
pub mod table;

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::graph::{Graph, Instance, PathResult, VertexId};
use crate::pair_sets::{canonicalize, decode_key, encode_key};
use crate::parallel::{self, ParallelConfig};
use crate::partition::PartitionHierarchy;

pub use auxiliary::{AuxChild, AuxEdge, AuxiliaryGraph, BlockLayout, EdgeKind};
pub use search::{BranchContext, Candidate, CandidateSink, ChildTable, Search, SearchControl, SearchState, SearchStats};
pub use table::{BlockSolutionTable, ConcurrentTable, Insert, PathPack, SolutionEntry};

/// Default cap on the number of table entries of one solve, roughly 2 GiB.
pub const DEFAULT_MAX_ENTRIES: usize = 1 << 24;

/// Resource limits of one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Limits {
    pub time: Option<Duration>,
    /// Total number of table entries over all blocks.
    pub max_entries: Option<usize>,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { time: None, max_entries: Some(DEFAULT_MAX_ENTRIES) }
    }
}

impl Limits {
    pub fn time(limit: Duration) -> Self {
        Limits { time: Some(limit), ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveMode {
    Serial,
    Parallel(ParallelConfig),
}

/// Solution tables of every block, `tables[level][block]`.
#[derive(Debug, Clone)]
pub struct SolvedTables {
    pub layout: BlockLayout,
    pub tables: Vec<Vec<BlockSolutionTable>>,
}

impl SolvedTables {
    pub fn table(&self, level: usize, block: usize) -> &BlockSolutionTable {
        &self.tables[level][block]
    }

    pub fn top(&self) -> &BlockSolutionTable {
        &self.tables.last().expect("at least one level")[0]
    }

    pub fn total_entries(&self) -> usize {
        self.tables.iter().flatten().map(|t| t.len()).sum()
    }
}

#[derive(Debug, Clone, Default)]
pub struct LpdpStats {
    pub search: SearchStats,
    pub block_times: Vec<Vec<Duration>>,
    pub wall_time: Duration,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub path: PathResult,
    pub tables: SolvedTables,
    pub stats: LpdpStats,
}

/// Lookup handles for the children of an auxiliary graph.
pub fn child_handles<'a>(aux: &AuxiliaryGraph, below: &'a [BlockSolutionTable]) -> Result<Vec<ChildTable<'a>>> {
    aux.children
        .iter()
        .map(|c| match c.block {
            None => Ok(ChildTable::Singleton),
            Some(b) => below
                .get(b)
                .map(ChildTable::Table)
                .ok_or_else(|| Error::Inconsistent(format!("table of child block {b} missing"))),
        })
        .collect()
}

/// Computes the table of one block from the tables of the level below
/// (`below` is indexed by block id and ignored on level 0).
pub fn solve_block(
    instance: &Instance,
    hierarchy: &PartitionHierarchy,
    layout: &BlockLayout,
    level: usize,
    block: usize,
    below: &[BlockSolutionTable],
    control: &SearchControl,
) -> Result<(BlockSolutionTable, SearchStats)> {
    let aux = AuxiliaryGraph::build(&instance.graph, hierarchy, layout, level, block)?;
    let handles = child_handles(&aux, below)?;
    let table = BlockSolutionTable::new(level, block, layout.boundary[level][block].clone());
    let mut search = Search::new(&aux, &handles, control, table);
    search.run();
    if search.aborted() {
        return Err(control.error());
    }
    let stats = search.stats();
    Ok((search.into_sink(), stats))
}

/// Fills the tables of all blocks, level by level.
pub fn solve_tables(
    instance: &Instance,
    hierarchy: &PartitionHierarchy,
    mode: &SolveMode,
    limits: Limits,
) -> Result<(SolvedTables, LpdpStats)> {
    let start = Instant::now();
    let layout = BlockLayout::new(instance, hierarchy)?;
    let control = SearchControl::new(limits.time.map(|d| start + d)).with_entry_budget(limits.max_entries);
    let (tables, mut stats) = match mode {
        SolveMode::Serial => solve_serial(instance, hierarchy, &layout, &control)?,
        SolveMode::Parallel(cfg) => parallel::solve_levels(instance, hierarchy, &layout, cfg, &control)?,
    };
    stats.wall_time = start.elapsed();
    Ok((SolvedTables { layout, tables }, stats))
}

fn solve_serial(
    instance: &Instance,
    hierarchy: &PartitionHierarchy,
    layout: &BlockLayout,
    control: &SearchControl,
) -> Result<(Vec<Vec<BlockSolutionTable>>, LpdpStats)> {
    let mut tables: Vec<Vec<BlockSolutionTable>> = Vec::with_capacity(hierarchy.level_count());
    let mut stats = LpdpStats::default();
    for level in 0..hierarchy.level_count() {
        let below: &[BlockSolutionTable] = if level == 0 { &[] } else { &tables[level - 1] };
        let mut row = Vec::with_capacity(hierarchy.block_count(level));
        let mut times = Vec::with_capacity(hierarchy.block_count(level));
        for block in 0..hierarchy.block_count(level) {
            let t0 = Instant::now();
            let (table, s) = solve_block(instance, hierarchy, layout, level, block, below, control)?;
            times.push(t0.elapsed());
            stats.search.nodes += s.nodes;
            stats.search.candidates += s.candidates;
            row.push(table);
        }
        tables.push(row);
        stats.block_times.push(times);
    }
    Ok((tables, stats))
}

/// Longest simple path from source to target.
pub fn solve_instance(instance: &Instance, hierarchy: &PartitionHierarchy, mode: &SolveMode) -> Result<PathResult> {
    solve_with_limits(instance, hierarchy, mode, Limits::default()).map(|s| s.path)
}

/// Like [`solve_instance`], keeping the tables and statistics.
pub fn solve_with_limits(
    instance: &Instance,
    hierarchy: &PartitionHierarchy,
    mode: &SolveMode,
    limits: Limits,
) -> Result<Solution> {
    let (tables, stats) = solve_tables(instance, hierarchy, mode, limits)?;
    let path = reconstruct_path(&tables, hierarchy, instance)?;
    Ok(Solution { path, tables, stats })
}

/// Unpacks the optimal source-target path from the solved tables.
pub fn reconstruct_path(tables: &SolvedTables, hierarchy: &PartitionHierarchy, instance: &Instance) -> Result<PathResult> {
    let (s, t) = (instance.source, instance.target);
    if s == t {
        return Ok(PathResult { vertices: vec![s], weight: 0.0 });
    }
    let top = tables.top();
    let set = canonicalize([(s, t)]).expect("distinct endpoints");
    let key = encode_key(&set, &top.boundary)
        .ok_or_else(|| Error::Inconsistent("source or target is not a boundary node of the top block".into()))?;
    let Some(entry) = top.get(&key) else {
        return Err(Error::NoPath { from: s, to: t });
    };
    let paths = unpack_entry(tables, hierarchy, hierarchy.top_level(), 0, &key)?;
    let mut vertices = paths.into_iter().next().ok_or_else(|| Error::Inconsistent("empty top entry".into()))?;
    if vertices.first() != Some(&s) {
        vertices.reverse();
    }
    Ok(PathResult { vertices, weight: entry.weight })
}

/// Explicit paths in the original graph realizing the proper pairs of a
/// stored entry, oriented from the lower to the higher boundary rank.
pub fn unpack_entry(
    tables: &SolvedTables,
    hierarchy: &PartitionHierarchy,
    level: usize,
    block: usize,
    key: &[u8],
) -> Result<Vec<Vec<VertexId>>> {
    let table = tables.table(level, block);
    let entry = table
        .get(key)
        .ok_or_else(|| Error::Inconsistent(format!("no entry for {} in block {block} on level {level}", decode_key(key, &table.boundary))))?;
    let aux_paths: Vec<Vec<VertexId>> = entry.paths.paths().collect();
    if level == 0 {
        return Ok(aux_paths);
    }
    let singletons: Vec<VertexId> = decode_key(key, &table.boundary).singletons().collect();
    let child_sets = induced_child_pairs(hierarchy, level - 1, &aux_paths, &singletons);

    // explicit paths through each child, keyed by their endpoints
    let mut through = std::collections::HashMap::new();
    for (child, pairs) in child_sets {
        let child_table = tables.table(level - 1, child);
        let set = canonicalize(pairs).ok_or_else(|| Error::Inconsistent(format!("child {child} gets overlapping pairs")))?;
        if set.is_trivial() {
            continue;
        }
        let child_key = encode_key(&set, &child_table.boundary)
            .ok_or_else(|| Error::Inconsistent(format!("pair set {set} is not over the boundary of child {child}")))?;
        for p in unpack_entry(tables, hierarchy, level - 1, child, &child_key)? {
            let (a, b) = (p[0], *p.last().expect("non-empty"));
            through.insert((a.min(b), a.max(b)), p);
        }
    }
    aux_paths
        .iter()
        .map(|p| {
            let mut out = vec![p[0]];
            for step in p.windows(2) {
                let (u, w) = (step[0], step[1]);
                if hierarchy.block_of(level - 1, u) == hierarchy.block_of(level - 1, w) {
                    let inner = through
                        .get(&(u.min(w), u.max(w)))
                        .ok_or_else(|| Error::Inconsistent(format!("no path between {u} and {w} in child block")))?;
                    if inner[0] == u {
                        out.extend_from_slice(&inner[1..]);
                    } else {
                        out.extend(inner.iter().rev().skip(1));
                    }
                } else {
                    out.push(w);
                }
            }
            Ok(out)
        })
        .collect()
}

/// Pairs induced on each child block (by id on `child_level`) by paths whose
/// consecutive vertices in the same child stand for a path through it.
pub fn induced_child_pairs(
    hierarchy: &PartitionHierarchy,
    child_level: usize,
    aux_paths: &[Vec<VertexId>],
    singletons: &[VertexId],
) -> std::collections::BTreeMap<usize, Vec<(VertexId, VertexId)>> {
    let mut out: std::collections::BTreeMap<usize, Vec<(VertexId, VertexId)>> = Default::default();
    let child = |v: VertexId| hierarchy.block_of(child_level, v);
    for p in aux_paths {
        for (i, &v) in p.iter().enumerate() {
            let prev = i.checked_sub(1).map(|j| p[j]).filter(|&u| child(u) == child(v));
            let next = p.get(i + 1).copied().filter(|&u| child(u) == child(v));
            match (prev, next) {
                (None, None) => out.entry(child(v)).or_default().push((v, v)),
                (Some(_), _) => {}
                (None, Some(w)) => out.entry(child(v)).or_default().push((v, w)),
            }
        }
    }
    for &x in singletons {
        out.entry(child(x)).or_default().push((x, x));
    }
    out
}

/// Pairs a path induces on one block: the end vertices of every maximal run
/// of the path inside the block, with the weight of the edges inside runs.
pub fn restrict_path(
    graph: &Graph,
    hierarchy: &PartitionHierarchy,
    level: usize,
    block: usize,
    path: &[VertexId],
) -> (Vec<(VertexId, VertexId)>, f64) {
    let inside = |v: VertexId| hierarchy.block_of(level, v) == block;
    let mut pairs = Vec::new();
    let mut weight = 0.0;
    let mut run_start = None;
    for (i, &v) in path.iter().enumerate() {
        if !inside(v) {
            continue;
        }
        let start = *run_start.get_or_insert(v);
        match path.get(i + 1) {
            Some(&w) if inside(w) => weight += graph.weight(v, w).unwrap_or(f64::NAN),
            _ => {
                pairs.push((start, v));
                run_start = None;
            }
        }
    }
    (pairs, weight)
}

#[cfg(test)]
mod tests;
