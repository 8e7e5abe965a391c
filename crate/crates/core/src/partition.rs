//! Hierarchical graph partitions.
//!
//! A [`PartitionHierarchy`] stores one block assignment per level. Level 0 is
//! the finest; every level-`l` block lies entirely inside one level-`l+1`
//! block and the top level is a single block holding every vertex.
//!
//! [`build_hierarchy`] grows balanced bisections by BFS, improves each cut
//! with single-vertex moves and groups the resulting bisection tree into
//! levels. Externally computed partitions can be read with
//! [`import_hierarchy`].

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, Instance, VertexId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionHierarchy {
    levels: Vec<Vec<usize>>,
}

impl PartitionHierarchy {
    /// Validates nesting, contiguity and the single top block.
    pub fn new(levels: Vec<Vec<usize>>) -> Result<Self> {
        let h = PartitionHierarchy { levels };
        h.validate()?;
        Ok(h)
    }

    /// A hierarchy with a single level holding one block.
    pub fn single_block(vertex_count: usize) -> Self {
        PartitionHierarchy { levels: vec![vec![0; vertex_count]] }
    }

    fn validate(&self) -> Result<()> {
        let Some(first) = self.levels.first() else {
            return Err(Error::InvalidHierarchy("no levels".into()));
        };
        let n = first.len();
        for (l, level) in self.levels.iter().enumerate() {
            if level.len() != n {
                return Err(Error::InvalidHierarchy(format!(
                    "level {l} assigns {} vertices, expected {n}",
                    level.len()
                )));
            }
            let count = level.iter().copied().max().map_or(0, |m| m + 1);
            let mut used = vec![false; count];
            for &b in level {
                used[b] = true;
            }
            if let Some(missing) = used.iter().position(|&u| !u) {
                return Err(Error::InvalidHierarchy(format!(
                    "block ids on level {l} are not contiguous (id {missing} unused)"
                )));
            }
        }
        for l in 1..self.levels.len() {
            let mut parent = vec![usize::MAX; self.block_count(l - 1)];
            for (v, (&child, &up)) in self.levels[l - 1].iter().zip(&self.levels[l]).enumerate() {
                if parent[child] == usize::MAX {
                    parent[child] = up;
                } else if parent[child] != up {
                    return Err(Error::InvalidHierarchy(format!(
                        "level {l} splits block {child} of level {} (vertex {v})",
                        l - 1
                    )));
                }
            }
        }
        if self.block_count(self.top_level()) > 1 {
            return Err(Error::InvalidHierarchy("top level has more than one block".into()));
        }
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.levels[0].len()
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn top_level(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn levels(&self) -> &[Vec<usize>] {
        &self.levels
    }

    pub fn assignment(&self, level: usize) -> &[usize] {
        &self.levels[level]
    }

    #[inline]
    pub fn block_of(&self, level: usize, v: VertexId) -> usize {
        self.levels[level][v]
    }

    pub fn block_count(&self, level: usize) -> usize {
        self.levels[level].iter().copied().max().map_or(0, |m| m + 1)
    }

    /// Vertex lists of every block on `level`, each ascending.
    pub fn members(&self, level: usize) -> Vec<Vec<VertexId>> {
        let mut out = vec![Vec::new(); self.block_count(level)];
        for (v, &b) in self.levels[level].iter().enumerate() {
            out[b].push(v);
        }
        out
    }

    /// Level-`level - 1` blocks contained in `block`, ascending.
    pub fn children(&self, level: usize, block: usize) -> Vec<usize> {
        assert!(level > 0);
        let mut out: Vec<usize> = self.levels[level]
            .iter()
            .zip(&self.levels[level - 1])
            .filter(|&(&b, _)| b == block)
            .map(|(_, &c)| c)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Parent block of every level-`level` block.
    pub fn parents(&self, level: usize) -> Vec<usize> {
        let mut out = vec![0; self.block_count(level)];
        for (&c, &p) in self.levels[level].iter().zip(&self.levels[level + 1]) {
            out[c] = p;
        }
        out
    }

    /// Number of edges whose endpoints lie in different level-`level` blocks.
    pub fn edge_cut(&self, graph: &Graph, level: usize) -> usize {
        graph.edges().filter(|&(u, v, _)| self.levels[level][u] != self.levels[level][v]).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionConfig {
    /// Allowed imbalance: blocks hold at most `(1 + epsilon) * ceil(n / k)` vertices.
    pub epsilon: f64,
    /// Bisection stops once blocks are at most this large.
    pub target_block_size: usize,
    /// Preferred upper limit on the number of levels.
    pub max_levels: usize,
    /// Blocks merged per parent (2, 4 or 8).
    pub fan_out: usize,
    pub seed: u64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig { epsilon: 0.1, target_block_size: 16, max_levels: 32, fan_out: 2, seed: 0 }
    }
}

impl PartitionConfig {
    fn check(&self) -> Result<()> {
        if self.epsilon.is_nan() || self.epsilon < 0.0 {
            return Err(Error::OutOfRange(format!("epsilon must be >= 0, got {}", self.epsilon)));
        }
        if self.target_block_size == 0 {
            return Err(Error::OutOfRange("target_block_size must be >= 1".into()));
        }
        if !matches!(self.fan_out, 2 | 4 | 8) {
            return Err(Error::OutOfRange(format!("fan_out must be 2, 4 or 8, got {}", self.fan_out)));
        }
        Ok(())
    }
}

/// Builds a hierarchy by recursive bisection.
///
/// The number of leaf blocks is the smallest power of two `k` with
/// `ceil(n / k) <= target_block_size`. Each level respects
/// `size <= (1 + epsilon) * ceil(n / k_l)`.
pub fn build_hierarchy(graph: &Graph, config: &PartitionConfig) -> Result<PartitionHierarchy> {
    config.check()?;
    let n = graph.vertex_count();
    let mut depth = 0usize;
    while n.div_ceil(1 << depth) > config.target_block_size {
        depth += 1;
    }
    // caps[j]: largest allowed size of a tree node with 2^j leaves below it
    let mut caps = Vec::with_capacity(depth + 1);
    for j in 0..=depth {
        let ideal = n.div_ceil(1 << (depth - j));
        let mut cap = (((1.0 + config.epsilon) * ideal as f64) + 1e-9).floor() as usize;
        cap = cap.max(ideal);
        if j > 0 {
            cap = cap.min(2 * caps[j - 1]);
        }
        caps.push(cap);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut bisector = Bisector::new(graph);
    // node_of[d][v]: tree node at depth d that contains v
    let mut node_of = vec![vec![0usize; n]; depth + 1];
    let mut frontier: Vec<Vec<VertexId>> = vec![(0..n).collect()];
    for d in 0..depth {
        let remaining = depth - d - 1;
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for part in frontier {
            let (a, b) = bisector.bisect(&part, caps[remaining], &mut rng);
            next.push(a);
            next.push(b);
        }
        for (id, part) in next.iter().enumerate() {
            for &v in part {
                node_of[d + 1][v] = id;
            }
        }
        frontier = next;
    }

    let mut step = config.fan_out.trailing_zeros() as usize;
    if config.max_levels > 1 && depth > 0 {
        step = step.max(depth.div_ceil(config.max_levels - 1)).min(3);
    }
    let mut depths = Vec::new();
    let mut d = depth as isize;
    while d > 0 {
        depths.push(d as usize);
        d -= step as isize;
    }
    depths.push(0);

    let levels = depths
        .into_iter()
        .map(|d| renumber(&node_of[d]))
        .collect::<Vec<_>>();
    PartitionHierarchy::new(levels)
}

/// Renumbers ids to 0..k in order of first use by ascending id, dropping gaps.
fn renumber(assignment: &[usize]) -> Vec<usize> {
    let max = assignment.iter().copied().max().map_or(0, |m| m + 1);
    let mut used = vec![false; max];
    for &b in assignment {
        used[b] = true;
    }
    let mut map = vec![usize::MAX; max];
    let mut next = 0;
    for (b, &u) in used.iter().enumerate() {
        if u {
            map[b] = next;
            next += 1;
        }
    }
    assignment.iter().map(|&b| map[b]).collect()
}

struct Bisector<'g> {
    graph: &'g Graph,
    side: Vec<u8>,
    queued: Vec<bool>,
}

const OUTSIDE: u8 = 2;
const TRIALS: usize = 8;
const MAX_PASSES: usize = 8;
/// A pass ends after this many moves without a new best cut.
const STALL_MOVES: usize = 50;

impl<'g> Bisector<'g> {
    fn new(graph: &'g Graph) -> Self {
        let n = graph.vertex_count();
        Bisector { graph, side: vec![OUTSIDE; n], queued: vec![false; n] }
    }

    /// Splits `part` into halves of sizes `ceil(m/2)` and `floor(m/2)`, then
    /// refines while keeping both sides within `cap`.
    fn bisect(&mut self, part: &[VertexId], cap: usize, rng: &mut ChaCha8Rng) -> (Vec<VertexId>, Vec<VertexId>) {
        let m = part.len();
        if m <= 1 {
            return (part.to_vec(), Vec::new());
        }
        let wanted = m.div_ceil(2);
        let trials = if m <= 4 { 1 } else { TRIALS };
        let mut best: Option<(usize, Vec<u8>)> = None;
        for _ in 0..trials {
            let start = part[rng.gen_range(0..m)];
            let seed = self.farthest(part, start);
            let grown = self.grow(part, seed, wanted, rng);
            for &v in part {
                self.side[v] = 1;
            }
            for &v in &grown {
                self.side[v] = 0;
            }
            self.refine(part, cap);
            let cut = self.cut(part);
            if best.as_ref().is_none_or(|(c, _)| cut < *c) {
                best = Some((cut, part.iter().map(|&v| self.side[v]).collect()));
            }
        }
        let (_, sides) = best.expect("at least one trial");
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (&v, &s) in part.iter().zip(&sides) {
            if s == 0 { a.push(v) } else { b.push(v) }
            self.side[v] = OUTSIDE;
        }
        (a, b)
    }

    fn mark_part(&mut self, part: &[VertexId]) {
        for &v in part {
            self.side[v] = 1;
        }
    }

    /// Last vertex reached by a BFS from `start` inside `part`.
    fn farthest(&mut self, part: &[VertexId], start: VertexId) -> VertexId {
        self.mark_part(part);
        let mut queue = VecDeque::from([start]);
        self.queued[start] = true;
        let mut seen = vec![start];
        let mut last = start;
        while let Some(v) = queue.pop_front() {
            last = v;
            for &(w, _) in self.graph.neighbors(v) {
                if self.side[w] == 1 && !self.queued[w] {
                    self.queued[w] = true;
                    seen.push(w);
                    queue.push_back(w);
                }
            }
        }
        for v in seen {
            self.queued[v] = false;
        }
        for &v in part {
            self.side[v] = OUTSIDE;
        }
        last
    }

    /// BFS order from `seed` restricted to `part`, truncated to `wanted`
    /// vertices; jumps to a random unvisited vertex when a component runs out.
    fn grow(&mut self, part: &[VertexId], seed: VertexId, wanted: usize, rng: &mut ChaCha8Rng) -> Vec<VertexId> {
        self.mark_part(part);
        let mut order = Vec::with_capacity(wanted);
        let mut queue = VecDeque::from([seed]);
        self.queued[seed] = true;
        let mut touched = vec![seed];
        let mut pool: Vec<VertexId> = part.to_vec();
        pool.shuffle(rng);
        while order.len() < wanted {
            let v = match queue.pop_front() {
                Some(v) => v,
                None => {
                    let next = pool.iter().copied().find(|&v| !self.queued[v]).expect("part not exhausted");
                    self.queued[next] = true;
                    touched.push(next);
                    next
                }
            };
            order.push(v);
            for &(w, _) in self.graph.neighbors(v) {
                if self.side[w] == 1 && !self.queued[w] {
                    self.queued[w] = true;
                    touched.push(w);
                    queue.push_back(w);
                }
            }
        }
        for v in touched {
            self.queued[v] = false;
        }
        order
    }

    fn cut(&self, part: &[VertexId]) -> usize {
        part.iter()
            .map(|&v| {
                self.graph
                    .neighbors(v)
                    .iter()
                    .filter(|&&(w, _)| self.side[w] != OUTSIDE && self.side[w] != self.side[v])
                    .count()
            })
            .sum::<usize>()
            / 2
    }

    /// Cut gain of moving `v` to the other side.
    fn gain(&self, v: VertexId) -> isize {
        let own = self.side[v];
        self.graph
            .neighbors(v)
            .iter()
            .map(|&(w, _)| match self.side[w] {
                OUTSIDE => 0,
                s if s == own => -1,
                _ => 1,
            })
            .sum()
    }

    /// Fiduccia-Mattheyses passes: repeatedly move the unlocked vertex of
    /// highest gain whose target side stays within `cap`, then roll back to
    /// the best cut seen during the pass.
    fn refine(&mut self, part: &[VertexId], cap: usize) {
        let mut size = [0usize; 2];
        for &v in part {
            size[self.side[v] as usize] += 1;
        }
        let mut locked = vec![false; self.graph.vertex_count()];
        for _pass in 0..MAX_PASSES {
            let mut heap: BinaryHeap<(isize, Reverse<VertexId>)> =
                part.iter().map(|&v| (self.gain(v), Reverse(v))).collect();
            let mut moves = Vec::new();
            let (mut cut_delta, mut best_delta, mut best_len) = (0isize, 0isize, 0usize);
            while let Some((g, Reverse(v))) = heap.pop() {
                if locked[v] {
                    continue;
                }
                let current = self.gain(v);
                if current != g {
                    heap.push((current, Reverse(v)));
                    continue;
                }
                let own = self.side[v] as usize;
                if size[1 - own] >= cap || size[own] <= 1 {
                    continue;
                }
                self.side[v] = 1 - own as u8;
                size[own] -= 1;
                size[1 - own] += 1;
                locked[v] = true;
                moves.push(v);
                cut_delta -= g;
                if cut_delta < best_delta {
                    best_delta = cut_delta;
                    best_len = moves.len();
                }
                if moves.len() - best_len > STALL_MOVES {
                    break;
                }
                for &(w, _) in self.graph.neighbors(v) {
                    if self.side[w] != OUTSIDE && !locked[w] {
                        heap.push((self.gain(w), Reverse(w)));
                    }
                }
            }
            for &v in &moves[best_len..] {
                let own = self.side[v] as usize;
                self.side[v] = 1 - own as u8;
                size[own] -= 1;
                size[1 - own] += 1;
            }
            for &v in &moves {
                locked[v] = false;
            }
            if best_len == 0 {
                break;
            }
        }
    }
}

/// Reads a hierarchy file: one line of block ids per level, finest first.
/// A single-block top level is appended when missing.
pub fn import_hierarchy<R: BufRead>(reader: R, graph: &Graph) -> Result<PartitionHierarchy> {
    let n = graph.vertex_count();
    let mut levels = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let ids = t
            .split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|_| Error::Parse { line: i + 1, msg: format!("bad block id `{tok}`") })
            })
            .collect::<Result<Vec<_>>>()?;
        if ids.len() != n {
            return Err(Error::InvalidHierarchy(format!(
                "line {} lists {} block ids for a graph with {n} vertices",
                i + 1,
                ids.len()
            )));
        }
        levels.push(ids);
    }
    let needs_top = match levels.last() {
        None => true,
        Some(last) => last.iter().any(|&b| b != last[0]),
    };
    if needs_top {
        levels.push(vec![0; n]);
    }
    PartitionHierarchy::new(levels)
}

pub fn write_hierarchy<W: Write>(hierarchy: &PartitionHierarchy, mut out: W) -> Result<()> {
    for level in hierarchy.levels() {
        let line = level.iter().map(|b| b.to_string()).collect::<Vec<_>>().join(" ");
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Boundary nodes of a block: its members that are the source, the target,
/// or adjacent to a vertex outside the block. Ascending order.
pub fn boundary_nodes(
    graph: &Graph,
    hierarchy: &PartitionHierarchy,
    level: usize,
    block: usize,
    instance: &Instance,
) -> Vec<VertexId> {
    let assignment = hierarchy.assignment(level);
    (0..graph.vertex_count())
        .filter(|&v| assignment[v] == block)
        .filter(|&v| {
            v == instance.source
                || v == instance.target
                || graph.neighbors(v).iter().any(|&(w, _)| assignment[w] != block)
        })
        .collect()
}

/// A random valid hierarchy with `extra_levels` levels below the top.
///
/// Level 0 assigns vertices to up to `leaf_blocks` random blocks; each coarser
/// level merges random groups of the blocks below.
pub fn random_hierarchy<R: Rng>(n: usize, leaf_blocks: usize, extra_levels: usize, rng: &mut R) -> PartitionHierarchy {
    if extra_levels == 0 || n == 0 {
        return PartitionHierarchy::single_block(n);
    }
    let k = leaf_blocks.clamp(1, n);
    let mut level0: Vec<usize> = (0..n).map(|v| if v < k { v } else { rng.gen_range(0..k) }).collect();
    level0.shuffle(rng);
    let mut levels = vec![renumber(&level0)];
    for _ in 1..extra_levels {
        let below = levels.last().unwrap();
        let count = below.iter().max().unwrap() + 1;
        let groups = rng.gen_range(1..=count);
        let mut map: Vec<usize> = (0..count).map(|b| if b < groups { b } else { rng.gen_range(0..groups) }).collect();
        map.shuffle(rng);
        let next = renumber(&below.iter().map(|&b| map[b]).collect::<Vec<_>>());
        levels.push(next);
    }
    levels.push(vec![0; n]);
    levels.dedup();
    PartitionHierarchy::new(levels).expect("random hierarchy is nested")
}
