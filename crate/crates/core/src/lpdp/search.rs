//! Multi-path exhaustive search over an auxiliary graph.
//!
//! The search grows vertex-disjoint paths one after another. A path starts at
//! a boundary node of the block and may be completed at any boundary node of
//! higher rank; the next path must start at a higher rank than the previous
//! start. Every completed configuration is a candidate for the block table,
//! extended by every admissible set of zero-length paths on untouched
//! boundary nodes.
//!
//! Each step updates the pair set induced on one child block and is rejected
//! when the child table has no solution for it; extensions of an unsolvable
//! pair set stay unsolvable.

use std::sync::atomic::{AtomicU8, AtomicUsize, Ordering};
use std::time::Instant;

use super::auxiliary::{AuxEdge, AuxiliaryGraph, EdgeKind, NO_RANK};
use super::table::{BlockSolutionTable, ConcurrentTable, Insert, PathPack};
use crate::error::Error;

const NO_MATE: u32 = u32::MAX;
const CLOCK_INTERVAL: u64 = 1 << 12;

/// Lookup handle for one child block.
#[derive(Debug, Clone, Copy)]
pub enum ChildTable<'a> {
    /// Single vertex below a level-0 block: only trivial pair sets exist.
    Singleton,
    Table(&'a BlockSolutionTable),
}

impl ChildTable<'_> {
    #[inline]
    fn lookup(&self, key: &[u8]) -> Option<f64> {
        match self {
            ChildTable::Singleton => Some(0.0),
            ChildTable::Table(t) => t.lookup(key),
        }
    }
}

const RUNNING: u8 = 0;
const DEADLINE: u8 = 1;
const ENTRY_BUDGET: u8 = 2;
const CANCELLED: u8 = 3;

/// Deadline, table size budget and cancellation shared by all searches of
/// one solve.
#[derive(Debug, Default)]
pub struct SearchControl {
    deadline: Option<Instant>,
    entry_budget: Option<usize>,
    entries: AtomicUsize,
    stop: AtomicU8,
}

impl SearchControl {
    pub fn new(deadline: Option<Instant>) -> Self {
        SearchControl { deadline, ..Default::default() }
    }

    /// Aborts once more than `budget` table entries were created in total.
    pub fn with_entry_budget(mut self, budget: Option<usize>) -> Self {
        self.entry_budget = budget;
        self
    }

    fn halt(&self, reason: u8) {
        let _ = self.stop.compare_exchange(RUNNING, reason, Ordering::Relaxed, Ordering::Relaxed);
    }

    pub fn cancel(&self) {
        self.halt(CANCELLED);
    }

    pub fn is_cancelled(&self) -> bool {
        self.stop.load(Ordering::Relaxed) != RUNNING
    }

    /// Error describing why the solve stopped.
    pub fn error(&self) -> Error {
        match self.stop.load(Ordering::Relaxed) {
            ENTRY_BUDGET => Error::TableLimit(self.entry_budget.unwrap_or(0)),
            _ => Error::Timeout,
        }
    }

    pub fn entries_created(&self) -> usize {
        self.entries.load(Ordering::Relaxed)
    }

    /// Counts a new table entry; true if the budget is now exceeded.
    fn add_entry(&self) -> bool {
        let n = self.entries.fetch_add(1, Ordering::Relaxed) + 1;
        if self.entry_budget.is_some_and(|b| n > b) {
            self.halt(ENTRY_BUDGET);
            return true;
        }
        false
    }

    fn poll(&self) -> bool {
        if self.is_cancelled() {
            return true;
        }
        if self.deadline.is_some_and(|d| Instant::now() >= d) {
            self.halt(DEADLINE);
            return true;
        }
        false
    }
}

/// A completed configuration offered to a sink.
pub struct Candidate<'a> {
    /// Packed pair set over the block's boundary ranks.
    pub key: &'a [u8],
    pub weight: f64,
    aux: &'a AuxiliaryGraph,
    trail: &'a [u32],
    path_starts: &'a [u32],
}

impl Candidate<'_> {
    /// The realizing paths in global vertex ids, one per proper pair.
    pub fn paths(&self) -> PathPack {
        let mut buf = Vec::with_capacity(self.trail.len() + self.path_starts.len());
        for (i, &start) in self.path_starts.iter().enumerate() {
            let end = self.path_starts.get(i + 1).map_or(self.trail.len(), |&e| e as usize);
            buf.extend(self.trail[start as usize..end].iter().map(|&l| self.aux.vertices[l as usize] as u32));
            buf.push(u32::MAX);
        }
        PathPack::from_raw(buf)
    }

    /// Pairs `(start rank, end rank)` of the proper pairs, in start order.
    pub fn matching(&self) -> Vec<(u8, u8)> {
        self.key.chunks_exact(2).filter(|c| c[0] != c[1]).map(|c| (c[0], c[1])).collect()
    }
}

pub trait CandidateSink {
    fn offer(&mut self, candidate: &Candidate<'_>) -> Insert;
}

impl CandidateSink for BlockSolutionTable {
    fn offer(&mut self, c: &Candidate<'_>) -> Insert {
        self.insert_if_better(c.key, c.weight, || c.paths())
    }
}

impl CandidateSink for &ConcurrentTable {
    fn offer(&mut self, c: &Candidate<'_>) -> Insert {
        self.insert_if_better(c.key, c.weight, || c.paths())
    }
}

/// Collects every candidate; used by tests.
impl CandidateSink for Vec<(Vec<u8>, f64)> {
    fn offer(&mut self, c: &Candidate<'_>) -> Insert {
        self.push((c.key.to_vec(), c.weight));
        Insert::Rejected
    }
}

/// Complete mutable state of the search between two calls.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchState {
    marked: Vec<bool>,
    /// Per local vertex: `NO_MATE`, itself (zero-length path inside its child)
    /// or the other end of the child-clique edge used at it.
    mate: Vec<u32>,
    child_weight: Vec<f64>,
    child_sum: f64,
    edge_weight: f64,
    trail: Vec<u32>,
    path_starts: Vec<u32>,
    pairs: Vec<(u8, u8)>,
    active_start: u32,
}

impl SearchState {
    pub fn new(aux: &AuxiliaryGraph) -> Self {
        let n = aux.vertex_count();
        SearchState {
            marked: vec![false; n],
            mate: vec![NO_MATE; n],
            child_weight: vec![0.0; aux.children.len()],
            child_sum: 0.0,
            edge_weight: 0.0,
            trail: Vec::with_capacity(n),
            path_starts: Vec::new(),
            pairs: Vec::new(),
            active_start: u32::MAX,
        }
    }

    /// Local ids of the vertices on the paths so far, in visiting order.
    pub fn trail(&self) -> &[u32] {
        &self.trail
    }

    pub fn marked_count(&self) -> usize {
        self.trail.len()
    }

    /// Total weight of the current configuration.
    pub fn weight(&self) -> f64 {
        self.edge_weight + self.child_sum
    }
}

/// Search state frozen at the recursion-depth cutoff together with the
/// vertex whose call was deferred; resuming runs that call's whole subtree.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchContext {
    pub state: SearchState,
    pub vertex: u32,
    pub depth: usize,
}

struct Undo {
    vertex: u32,
    /// vertex whose mate changed besides `vertex` (the clique partner)
    partner: u32,
    child: u32,
    old_child_weight: f64,
    edge_weight: f64,
    prev_start: u32,
    started: bool,
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct SearchStats {
    /// Successful calls (vertex entered with every child pair set solvable).
    pub nodes: u64,
    pub candidates: u64,
    pub branches: u64,
}

pub struct Search<'a, S> {
    aux: &'a AuxiliaryGraph,
    children: &'a [ChildTable<'a>],
    control: &'a SearchControl,
    pub sink: S,
    state: SearchState,
    depth_limit: Option<usize>,
    branches: Vec<BranchContext>,
    key_buf: Vec<u8>,
    pair_buf: Vec<(u8, u8)>,
    free_buf: Vec<u32>,
    singles: Vec<u8>,
    stats: SearchStats,
    ticks: u64,
    aborted: bool,
}

impl<'a, S: CandidateSink> Search<'a, S> {
    pub fn new(aux: &'a AuxiliaryGraph, children: &'a [ChildTable<'a>], control: &'a SearchControl, sink: S) -> Self {
        assert_eq!(children.len(), aux.children.len(), "one lookup handle per child");
        Search {
            aux,
            children,
            control,
            sink,
            state: SearchState::new(aux),
            depth_limit: None,
            branches: Vec::new(),
            key_buf: Vec::new(),
            pair_buf: Vec::new(),
            free_buf: Vec::new(),
            singles: Vec::new(),
            stats: SearchStats::default(),
            ticks: 0,
            aborted: false,
        }
    }

    pub fn stats(&self) -> SearchStats {
        self.stats
    }

    pub fn aborted(&self) -> bool {
        self.aborted
    }

    pub fn into_sink(self) -> S {
        self.sink
    }

    /// Runs the search from every boundary node but the last.
    pub fn run(&mut self) {
        self.depth_limit = None;
        self.run_roots();
    }

    /// Runs the search, deferring every call at `depth_limit` as a branch.
    /// Candidates found above the cutoff go to the sink directly.
    pub fn enumerate(&mut self, depth_limit: usize) -> Vec<BranchContext> {
        assert!(depth_limit >= 1, "depth limit must be at least 1");
        self.depth_limit = Some(depth_limit);
        self.run_roots();
        self.depth_limit = None;
        std::mem::take(&mut self.branches)
    }

    /// Runs one deferred branch to completion.
    pub fn resume(&mut self, branch: BranchContext) {
        self.depth_limit = None;
        self.state = branch.state;
        self.visit(branch.vertex, branch.depth);
    }

    fn run_roots(&mut self) {
        let roots = self.aux.block_boundary.len().saturating_sub(1);
        for r in 0..roots {
            let a = self.aux.block_boundary[r];
            self.call_start(a, 0);
            if self.aborted {
                return;
            }
        }
    }

    fn tick(&mut self) {
        self.ticks += 1;
        if self.ticks.is_multiple_of(CLOCK_INTERVAL) && self.control.poll() {
            self.aborted = true;
        }
    }

    /// Recomputes the pair set induced on child `c`; on success updates the
    /// running weight and returns the previous child weight.
    fn refresh_child(&mut self, c: u32) -> Option<f64> {
        let handle = self.children[c as usize];
        if let ChildTable::Singleton = handle {
            return Some(0.0);
        }
        let child = &self.aux.children[c as usize];
        self.key_buf.clear();
        for (j, &v) in child.boundary.iter().enumerate() {
            let m = self.state.mate[v as usize];
            if m == NO_MATE {
                continue;
            }
            if m == v {
                self.key_buf.extend_from_slice(&[j as u8, j as u8]);
            } else {
                let k = self.aux.rank_in_child[m as usize];
                if (j as u8) < k {
                    self.key_buf.extend_from_slice(&[j as u8, k]);
                }
            }
        }
        let weight = handle.lookup(&self.key_buf)?;
        let st = &mut self.state;
        let old = st.child_weight[c as usize];
        st.child_weight[c as usize] = weight;
        st.child_sum += weight - old;
        Some(old)
    }

    fn restore_child(&mut self, c: u32, old: f64) {
        let st = &mut self.state;
        st.child_sum += old - st.child_weight[c as usize];
        st.child_weight[c as usize] = old;
    }

    fn try_start(&mut self, w: u32) -> Option<Undo> {
        let st = &mut self.state;
        st.marked[w as usize] = true;
        st.mate[w as usize] = w;
        st.trail.push(w);
        st.path_starts.push((st.trail.len() - 1) as u32);
        let prev_start = std::mem::replace(&mut st.active_start, w);
        let child = self.aux.child_of[w as usize];
        let undo = Undo { vertex: w, partner: NO_MATE, child, old_child_weight: 0.0, edge_weight: 0.0, prev_start, started: true };
        match self.refresh_child(child) {
            Some(old) => Some(Undo { old_child_weight: old, ..undo }),
            None => {
                self.rollback(&undo, false);
                None
            }
        }
    }

    fn try_extend(&mut self, v: u32, e: AuxEdge) -> Option<Undo> {
        let w = e.to;
        let st = &mut self.state;
        let (child, partner, edge_weight) = match e.kind {
            EdgeKind::Clique => {
                if st.mate[v as usize] != v {
                    return None;
                }
                st.mate[v as usize] = w;
                st.mate[w as usize] = v;
                (self.aux.child_of[v as usize], v, 0.0)
            }
            EdgeKind::Boundary => {
                st.mate[w as usize] = w;
                st.edge_weight += e.weight;
                (self.aux.child_of[w as usize], NO_MATE, e.weight)
            }
        };
        st.marked[w as usize] = true;
        st.trail.push(w);
        let undo = Undo { vertex: w, partner, child, old_child_weight: 0.0, edge_weight, prev_start: 0, started: false };
        match self.refresh_child(child) {
            Some(old) => Some(Undo { old_child_weight: old, ..undo }),
            None => {
                self.rollback(&undo, false);
                None
            }
        }
    }

    fn rollback(&mut self, undo: &Undo, child_updated: bool) {
        if child_updated {
            self.restore_child(undo.child, undo.old_child_weight);
        }
        let st = &mut self.state;
        st.marked[undo.vertex as usize] = false;
        st.mate[undo.vertex as usize] = NO_MATE;
        if undo.partner != NO_MATE {
            st.mate[undo.partner as usize] = undo.partner;
        }
        st.edge_weight -= undo.edge_weight;
        st.trail.pop();
        if undo.started {
            st.path_starts.pop();
            st.active_start = undo.prev_start;
        }
    }

    fn dispatch(&mut self, w: u32, depth: usize) {
        if self.depth_limit == Some(depth) {
            self.stats.branches += 1;
            self.branches.push(BranchContext { state: self.state.clone(), vertex: w, depth });
        } else {
            self.visit(w, depth);
        }
    }

    fn call_start(&mut self, w: u32, depth: usize) {
        if let Some(undo) = self.try_start(w) {
            self.dispatch(w, depth);
            self.rollback(&undo, true);
        }
    }

    fn call_extend(&mut self, v: u32, e: AuxEdge, depth: usize) {
        if let Some(undo) = self.try_extend(v, e) {
            self.dispatch(e.to, depth);
            self.rollback(&undo, true);
        }
    }

    fn visit(&mut self, v: u32, depth: usize) {
        if self.aborted {
            return;
        }
        self.stats.nodes += 1;
        self.tick();
        let aux = self.aux;
        let rank = aux.block_rank[v as usize];
        let a = self.state.active_start;
        let start_rank = aux.block_rank[a as usize];
        if rank != NO_RANK && rank > start_rank {
            self.state.pairs.push((start_rank as u8, rank as u8));
            self.emit();
            for r in start_rank as usize + 1..aux.block_boundary.len() {
                let w = aux.block_boundary[r];
                if !self.state.marked[w as usize] {
                    self.call_start(w, depth + 1);
                }
            }
            self.state.pairs.pop();
        }
        for &e in &aux.adjacency[v as usize] {
            if !self.state.marked[e.to as usize] {
                self.call_extend(v, e, depth + 1);
            }
        }
    }

    /// Offers the completed configuration with every admissible set of
    /// zero-length paths on untouched boundary nodes.
    fn emit(&mut self) {
        debug_assert!(self.state.pairs.windows(2).all(|p| p[0].0 < p[1].0), "path starts must increase");
        debug_assert!(self.state.pairs.iter().all(|&(a, b)| a < b), "paths end above their start");
        self.free_buf.clear();
        for &b in &self.aux.block_boundary {
            if !self.state.marked[b as usize] {
                self.free_buf.push(b);
            }
        }
        self.singles.clear();
        self.emit_singletons(0);
    }

    fn emit_singletons(&mut self, i: usize) {
        if self.aborted {
            return;
        }
        if i == self.free_buf.len() {
            self.offer();
            return;
        }
        self.emit_singletons(i + 1);
        let x = self.free_buf[i];
        let child = self.aux.child_of[x as usize];
        self.state.mate[x as usize] = x;
        if let Some(old) = self.refresh_child(child) {
            self.singles.push(self.aux.block_rank[x as usize] as u8);
            self.emit_singletons(i + 1);
            self.singles.pop();
            self.restore_child(child, old);
        }
        self.state.mate[x as usize] = NO_MATE;
    }

    fn offer(&mut self) {
        self.stats.candidates += 1;
        self.tick();
        self.pair_buf.clear();
        self.pair_buf.extend_from_slice(&self.state.pairs);
        self.pair_buf.extend(self.singles.iter().map(|&r| (r, r)));
        self.pair_buf.sort_unstable();
        self.key_buf.clear();
        for &(a, b) in &self.pair_buf {
            self.key_buf.push(a);
            self.key_buf.push(b);
        }
        let candidate = Candidate {
            key: &self.key_buf,
            weight: self.state.weight(),
            aux: self.aux,
            trail: &self.state.trail,
            path_starts: &self.state.path_starts,
        };
        if self.sink.offer(&candidate) == Insert::Added && self.control.add_entry() {
            self.aborted = true;
        }
    }
}
