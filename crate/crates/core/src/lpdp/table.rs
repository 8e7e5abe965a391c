use std::fmt::Write as _;

use dashmap::DashMap;
use rustc_hash::{FxBuildHasher, FxHashMap};

use crate::graph::VertexId;
use crate::pair_sets::{decode_key, key_is_trivial, PairKey};

const SEPARATOR: u32 = u32::MAX;

/// Vertex sequences of the paths realizing a table entry, packed into one
/// buffer. For level-0 blocks these are paths of the original graph; above,
/// consecutive vertices in the same child block stand for a path through it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PathPack(Box<[u32]>);

impl PathPack {
    pub fn from_paths<'a, I>(paths: I) -> Self
    where
        I: IntoIterator<Item = &'a [VertexId]>,
    {
        let mut buf = Vec::new();
        for p in paths {
            buf.extend(p.iter().map(|&v| v as u32));
            buf.push(SEPARATOR);
        }
        PathPack(buf.into_boxed_slice())
    }

    pub(crate) fn from_raw(buf: Vec<u32>) -> Self {
        PathPack(buf.into_boxed_slice())
    }

    pub fn paths(&self) -> impl Iterator<Item = Vec<VertexId>> + '_ {
        self.0
            .split(|&x| x == SEPARATOR)
            .filter(|p| !p.is_empty())
            .map(|p| p.iter().map(|&v| v as VertexId).collect())
    }
}

/// Outcome of an insert-if-better.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Insert {
    Rejected,
    Replaced,
    Added,
}

/// Best known solution for one pair set.
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionEntry {
    pub weight: f64,
    pub paths: PathPack,
}

/// Optimal path systems of one block, keyed by packed pair set.
///
/// Pair sets without a proper pair are not stored; [`lookup`](Self::lookup)
/// answers them with weight 0.
#[derive(Debug, Clone)]
pub struct BlockSolutionTable {
    pub level: usize,
    pub block: usize,
    /// The block's boundary nodes, ascending; key bytes index into this list.
    pub boundary: Vec<VertexId>,
    entries: FxHashMap<PairKey, SolutionEntry>,
}

impl BlockSolutionTable {
    pub fn new(level: usize, block: usize, boundary: Vec<VertexId>) -> Self {
        BlockSolutionTable { level, block, boundary, entries: FxHashMap::default() }
    }

    /// Weight of the best solution for `key`, or `None` if unsolvable.
    #[inline]
    pub fn lookup(&self, key: &[u8]) -> Option<f64> {
        if key_is_trivial(key) {
            return Some(0.0);
        }
        self.entries.get(key).map(|e| e.weight)
    }

    pub fn get(&self, key: &[u8]) -> Option<&SolutionEntry> {
        self.entries.get(key)
    }

    /// Stores the candidate unless an entry at least as heavy exists.
    pub fn insert_if_better(&mut self, key: &[u8], weight: f64, paths: impl FnOnce() -> PathPack) -> Insert {
        if key_is_trivial(key) {
            return Insert::Rejected;
        }
        match self.entries.get_mut(key) {
            Some(e) if weight <= e.weight => Insert::Rejected,
            Some(e) => {
                *e = SolutionEntry { weight, paths: paths() };
                Insert::Replaced
            }
            None => {
                self.entries.insert(key.into(), SolutionEntry { weight, paths: paths() });
                Insert::Added
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PairKey, &SolutionEntry)> {
        self.entries.iter()
    }

    /// `(key, weight)` pairs sorted by key.
    pub fn weights(&self) -> Vec<(PairKey, f64)> {
        let mut out: Vec<_> = self.entries.iter().map(|(k, e)| (k.clone(), e.weight)).collect();
        out.sort_by(|a, b| a.0.cmp(&b.0));
        out
    }

    /// Text dump, one `P -> weight` line per entry in key order.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (key, weight) in self.weights() {
            let _ = writeln!(out, "{} -> {weight}", decode_key(&key, &self.boundary));
        }
        out
    }

    pub(crate) fn from_concurrent(level: usize, block: usize, boundary: Vec<VertexId>, shared: ConcurrentTable) -> Self {
        let entries = shared.map.into_iter().collect();
        BlockSolutionTable { level, block, boundary, entries }
    }
}

/// Table under construction by several threads. Updates only succeed with a
/// strictly greater weight, so concurrent writers converge to the maximum.
pub struct ConcurrentTable {
    map: DashMap<PairKey, SolutionEntry, FxBuildHasher>,
}

impl Default for ConcurrentTable {
    fn default() -> Self {
        ConcurrentTable { map: DashMap::with_hasher(FxBuildHasher) }
    }
}

impl ConcurrentTable {
    pub fn insert_if_better(&self, key: &[u8], weight: f64, paths: impl FnOnce() -> PathPack) -> Insert {
        if key_is_trivial(key) {
            return Insert::Rejected;
        }
        if let Some(e) = self.map.get(key) {
            if weight <= e.weight {
                return Insert::Rejected;
            }
        }
        match self.map.entry(key.into()) {
            dashmap::Entry::Occupied(mut o) => {
                if weight > o.get().weight {
                    o.insert(SolutionEntry { weight, paths: paths() });
                    Insert::Replaced
                } else {
                    Insert::Rejected
                }
            }
            dashmap::Entry::Vacant(v) => {
                v.insert(SolutionEntry { weight, paths: paths() });
                Insert::Added
            }
        }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    /// Copy of the current entries.
    pub fn snapshot(&self) -> ConcurrentTable {
        ConcurrentTable { map: self.map.clone() }
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}
