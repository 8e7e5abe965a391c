//! Reference solvers: exhaustive depth-first search and depth-first branch
//! and bound.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::graph::{Instance, PathResult, VertexId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Solved,
    Timeout,
    NoPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverStats {
    pub expanded_states: u64,
    pub best_updates: u64,
    pub wall_time: Duration,
    pub status: SolveStatus,
}

pub struct SolveReport {
    pub result: Result<PathResult>,
    pub stats: SolverStats,
}

const CLOCK_INTERVAL: u64 = 1 << 12;

struct Dfs<'a> {
    instance: &'a Instance,
    marked: Vec<bool>,
    path: Vec<VertexId>,
    weight: f64,
    best: Option<PathResult>,
    expanded: u64,
    updates: u64,
    deadline: Option<Instant>,
    timed_out: bool,
    bounded: bool,
    // scratch for the bound computation
    seen: Vec<u32>,
    stamp: u32,
    stack: Vec<VertexId>,
}

impl<'a> Dfs<'a> {
    fn new(instance: &'a Instance, limit: Option<Duration>, bounded: bool) -> Self {
        let n = instance.graph.vertex_count();
        Dfs {
            instance,
            marked: vec![false; n],
            path: Vec::with_capacity(n),
            weight: 0.0,
            best: None,
            expanded: 0,
            updates: 0,
            deadline: limit.map(|d| Instant::now() + d),
            timed_out: false,
            bounded,
            seen: vec![0; n],
            stamp: 0,
            stack: Vec::new(),
        }
    }

    fn out_of_time(&mut self) -> bool {
        if self.timed_out {
            return true;
        }
        if self.expanded.is_multiple_of(CLOCK_INTERVAL) {
            if let Some(deadline) = self.deadline {
                self.timed_out = Instant::now() >= deadline;
            }
        }
        self.timed_out
    }

    /// Total weight of the edges reachable from `v` through unmarked vertices,
    /// or `None` when the target cannot be reached that way.
    fn remaining_bound(&mut self, v: VertexId) -> Option<f64> {
        let graph = &self.instance.graph;
        let target = self.instance.target;
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.seen.fill(0);
            self.stamp = 1;
        }
        let stamp = self.stamp;
        self.seen[v] = stamp;
        self.stack.clear();
        self.stack.push(v);
        let mut doubled = 0.0;
        let mut reached = false;
        while let Some(x) = self.stack.pop() {
            for &(y, w) in graph.neighbors(x) {
                if self.marked[y] {
                    // only the current vertex may be marked inside the region
                    if x != v && y == v {
                        doubled += w;
                    }
                    continue;
                }
                doubled += w;
                if self.seen[y] != stamp {
                    self.seen[y] = stamp;
                    if y == target {
                        reached = true;
                    }
                    self.stack.push(y);
                }
            }
        }
        // edges between unmarked vertices were seen from both ends, edges at v
        // once from v and once from the other end
        reached.then_some(doubled / 2.0)
    }

    fn visit(&mut self, v: VertexId) {
        if self.marked[v] || self.out_of_time() {
            return;
        }
        self.expanded += 1;
        if v == self.instance.target {
            if self.best.as_ref().is_none_or(|b| self.weight > b.weight) {
                self.best = Some(PathResult { vertices: self.path.clone(), weight: self.weight });
                self.updates += 1;
            }
            if self.bounded {
                return;
            }
        } else if self.bounded {
            self.marked[v] = true;
            let bound = self.remaining_bound(v);
            self.marked[v] = false;
            match (bound, &self.best) {
                (None, _) => return,
                (Some(b), Some(best)) if self.weight + b <= best.weight => return,
                _ => {}
            }
        }
        self.marked[v] = true;
        let graph = &self.instance.graph;
        for i in 0..graph.degree(v) {
            let (w, weight) = graph.neighbors(v)[i];
            if self.marked[w] {
                continue;
            }
            self.path.push(w);
            self.weight += weight;
            self.visit(w);
            self.weight -= weight;
            self.path.pop();
        }
        self.marked[v] = false;
    }

    fn run(mut self) -> SolveReport {
        let start = Instant::now();
        let s = self.instance.source;
        self.path.push(s);
        self.visit(s);
        let status = if self.timed_out {
            SolveStatus::Timeout
        } else if self.best.is_some() {
            SolveStatus::Solved
        } else {
            SolveStatus::NoPath
        };
        let result = match status {
            SolveStatus::Solved => Ok(self.best.take().expect("solved")),
            SolveStatus::Timeout => Err(Error::Timeout),
            SolveStatus::NoPath => Err(Error::NoPath { from: s, to: self.instance.target }),
        };
        SolveReport {
            result,
            stats: SolverStats {
                expanded_states: self.expanded,
                best_updates: self.updates,
                wall_time: start.elapsed(),
                status,
            },
        }
    }
}

/// Enumerates every simple path from the source, unmarking vertices on
/// backtrack, and keeps the heaviest one ending at the target.
pub fn exhaustive_dfs(instance: &Instance, limit: Option<Duration>) -> SolveReport {
    Dfs::new(instance, limit, false).run()
}

/// Exhaustive search that prunes a branch when the current weight plus the
/// weight of all edges still reachable through unvisited vertices cannot beat
/// the incumbent, or when the target is no longer reachable.
pub fn dfbnb(instance: &Instance, limit: Option<Duration>) -> SolveReport {
    Dfs::new(instance, limit, true).run()
}
