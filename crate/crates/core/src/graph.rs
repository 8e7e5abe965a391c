//! Undirected weighted graphs, problem instances and path checking.
//!
//! Graphs are read and written in the METIS adjacency format: a header line
//! `n m fmt` followed by one line per vertex listing its neighbors (1-indexed)
//! and, when `fmt = 1`, the weight of each incident edge. Lines starting with
//! `%` are comments. Internally vertices are numbered from 0.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

pub type VertexId = usize;

/// An undirected graph with non-negative edge weights.
///
/// Every edge is stored in the adjacency lists of both of its endpoints with
/// the same weight. Adjacency lists are sorted by neighbor id.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    adjacency: Vec<Vec<(VertexId, f64)>>,
    edge_count: usize,
}

impl Graph {
    /// Graph without edges.
    pub fn empty(vertex_count: usize) -> Self {
        Graph { adjacency: vec![Vec::new(); vertex_count], edge_count: 0 }
    }

    /// Builds a graph from an undirected edge list.
    ///
    /// Parallel edges collapse to the heaviest one (a warning is logged).
    pub fn from_edges<I>(vertex_count: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (VertexId, VertexId, f64)>,
    {
        let mut unique: BTreeMap<(VertexId, VertexId), f64> = BTreeMap::new();
        let mut collapsed = 0usize;
        for (u, v, w) in edges {
            for x in [u, v] {
                if x >= vertex_count {
                    return Err(Error::VertexOutOfRange { vertex: x, count: vertex_count });
                }
            }
            if u == v {
                return Err(Error::SelfLoop(u));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::NegativeWeight { u, v, weight: w });
            }
            let key = (u.min(v), u.max(v));
            match unique.get_mut(&key) {
                Some(old) => {
                    collapsed += 1;
                    if w > *old {
                        *old = w;
                    }
                }
                None => {
                    unique.insert(key, w);
                }
            }
        }
        if collapsed > 0 {
            log::warn!("collapsed {collapsed} parallel edge(s) to their maximum weight");
        }
        let mut adjacency = vec![Vec::new(); vertex_count];
        for (&(u, v), &w) in &unique {
            adjacency[u].push((v, w));
            adjacency[v].push((u, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(v, _)| v);
        }
        Ok(Graph { adjacency, edge_count: unique.len() })
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    #[inline]
    pub fn neighbors(&self, v: VertexId) -> &[(VertexId, f64)] {
        &self.adjacency[v]
    }

    #[inline]
    pub fn degree(&self, v: VertexId) -> usize {
        self.adjacency[v].len()
    }

    pub fn weight(&self, u: VertexId, v: VertexId) -> Option<f64> {
        let list = self.adjacency.get(u)?;
        list.binary_search_by_key(&v, |&(x, _)| x).ok().map(|i| list[i].1)
    }

    pub fn has_edge(&self, u: VertexId, v: VertexId) -> bool {
        self.weight(u, v).is_some()
    }

    /// Each undirected edge once, as `(u, v, w)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(u, list)| {
            list.iter().filter(move |&&(v, _)| u < v).map(move |&(v, w)| (u, v, w))
        })
    }

    pub fn total_weight(&self) -> f64 {
        self.edges().map(|(_, _, w)| w).sum()
    }

    /// Subgraph induced by `vertices`; vertex `i` of the result is `vertices[i]`.
    pub fn induced_subgraph(&self, vertices: &[VertexId]) -> Graph {
        let mut local = vec![usize::MAX; self.vertex_count()];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i;
        }
        let mut adjacency = vec![Vec::new(); vertices.len()];
        let mut edge_count = 0;
        for (i, &v) in vertices.iter().enumerate() {
            for &(w, weight) in self.neighbors(v) {
                let j = local[w];
                if j != usize::MAX {
                    adjacency[i].push((j, weight));
                    if i < j {
                        edge_count += 1;
                    }
                }
            }
            adjacency[i].sort_by_key(|&(x, _)| x);
        }
        Graph { adjacency, edge_count }
    }

    /// Connected component id per vertex, numbered in order of smallest member.
    pub fn components(&self) -> Vec<usize> {
        let n = self.vertex_count();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        let mut stack = Vec::new();
        for root in 0..n {
            if comp[root] != usize::MAX {
                continue;
            }
            comp[root] = next;
            stack.push(root);
            while let Some(v) = stack.pop() {
                for &(w, _) in self.neighbors(v) {
                    if comp[w] == usize::MAX {
                        comp[w] = next;
                        stack.push(w);
                    }
                }
            }
            next += 1;
        }
        comp
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Reads a graph in METIS adjacency format.
pub fn load_graph<R: BufRead>(reader: R) -> Result<Graph> {
    let mut lines = reader.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut header = None;
    for (no, line) in lines.by_ref() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        header = Some((no, trimmed.to_string()));
        break;
    }
    let (header_line, header) = header.ok_or_else(|| parse_err(1, "missing header line"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() < 2 || fields.len() > 3 {
        return Err(parse_err(header_line, "header must be `n m [fmt]`"));
    }
    let n: usize =
        fields[0].parse().map_err(|_| parse_err(header_line, "invalid vertex count"))?;
    let m: usize = fields[1].parse().map_err(|_| parse_err(header_line, "invalid edge count"))?;
    let weighted = match fields.get(2).copied().unwrap_or("0") {
        "0" | "00" | "000" => false,
        "1" | "01" | "001" => true,
        other => return Err(parse_err(header_line, format!("unsupported fmt `{other}`"))),
    };

    // directed entries as listed, used for the symmetry check
    let mut entries: BTreeMap<(VertexId, VertexId), f64> = BTreeMap::new();
    let mut raw_entries = 0usize;
    let mut vertex = 0usize;
    for (no, line) in lines {
        let line = line?;
        if line.trim_start().starts_with('%') {
            continue;
        }
        if vertex == n {
            if line.trim().is_empty() {
                continue;
            }
            return Err(parse_err(no, format!("more than {n} vertex lines")));
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let step = if weighted { 2 } else { 1 };
        if !tokens.len().is_multiple_of(step) {
            return Err(parse_err(no, "neighbor without weight"));
        }
        for chunk in tokens.chunks(step) {
            let nb: usize =
                chunk[0].parse().map_err(|_| parse_err(no, format!("bad vertex `{}`", chunk[0])))?;
            if nb == 0 || nb > n {
                return Err(parse_err(no, format!("neighbor {nb} out of range 1..={n}")));
            }
            let nb = nb - 1;
            let w: f64 = if weighted {
                chunk[1].parse().map_err(|_| parse_err(no, format!("bad weight `{}`", chunk[1])))?
            } else {
                1.0
            };
            if nb == vertex {
                return Err(Error::SelfLoop(vertex));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::NegativeWeight { u: vertex, v: nb, weight: w });
            }
            raw_entries += 1;
            let slot = entries.entry((vertex, nb)).or_insert(w);
            if *slot < w {
                *slot = w;
            }
        }
        vertex += 1;
    }
    if vertex < n {
        return Err(parse_err(header_line, format!("expected {n} vertex lines, found {vertex}")));
    }
    let duplicates = raw_entries - entries.len();
    for (&(u, v), &w) in &entries {
        match entries.get(&(v, u)) {
            Some(&back) if back == w => {}
            _ => return Err(Error::Asymmetric { u, v }),
        }
    }
    let distinct = entries.len() / 2;
    if m != distinct && 2 * m != raw_entries {
        return Err(parse_err(
            header_line,
            format!("header announces {m} edges but adjacency lists contain {distinct}"),
        ));
    }
    if duplicates > 0 {
        log::warn!("collapsed {duplicates} parallel adjacency entries to their maximum weight");
    }
    Graph::from_edges(n, entries.into_iter().filter(|&((u, v), _)| u < v).map(|((u, v), w)| (u, v, w)))
}

/// Writes a graph in METIS adjacency format. Weights are written unless all are 1.
pub fn write_graph<W: Write>(graph: &Graph, mut out: W) -> Result<()> {
    let weighted = graph.edges().any(|(_, _, w)| w != 1.0);
    writeln!(out, "{} {} {}", graph.vertex_count(), graph.edge_count(), u8::from(weighted))?;
    for v in 0..graph.vertex_count() {
        let mut first = true;
        for &(w, weight) in graph.neighbors(v) {
            if !first {
                write!(out, " ")?;
            }
            first = false;
            if weighted {
                write!(out, "{} {}", w + 1, weight)?;
            } else {
                write!(out, "{}", w + 1)?;
            }
        }
        writeln!(out)?;
    }
    Ok(())
}

/// A longest path problem: a graph with a source and a target vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub graph: Graph,
    pub source: VertexId,
    pub target: VertexId,
}

impl Instance {
    pub fn new(graph: Graph, source: VertexId, target: VertexId) -> Result<Self> {
        let n = graph.vertex_count();
        for v in [source, target] {
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, count: n });
            }
        }
        if source == target && n != 1 {
            return Err(Error::InvalidInstance(format!(
                "source and target coincide ({source}) in a graph with {n} vertices"
            )));
        }
        Ok(Instance { graph, source, target })
    }

    /// Instance where `source == target` is allowed; the answer is then the trivial path.
    pub fn new_unchecked_endpoints(graph: Graph, source: VertexId, target: VertexId) -> Result<Self> {
        let n = graph.vertex_count();
        for v in [source, target] {
            if v >= n {
                return Err(Error::VertexOutOfRange { vertex: v, count: n });
            }
        }
        Ok(Instance { graph, source, target })
    }
}

/// Reads an `s t` problem sidecar (0-indexed vertex ids).
pub fn read_problem<R: BufRead>(reader: R) -> Result<(VertexId, VertexId)> {
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('%') {
            continue;
        }
        let nums: Vec<&str> = t.split_whitespace().collect();
        if nums.len() != 2 {
            return Err(parse_err(i + 1, "expected `source target`"));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| parse_err(i + 1, format!("bad vertex `{s}`")));
        return Ok((parse(nums[0])?, parse(nums[1])?));
    }
    Err(parse_err(1, "empty problem file"))
}

pub fn write_problem<W: Write>(source: VertexId, target: VertexId, mut out: W) -> Result<()> {
    writeln!(out, "{source} {target}")?;
    Ok(())
}

/// A simple path and its total weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PathResult {
    pub vertices: Vec<VertexId>,
    pub weight: f64,
}

impl PathResult {
    pub fn edge_count(&self) -> usize {
        self.vertices.len().saturating_sub(1)
    }
}

/// Adds two vertices joined to every original vertex by zero-weight edges.
///
/// The longest path between the two new vertices is, minus its endpoints, a
/// longest path of the original graph over all endpoint pairs.
pub fn add_universal_endpoints(graph: &Graph) -> Result<Instance> {
    let n = graph.vertex_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let (s, t) = (n, n + 1);
    let edges = graph
        .edges()
        .chain((0..n).flat_map(|v| [(s, v, 0.0), (t, v, 0.0)]))
        .collect::<Vec<_>>();
    let extended = Graph::from_edges(n + 2, edges)?;
    Instance::new(extended, s, t)
}

fn weights_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Checks that `path` is a simple `s`-`t` path of `graph` with the stated
/// weight and returns the recomputed weight.
pub fn validate_path(graph: &Graph, path: &PathResult, s: VertexId, t: VertexId) -> Result<f64> {
    let vs = &path.vertices;
    let (first, last) = match (vs.first(), vs.last()) {
        (Some(&f), Some(&l)) => (f, l),
        _ => return Err(Error::InvalidPath("empty vertex sequence".into())),
    };
    if first != s || last != t {
        return Err(Error::InvalidPath(format!(
            "path runs from {first} to {last}, expected {s} to {t}"
        )));
    }
    let mut seen = vec![false; graph.vertex_count()];
    for &v in vs {
        if v >= graph.vertex_count() {
            return Err(Error::VertexOutOfRange { vertex: v, count: graph.vertex_count() });
        }
        if std::mem::replace(&mut seen[v], true) {
            return Err(Error::InvalidPath(format!("vertex {v} repeats")));
        }
    }
    let mut weight = 0.0;
    for pair in vs.windows(2) {
        match graph.weight(pair[0], pair[1]) {
            Some(w) => weight += w,
            None => {
                return Err(Error::InvalidPath(format!("no edge {{{},{}}}", pair[0], pair[1])))
            }
        }
    }
    if !weights_match(weight, path.weight) {
        return Err(Error::InvalidPath(format!(
            "stated weight {} differs from recomputed weight {weight}",
            path.weight
        )));
    }
    Ok(weight)
}
