use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::graph::{Graph, Instance, VertexId};
use crate::pair_sets::MAX_BOUNDARY;
use crate::partition::PartitionHierarchy;

/// Members and boundary nodes of every block on every level.
#[derive(Debug, Clone)]
pub struct BlockLayout {
    /// `members[level][block]`, ascending.
    pub members: Vec<Vec<Vec<VertexId>>>,
    /// `boundary[level][block]`, ascending.
    pub boundary: Vec<Vec<Vec<VertexId>>>,
    /// `is_boundary[level][v]`: `v` is a boundary node of its level block.
    pub is_boundary: Vec<Vec<bool>>,
}

impl BlockLayout {
    pub fn new(instance: &Instance, hierarchy: &PartitionHierarchy) -> Result<Self> {
        let graph = &instance.graph;
        let n = graph.vertex_count();
        if hierarchy.vertex_count() != n {
            return Err(Error::InvalidHierarchy(format!(
                "hierarchy covers {} vertices, graph has {n}",
                hierarchy.vertex_count()
            )));
        }
        let mut members = Vec::new();
        let mut boundary = Vec::new();
        let mut is_boundary = Vec::new();
        for level in 0..hierarchy.level_count() {
            let assignment = hierarchy.assignment(level);
            let flags: Vec<bool> = (0..n)
                .map(|v| {
                    v == instance.source
                        || v == instance.target
                        || graph.neighbors(v).iter().any(|&(w, _)| assignment[w] != assignment[v])
                })
                .collect();
            let level_members = hierarchy.members(level);
            let level_boundary: Vec<Vec<VertexId>> = level_members
                .iter()
                .map(|m| m.iter().copied().filter(|&v| flags[v]).collect())
                .collect();
            for (block, b) in level_boundary.iter().enumerate() {
                if b.len() > MAX_BOUNDARY {
                    return Err(Error::BoundaryTooLarge { level, block, count: b.len() });
                }
            }
            members.push(level_members);
            boundary.push(level_boundary);
            is_boundary.push(flags);
        }
        Ok(BlockLayout { members, boundary, is_boundary })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeKind {
    /// Original edge between boundary nodes of different child blocks.
    Boundary,
    /// Zero-weight edge between two boundary nodes of the same child block.
    Clique,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxEdge {
    pub to: u32,
    pub weight: f64,
    pub kind: EdgeKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuxChild {
    /// Block id on the level below, or `None` for the single-vertex children
    /// of a level-0 block.
    pub block: Option<usize>,
    /// Local ids of the child's boundary nodes in ascending global order.
    pub boundary: Vec<u32>,
}

pub const NO_RANK: u16 = u16::MAX;

/// Boundary nodes of a block's children joined by the original edges between
/// different children and by zero-weight cliques inside each child.
///
/// Vertices are numbered locally, ascending by global id.
#[derive(Debug, Clone)]
pub struct AuxiliaryGraph {
    pub level: usize,
    pub block: usize,
    pub vertices: Vec<VertexId>,
    pub adjacency: Vec<Vec<AuxEdge>>,
    pub child_of: Vec<u32>,
    pub rank_in_child: Vec<u8>,
    pub children: Vec<AuxChild>,
    /// Rank of each local vertex among the block's boundary nodes, or `NO_RANK`.
    pub block_rank: Vec<u16>,
    /// Local ids of the block's boundary nodes, by rank.
    pub block_boundary: Vec<u32>,
}

impl AuxiliaryGraph {
    pub fn build(graph: &Graph, hierarchy: &PartitionHierarchy, layout: &BlockLayout, level: usize, block: usize) -> Result<Self> {
        let members = &layout.members[level][block];
        // a vertex enters V' when it is a boundary node of its child block;
        // level-0 children are single vertices, whose boundary is the vertex
        // itself unless it is isolated and not a terminal
        let child_boundary = |v: VertexId| -> bool {
            if level == 0 {
                layout.is_boundary[0][v] || graph.degree(v) > 0
            } else {
                layout.is_boundary[level - 1][v]
            }
        };
        let vertices: Vec<VertexId> = members.iter().copied().filter(|&v| child_boundary(v)).collect();
        let local: FxHashMap<VertexId, u32> =
            vertices.iter().enumerate().map(|(i, &v)| (v, i as u32)).collect();

        let mut child_slot: FxHashMap<usize, u32> = FxHashMap::default();
        let mut children: Vec<AuxChild> = Vec::new();
        let mut child_of = Vec::with_capacity(vertices.len());
        let mut rank_in_child = Vec::with_capacity(vertices.len());
        for (i, &v) in vertices.iter().enumerate() {
            let slot = if level == 0 {
                children.push(AuxChild { block: None, boundary: Vec::new() });
                (children.len() - 1) as u32
            } else {
                let cb = hierarchy.block_of(level - 1, v);
                *child_slot.entry(cb).or_insert_with(|| {
                    children.push(AuxChild { block: Some(cb), boundary: Vec::new() });
                    (children.len() - 1) as u32
                })
            };
            let list = &mut children[slot as usize].boundary;
            if list.len() >= MAX_BOUNDARY {
                return Err(Error::BoundaryTooLarge { level: level.saturating_sub(1), block, count: list.len() + 1 });
            }
            rank_in_child.push(list.len() as u8);
            list.push(i as u32);
            child_of.push(slot);
        }

        let mut adjacency = vec![Vec::new(); vertices.len()];
        for (i, &v) in vertices.iter().enumerate() {
            for &(w, weight) in graph.neighbors(v) {
                if let Some(&j) = local.get(&w) {
                    if child_of[j as usize] != child_of[i] {
                        adjacency[i].push(AuxEdge { to: j, weight, kind: EdgeKind::Boundary });
                    }
                }
            }
        }
        for child in &children {
            for &a in &child.boundary {
                for &b in &child.boundary {
                    if a != b {
                        adjacency[a as usize].push(AuxEdge { to: b, weight: 0.0, kind: EdgeKind::Clique });
                    }
                }
            }
        }
        for list in &mut adjacency {
            list.sort_by_key(|e| e.to);
        }

        let mut block_rank = vec![NO_RANK; vertices.len()];
        let mut block_boundary = Vec::new();
        for (r, &v) in layout.boundary[level][block].iter().enumerate() {
            let Some(&i) = local.get(&v) else {
                return Err(Error::Inconsistent(format!("boundary node {v} missing from auxiliary graph")));
            };
            block_rank[i as usize] = r as u16;
            block_boundary.push(i);
        }

        Ok(AuxiliaryGraph { level, block, vertices, adjacency, child_of, rank_in_child, children, block_rank, block_boundary })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn local_of(&self, v: VertexId) -> Option<u32> {
        self.vertices.binary_search(&v).ok().map(|i| i as u32)
    }

    pub fn boundary_edge_count(&self) -> usize {
        self.adjacency.iter().flatten().filter(|e| e.kind == EdgeKind::Boundary).count() / 2
    }

    pub fn clique_edge_count(&self) -> usize {
        self.adjacency.iter().flatten().filter(|e| e.kind == EdgeKind::Clique).count() / 2
    }
}
