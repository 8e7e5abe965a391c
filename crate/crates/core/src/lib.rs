//! Exact longest simple paths in undirected weighted graphs.
//!
//! The main solver partitions the graph hierarchically and combines, level by
//! level, tables of optimal path systems between block boundary nodes. See
//! [`lpdp::solve_instance`].
//!
//! ```
//! use longpath::lpdp::{solve_instance, SolveMode};
//! use longpath::parallel::ParallelConfig;
//! use longpath::partition::{build_hierarchy, PartitionConfig};
//! use longpath::{Graph, Instance};
//!
//! let graph = Graph::from_edges(4, [(0, 1, 2.0), (1, 2, 1.0), (2, 3, 4.0), (0, 2, 1.0)])?;
//! let instance = Instance::new(graph, 0, 3)?;
//! let hierarchy = build_hierarchy(&instance.graph, &PartitionConfig::default())?;
//! let path = solve_instance(&instance, &hierarchy, &SolveMode::Parallel(ParallelConfig::with_threads(4)))?;
//! assert_eq!(path.weight, 7.0);
//! assert_eq!(path.vertices, [0, 1, 2, 3]);
//! # Ok::<(), longpath::Error>(())
//! ```

pub mod baselines;
pub mod bench;
pub mod error;
pub mod graph;
pub mod lpdp;
pub mod pair_sets;
pub mod parallel;
pub mod partition;

pub use error::{Error, Result};
pub use graph::{Graph, Instance, PathResult, VertexId};
