use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("edge {{{u},{v}}} is not listed symmetrically")]
    Asymmetric { u: usize, v: usize },
    #[error("edge {{{u},{v}}} has negative weight {weight}")]
    NegativeWeight { u: usize, v: usize, weight: f64 },
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range (graph has {count} vertices)")]
    VertexOutOfRange { vertex: usize, count: usize },
    #[error("graph is empty")]
    EmptyGraph,
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid partition hierarchy: {0}")]
    InvalidHierarchy(String),
    #[error("no path between {from} and {to}")]
    NoPath { from: usize, to: usize },
    #[error("time limit exceeded")]
    Timeout,
    #[error("solution tables exceeded the limit of {0} entries")]
    TableLimit(usize),
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("block {block} on level {level} has {count} boundary nodes (at most 255 supported)")]
    BoundaryTooLarge { level: usize, block: usize, count: usize },
    #[error("inconsistent solution tables: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
