use thiserror::Error;

/// Errors surfaced by allocator and measurement entry points.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("ball set of size {size} exceeds capacity {capacity}")]
    CapacityExceeded { size: usize, capacity: usize },

    #[error("recourse requires neighboring sets, but the sets differ in {diff} balls")]
    NotNeighbors { diff: usize },

    #[error("component with {edges} edges is too large for exhaustive search (limit {limit})")]
    ComponentTooLarge { edges: usize, limit: usize },

    #[error("bad seed: {0}")]
    BadSeed(String),
}
