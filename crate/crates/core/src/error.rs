use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },

    #[error("line {line}: duplicate edge {{{i},{j}}}")]
    DuplicateEdge { line: usize, i: usize, j: usize },

    #[error("line {line}: vertex {vertex} out of range for {n} vertices")]
    VertexOutOfRange { line: usize, vertex: usize, n: usize },

    #[error("graph is disconnected")]
    Disconnected,

    #[error(
        "counting acyclic orientations of a graph with {edges} edges exceeds the cap of {cap}; \
         sample orientations by random permutation instead"
    )]
    Intractable { edges: usize, cap: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coupling from the past did not coalesce within {cap} site updates (beta = {beta})")]
    NoCoalescence { cap: u64, beta: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("enumeration too large: {0}")]
    TooLarge(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
