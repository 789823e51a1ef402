use crate::gasket::LatticePoint;

/// Errors raised by the gasket, path, sampling and analysis layers.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("({}, {}) is not a vertex of the pre-gasket", .0.u, .0.v)]
    NotAVertex(LatticePoint),

    #[error("vertices ({}, {}) and ({}, {}) are not adjacent at scale {scale}", .from.u, .from.v, .to.u, .to.v)]
    NotAdjacent {
        from: LatticePoint,
        to: LatticePoint,
        scale: u32,
    },

    #[error("no common triangle at scale {0}")]
    NoCommonTriangle(u32),

    #[error("points lie in more than one triangle at scale {0}")]
    AmbiguousTriangle(u32),

    #[error("empty path")]
    EmptyPath,

    #[error("coarse path not loopless at scale {0}")]
    CoarseNotLoopless(u32),

    #[error("path is not a crossing of a 2^N-triangle: {0}")]
    NotACrossing(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("integrity check failed: {0}")]
    Integrity(String),

    #[error("step index {index} out of range (expanded {len} steps)")]
    OutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("observed {count} samples on zero-probability outcome {index}")]
    ZeroProbabilityObserved { index: usize, count: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
