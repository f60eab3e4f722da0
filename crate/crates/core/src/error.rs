use thiserror::Error;

use crate::geometry::Point;

/// Every failure the library can report, grouped by the stage that raises it.
#[derive(Debug, Error)]
pub enum ChainError {
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("neck {neck} does not attach to piece {piece}: distance {distance:.3e} exceeds {tolerance:.3e}")]
    Attachment {
        neck: usize,
        piece: usize,
        distance: f64,
        tolerance: f64,
    },

    #[error("neck {neck} has a degenerate Jacobian {jacobian:.3e} at (s, t) = ({s:.4}, {t:.4})")]
    DegenerateNeck {
        neck: usize,
        s: f64,
        t: f64,
        jacobian: f64,
    },

    #[error("constant {constant} failed verification at {sample}: {detail}")]
    ConstantEstimation {
        constant: &'static str,
        sample: String,
        detail: String,
    },

    #[error("point ({}, {}) lies outside the domain", .0.x, .0.y)]
    OutsideDomain(Point),

    #[error("straightening map outside certified range: {0}")]
    Straightening(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("eigenvalue {requested} lies beyond the converged range (largest {largest})")]
    Truncation { requested: f64, largest: f64 },

    #[error("region has zero mass")]
    DegenerateRegion,

    #[error("eigenfunction is numerically zero")]
    NullEigenfunction,

    #[error("nodal domain {domain} of eigenpair {index} received no class")]
    ClassificationGap { index: usize, domain: usize },

    #[error("parameter out of range: {0}")]
    Param(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = ChainError> = std::result::Result<T, E>;
