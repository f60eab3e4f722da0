//! Batch driver for chain-domain spectral experiments: configuration, pipeline
//! orchestration, width sweeps and CSV/SVG reports.

pub mod pipeline;
pub mod svg;

use std::path::PathBuf;

use chainlab::ChainError;
use thiserror::Error;

pub use pipeline::{analyze, render, run_pipeline, sweep_widths, Analysis, RunConfig, RunOutcome, SweepOutcome};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config not found: {}", .0.display())]
    ConfigNotFound(PathBuf),

    #[error("invalid run configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Chain(#[from] ChainError),
}

impl CliError {
    /// 0 success, 1 I/O, 2 configuration, 3 geometry, 4 mesh, 5 solver, 6 classification.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigNotFound(_) | CliError::Config(_) => 2,
            CliError::Chain(e) => match e {
                ChainError::InvalidSpec(_) | ChainError::Param(_) | ChainError::Json(_) => 2,
                ChainError::Geometry(_)
                | ChainError::Attachment { .. }
                | ChainError::DegenerateNeck { .. }
                | ChainError::ConstantEstimation { .. }
                | ChainError::OutsideDomain(_)
                | ChainError::Straightening(_) => 3,
                ChainError::Mesh(_) => 4,
                ChainError::Assembly(_)
                | ChainError::Solver(_)
                | ChainError::Truncation { .. }
                | ChainError::DegenerateRegion
                | ChainError::NullEigenfunction => 5,
                ChainError::ClassificationGap { .. } => 6,
                ChainError::Io(_) => 1,
            },
        }
    }
}

/// Worker cap from `CHAINLAB_THREADS`; `Ok(None)` when unset.
pub fn thread_cap(value: Option<&str>) -> Result<Option<usize>, CliError> {
    match value {
        None => Ok(None),
        Some(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Config(format!("CHAINLAB_THREADS={v} is not a positive integer"))),
        },
    }
}
