//! Flow and segmentation evaluation: a block-matching baseline estimator,
//! endpoint error and IoU metrics, and the flow timing benchmark.

mod bench;
mod blockmatch;
mod metrics;

use thiserror::Error;

pub use bench::{benchmark_flow, format_table, mean_ci95, to_csv, BenchConfig, TimingRecord, DEFAULT_RESOLUTIONS};
pub use blockmatch::{estimate_flow_blockmatch, BlockMatchParams, GrayImage};
pub use metrics::{bounding_box_iou, endpoint_error, endpoint_errors, iou, EpeStats, Mask};

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("shape mismatch: {0}x{1} vs {2}x{3}")]
    ShapeMismatch(u32, u32, u32, u32),
    #[error("invalid parameters: {0}")]
    BadParams(String),
    #[error("no pixels selected")]
    Empty,
    #[error("benchmark failed: {0}")]
    Bench(String),
}

pub(crate) fn same_shape(a: (u32, u32), b: (u32, u32)) -> Result<(), EvalError> {
    if a == b {
        Ok(())
    } else {
        Err(EvalError::ShapeMismatch(a.0, a.1, b.0, b.1))
    }
}
