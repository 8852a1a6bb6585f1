//! Reference-state search and the end-to-end certification pipeline.

pub mod optimizer;
pub mod pipeline;

pub use optimizer::{closest_separable_state, OptimizeOutcome, OptimizerConfig};
pub use pipeline::{
    certify, natural_product_state, negativity, threshold_scan, CertificationReport, ScanTrace,
    StageRecord,
};
