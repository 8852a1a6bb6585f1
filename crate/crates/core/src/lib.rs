//! Rigorous separability certification for multipartite density matrices.
//!
//! The library certifies (k-)separability through sufficient criteria built
//! around product or separable reference states — a Frobenius-norm ellipsoid
//! condition, the ball it contains, and a sharper trace condition — together
//! with reference-state search (natural products and closest-separable-state
//! optimization), volume diagnostics, and generators for two physical state
//! families: dephased three-qubit X states and thermal spin-chain reduced
//! density matrices.

pub mod criteria;
pub mod decomp;
pub mod detect;
pub mod error;
pub mod models;
pub mod qmat;
pub mod volume;

pub use criteria::{
    ball_criterion, c_m_bound, ellipsoid_criterion, k_separability_criterion,
    neighborhood_criterion, trace_criterion, CertificateOutcome, CmBound, CmSource, Verdict,
};
pub use decomp::{DecompositionTerm, PartitionSpec, SeparableDecomposition};
pub use detect::{
    certify, closest_separable_state, natural_product_state, negativity, threshold_scan,
    CertificationReport, OptimizeOutcome, OptimizerConfig,
};
pub use error::{Result, SepError};
pub use qmat::{
    eigh, gen_neg_power, kron, partial_trace, partial_transpose, EigenSystem, HermitianMatrix,
    ProductState,
};
pub use volume::{log_volume_ratio, VolumeReport};
