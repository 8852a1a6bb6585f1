//! Ellipsoid-to-ball volume ratio diagnostics, computed in log domain (the
//! ratio itself overflows any float for physically interesting spectra).

use serde::{Deserialize, Serialize};

use crate::error::{Result, SepError};

/// Volume ratio of the separable ellipsoid around a reference spectrum to the
/// inscribed ball: `R = prod_{i<D} (lambda_i / lambda_min)^D`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VolumeReport {
    /// log10 of the raw ratio.
    pub log10_ratio: f64,
    /// log10 of `R^(1 - 1/D^2)`, the normalized-state estimate.
    pub log10_ratio_normalized: f64,
    pub dim: usize,
    /// Spectrum used, sorted descending.
    pub eigenvalues: Vec<f64>,
}

/// `log10 R = D * sum_{i=1}^{D-1} log10(lambda_i / lambda_min)` with the
/// spectrum sorted descending.
pub fn log_volume_ratio(eigenvalues: &[f64]) -> Result<VolumeReport> {
    if eigenvalues.len() < 2 {
        return Err(SepError::InvalidParameter(
            "volume ratio needs at least two eigenvalues".into(),
        ));
    }
    if eigenvalues.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(SepError::InvalidParameter(
            "eigenvalues must be positive and finite".into(),
        ));
    }
    let mut sorted = eigenvalues.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let d = sorted.len();
    let lam_min = sorted[d - 1];
    let sum: f64 = sorted[..d - 1]
        .iter()
        .map(|&l| (l / lam_min).log10())
        .sum();
    let log10_ratio = d as f64 * sum;
    let norm = 1.0 - 1.0 / (d as f64 * d as f64);
    Ok(VolumeReport {
        log10_ratio,
        log10_ratio_normalized: log10_ratio * norm,
        dim: d,
        eigenvalues: sorted,
    })
}
