//! Certification pipeline: natural product references, negativity
//! cross-checks, staged certification, and bisection threshold scans.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::criteria::{
    k_separability_criterion, neighborhood_criterion, trace_criterion, CertificateOutcome, Verdict,
};
use crate::decomp::PartitionSpec;
use crate::detect::optimizer::{closest_separable_state, OptimizerConfig};
use crate::error::{Result, SepError};
use crate::qmat::{eigh, exchange, partial_trace, partial_transpose, HermitianMatrix, ProductState, DEFAULT_RANK_TOL};

/// Negativity above this level blocks a full-separability certificate.
const NEGATIVITY_GUARD_TOL: f64 = 1e-10;

/// Tensor product of the single-subsystem marginals, rescaled so each factor
/// carries trace `Tr(rho)^(1/m)` and the assembled trace matches `Tr(rho)`.
pub fn natural_product_state(rho: &HermitianMatrix, dims: &[usize]) -> Result<ProductState> {
    let m = dims.len();
    let total = rho.trace();
    if total <= 0.0 {
        return Err(SepError::InvalidParameter(format!(
            "state trace {} not positive",
            total
        )));
    }
    let per_factor = total.powf(1.0 / m as f64);
    let mut factors = Vec::with_capacity(m);
    for q in 0..m {
        let red = partial_trace(rho, dims, &[q])?;
        factors.push(red.scaled(per_factor / red.trace()));
    }
    ProductState::new(factors)
}

/// Sum of the absolute values of the negative eigenvalues of the partial
/// transpose across the given bipartition. Zero iff PPT.
pub fn negativity(rho: &HermitianMatrix, dims: &[usize], bipartition: &PartitionSpec) -> Result<f64> {
    if bipartition.block_count() != 2 {
        return Err(SepError::InvalidPartition(format!(
            "negativity needs a bipartition, got {} blocks",
            bipartition.block_count()
        )));
    }
    let pt = partial_transpose(rho, dims, &bipartition.blocks()[1])?;
    let es = eigh(&pt, DEFAULT_RANK_TOL)?;
    Ok(es.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub outcome: Option<CertificateOutcome>,
    pub distance: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificationReport {
    /// SHA-256 of the canonical serialization of the input state.
    pub input_digest: String,
    pub dims: Vec<usize>,
    pub k: usize,
    pub stages: Vec<StageRecord>,
    pub verdict: Verdict,
    /// Frobenius distance to the optimizer's reference, when stage 2 ran.
    pub distance: Option<f64>,
    /// Largest negativity across the examined bipartitions.
    pub max_negativity: f64,
    #[serde(skip, default)]
    pub elapsed: Duration,
}

impl CertificationReport {
    pub fn certified(&self) -> bool {
        self.verdict == Verdict::CertifiedSeparable
    }
}

fn digest(rho: &HermitianMatrix) -> String {
    let text = exchange::write_matrix(rho);
    let mut hasher = Sha256::new();
    hasher.update(text.as_bytes());
    format!("{:x}", hasher.finalize())
}

/// Staged certification of k-separability:
/// stage 1 (full separability only) tries the trace criterion against the
/// natural product reference; stage 2 optimizes a closest-(k-)separable
/// reference and applies the matching neighborhood criterion. A negativity
/// guard blocks full-separability certificates for NPT states.
pub fn certify(
    rho: &HermitianMatrix,
    dims: &[usize],
    k: usize,
    cfg: &OptimizerConfig,
) -> Result<CertificationReport> {
    let start = Instant::now();
    let m = dims.len();
    if k < 2 || k > m {
        return Err(SepError::InvalidParameter(format!(
            "k = {} outside 2..={}",
            k, m
        )));
    }
    let rho = rho.clone().with_dims(dims.to_vec())?;
    let mut stages = Vec::new();
    let mut verdict = Verdict::Inconclusive;
    let mut distance = None;

    let mut max_negativity = 0.0f64;
    for bip in PartitionSpec::bipartitions(m) {
        match negativity(&rho, dims, &bip) {
            Ok(n) => max_negativity = max_negativity.max(n),
            Err(e) => stages.push(StageRecord {
                name: "negativity".into(),
                outcome: None,
                distance: None,
                note: Some(e.to_string()),
            }),
        }
    }

    if k == m {
        let stage = match natural_product_state(&rho, dims)
            .and_then(|prod| trace_criterion(&rho, &prod, DEFAULT_RANK_TOL))
        {
            Ok(outcome) => {
                if outcome.certified() {
                    verdict = Verdict::CertifiedSeparable;
                }
                StageRecord {
                    name: "natural-product trace".into(),
                    outcome: Some(outcome),
                    distance: None,
                    note: None,
                }
            }
            Err(e) => StageRecord {
                name: "natural-product trace".into(),
                outcome: None,
                distance: None,
                note: Some(e.to_string()),
            },
        };
        stages.push(stage);
    }

    if verdict == Verdict::Inconclusive {
        let partitions = if k == m {
            vec![PartitionSpec::singletons(m)]
        } else {
            PartitionSpec::k_partitions(m, k)
        };
        let stage = match closest_separable_state(&rho, &partitions, cfg).and_then(|opt| {
            let outcome = if k == m {
                neighborhood_criterion(&rho, &opt.decomposition, None, DEFAULT_RANK_TOL)?
            } else {
                k_separability_criterion(&rho, &opt.decomposition, k, None, DEFAULT_RANK_TOL)?
            };
            Ok((opt, outcome))
        }) {
            Ok((opt, outcome)) => {
                if outcome.certified() {
                    verdict = Verdict::CertifiedSeparable;
                }
                distance = Some(opt.distance);
                StageRecord {
                    name: "optimized reference".into(),
                    outcome: Some(outcome),
                    distance: Some(opt.distance),
                    note: if opt.converged {
                        None
                    } else {
                        Some("optimizer did not converge; best iterate used".into())
                    },
                }
            }
            Err(e) => StageRecord {
                name: "optimized reference".into(),
                outcome: None,
                distance: None,
                note: Some(e.to_string()),
            },
        };
        stages.push(stage);
    }

    // soundness guard: a fully separable state is PPT under every bipartition
    if k == m && verdict == Verdict::CertifiedSeparable && max_negativity > NEGATIVITY_GUARD_TOL {
        verdict = Verdict::Inconclusive;
        stages.push(StageRecord {
            name: "negativity guard".into(),
            outcome: None,
            distance: None,
            note: Some(format!(
                "certificate retracted: negativity {} exceeds {}",
                max_negativity, NEGATIVITY_GUARD_TOL
            )),
        });
    }

    Ok(CertificationReport {
        input_digest: digest(&rho),
        dims: dims.to_vec(),
        k,
        stages,
        verdict,
        distance,
        max_negativity,
        elapsed: start.elapsed(),
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanProbe {
    pub param: f64,
    pub certified: bool,
    pub margin: f64,
    pub criterion: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanTrace {
    pub probes: Vec<ScanProbe>,
    /// Boundary parameter on the certified side of the final bracket.
    pub threshold: f64,
    /// False when recorded margins are not monotone along the parameter.
    pub monotone: bool,
}

/// Bisects the parameter interval for the boundary of certification. The
/// endpoints must disagree (one certified, one not); monotonicity of the
/// verdict is the caller's assertion and is cross-checked on the recorded
/// margins afterwards.
pub fn threshold_scan(
    mut probe: impl FnMut(f64) -> Result<CertificateOutcome>,
    lo: f64,
    hi: f64,
    bisect_tol: f64,
) -> Result<ScanTrace> {
    if !(bisect_tol > 0.0) || !(hi > lo) {
        return Err(SepError::InvalidParameter(
            "need hi > lo and bisect_tol > 0".into(),
        ));
    }
    let mut probes = Vec::new();
    let mut eval = |p: f64, probes: &mut Vec<ScanProbe>| -> Result<bool> {
        let out = probe(p)?;
        let certified = out.certified();
        probes.push(ScanProbe {
            param: p,
            certified,
            margin: out.margin,
            criterion: out.criterion,
        });
        Ok(certified)
    };
    let lo_cert = eval(lo, &mut probes)?;
    let hi_cert = eval(hi, &mut probes)?;
    if lo_cert == hi_cert {
        return Err(SepError::NoBracket);
    }
    let (mut a, mut b) = (lo, hi); // invariant: a side = lo_cert, b side = hi_cert
    while b - a > bisect_tol {
        let mid = 0.5 * (a + b);
        if eval(mid, &mut probes)? == lo_cert {
            a = mid;
        } else {
            b = mid;
        }
    }
    let threshold = if hi_cert { b } else { a };

    let mut sorted = probes.clone();
    sorted.sort_by(|x, y| x.param.total_cmp(&y.param));
    let finite: Vec<&ScanProbe> = sorted.iter().filter(|p| p.margin.is_finite()).collect();
    let increasing = finite.windows(2).all(|w| w[1].margin >= w[0].margin - 1e-12);
    let decreasing = finite.windows(2).all(|w| w[1].margin <= w[0].margin + 1e-12);
    Ok(ScanTrace {
        probes,
        threshold,
        monotone: increasing || decreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::xstate::{x_state, x_state_rdms, XStateParams};
    use crate::qmat::kron;
    use approx::assert_abs_diff_eq;
    use nalgebra::DMatrix;
    use num_complex::Complex64;

    fn bell() -> HermitianMatrix {
        let mut m = DMatrix::<Complex64>::zeros(4, 4);
        for &(i, j) in &[(0usize, 0usize), (0, 3), (3, 0), (3, 3)] {
            m[(i, j)] = Complex64::new(0.5, 0.0);
        }
        HermitianMatrix::new(m, Some(vec![2, 2])).unwrap()
    }

    fn werner(v: f64) -> HermitianMatrix {
        let id = DMatrix::<Complex64>::identity(4, 4);
        HermitianMatrix::new(bell().raw().scale(v) + id.scale((1.0 - v) / 4.0), Some(vec![2, 2]))
            .unwrap()
    }

    #[test]
    fn natural_product_of_product_is_identity_operation() {
        let f1 = HermitianMatrix::from_diagonal(&[0.6, 0.4]);
        let f2 = HermitianMatrix::from_diagonal(&[0.3, 0.7]);
        let rho = kron(&f1, &f2).with_dims(vec![2, 2]).unwrap();
        let prod = natural_product_state(&rho, &[2, 2]).unwrap();
        assert!((prod.assembled().raw() - rho.raw()).norm() < 1e-12);
    }

    #[test]
    fn natural_product_of_bell_is_maximally_mixed() {
        let prod = natural_product_state(&bell(), &[2, 2]).unwrap();
        let id4 = DMatrix::<Complex64>::identity(4, 4).scale(0.25);
        assert!((prod.assembled().raw() - &id4).norm() < 1e-12);
    }

    #[test]
    fn natural_product_matches_x_state_marginals() {
        let params = XStateParams::reference();
        let rho = x_state(&params).unwrap();
        let prod = natural_product_state(&rho, &[2, 2, 2]).unwrap();
        let rdms = x_state_rdms(&params).unwrap();
        for (f, r) in prod.factors().iter().zip(rdms.iter()) {
            assert!((f.raw() - r.raw()).norm() < 1e-12);
        }
    }

    #[test]
    fn negativity_values() {
        let bip = PartitionSpec::bipartitions(2).remove(0);
        assert_abs_diff_eq!(negativity(&bell(), &[2, 2], &bip).unwrap(), 0.5, epsilon = 1e-10);
        let f = HermitianMatrix::from_diagonal(&[0.5, 0.5]);
        let prod = kron(&f, &f).with_dims(vec![2, 2]).unwrap();
        assert_abs_diff_eq!(negativity(&prod, &[2, 2], &bip).unwrap(), 0.0, epsilon = 1e-12);
        let bad = PartitionSpec::singletons(3);
        assert!(negativity(&bell(), &[2, 2], &bad).is_err());
    }

    #[test]
    fn certify_dephased_x_at_stage_one() {
        let params = XStateParams::reference().dephase(0.6).unwrap();
        let rho = x_state(&params).unwrap();
        let report = certify(&rho, &[2, 2, 2], 3, &OptimizerConfig::default()).unwrap();
        assert!(report.certified());
        assert_eq!(report.stages[0].name, "natural-product trace");
        assert!(report.stages[0].outcome.as_ref().unwrap().certified());
    }

    #[test]
    fn certify_bell_stays_inconclusive() {
        let cfg = OptimizerConfig {
            max_iters: 800,
            restarts: 1,
            ansatz_terms: 4,
            ..OptimizerConfig::default()
        };
        let report = certify(&bell(), &[2, 2], 2, &cfg).unwrap();
        assert!(!report.certified());
        assert!(report.max_negativity > 0.49);
    }

    #[test]
    fn report_serialization_is_deterministic() {
        let params = XStateParams::reference().dephase(0.6).unwrap();
        let rho = x_state(&params).unwrap();
        let cfg = OptimizerConfig::default();
        let a = serde_json::to_string(&certify(&rho, &[2, 2, 2], 3, &cfg).unwrap()).unwrap();
        let b = serde_json::to_string(&certify(&rho, &[2, 2, 2], 3, &cfg).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn werner_threshold_by_scan() {
        // trace criterion against I/4 certifies exactly at purity 1/(D-1):
        // the known boundary v = 1/3
        let probe = |v: f64| {
            let rho = werner(v);
            let prod = natural_product_state(&rho, &[2, 2])?;
            trace_criterion(&rho, &prod, DEFAULT_RANK_TOL)
        };
        // scan over v: certified at low v, not at high v
        let trace = threshold_scan(probe, 0.0, 0.9, 1e-4).unwrap();
        assert_abs_diff_eq!(trace.threshold, 1.0 / 3.0, epsilon = 2e-4);
        assert!(trace.monotone);
    }

    #[test]
    fn scan_without_bracket_errors() {
        let probe = |v: f64| {
            let rho = werner(v);
            let prod = natural_product_state(&rho, &[2, 2])?;
            trace_criterion(&rho, &prod, DEFAULT_RANK_TOL)
        };
        assert!(matches!(
            threshold_scan(probe, 0.0, 0.2, 1e-3),
            Err(SepError::NoBracket)
        ));
    }
}
