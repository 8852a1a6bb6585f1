//! Sufficient separability and biseparability certificates, each a pure
//! predicate with a signed margin (negative means certified).

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decomp::SeparableDecomposition;
use crate::error::{Result, SepError};
use crate::qmat::{eigh, gen_neg_power, HermitianMatrix, ProductState};

/// Relative factor for the support condition on rank-deficient references.
pub const SUPPORT_TOL_FACTOR: f64 = 1e-9;

/// Slack accepted on certificate margins. The conditions are closed
/// (boundary states are certified), and computed margins carry roundoff of
/// order machine epsilon times the problem scale, so exact-boundary cases can
/// land a few ulps on either side.
pub const MARGIN_TOL: f64 = 1e-12;

fn within(margin: f64) -> bool {
    margin <= MARGIN_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmSource {
    BipartiteExact,
    QubitBound,
    QuditBound,
    Baseline,
}

/// Lower bound on the dimensionless radius of the separable ball around the
/// maximally mixed m-partite state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CmBound {
    pub m: usize,
    pub dims: Vec<usize>,
    pub value: f64,
    pub source: CmSource,
}

/// Best known lower bound for the given subsystem dimensions. Exact (1) for
/// m = 2; dedicated bounds for homogeneous qubit/qudit systems; the universal
/// 2^(1-m/2) baseline otherwise.
pub fn c_m_bound(dims: &[usize]) -> Result<CmBound> {
    let m = dims.len();
    if m < 2 {
        return Err(SepError::InvalidParameter(
            "need at least two subsystems".into(),
        ));
    }
    if dims.iter().any(|&d| d < 2) {
        return Err(SepError::InvalidParameter(
            "every subsystem dimension must be at least 2".into(),
        ));
    }
    if m == 2 {
        return Ok(CmBound {
            m,
            dims: dims.to_vec(),
            value: 1.0,
            source: CmSource::BipartiteExact,
        });
    }
    let baseline = 2f64.powf(1.0 - m as f64 / 2.0);
    let homogeneous = dims.iter().all(|&d| d == dims[0]);
    let (value, source) = if homogeneous && dims[0] == 2 {
        let qubit = (54f64 / 17.0).sqrt() * (2f64 / 3.0).powf(m as f64 / 2.0);
        if qubit > baseline {
            (qubit, CmSource::QubitBound)
        } else {
            (baseline, CmSource::Baseline)
        }
    } else if homogeneous {
        let d = dims[0] as f64;
        let denom = (2.0 * d - 1.0).powi(m as i32 - 2) * (d * d - 1.0) + 1.0;
        let qudit = (d.powi(m as i32) / denom).sqrt();
        if qudit > baseline {
            (qudit, CmSource::QuditBound)
        } else {
            (baseline, CmSource::Baseline)
        }
    } else {
        (baseline, CmSource::Baseline)
    };
    Ok(CmBound {
        m,
        dims: dims.to_vec(),
        value,
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    CertifiedSeparable,
    Inconclusive,
}

/// Outcome of a certificate evaluation. `margin` is criterion LHS minus RHS;
/// negative or zero means certified (subject to support conditions).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateOutcome {
    pub verdict: Verdict,
    pub criterion: String,
    pub margin: f64,
    pub diagnostics: BTreeMap<String, f64>,
}

impl CertificateOutcome {
    pub fn certified(&self) -> bool {
        self.verdict == Verdict::CertifiedSeparable
    }

    fn new(criterion: &str, certified: bool, margin: f64, diagnostics: BTreeMap<String, f64>) -> Self {
        Self {
            verdict: if certified {
                Verdict::CertifiedSeparable
            } else {
                Verdict::Inconclusive
            },
            criterion: criterion.to_string(),
            margin,
            diagnostics,
        }
    }
}

fn check_compat(rho: &HermitianMatrix, prod: &ProductState) -> Result<()> {
    let d: usize = prod.factor_dims().iter().product();
    if rho.dim() != d {
        return Err(SepError::DimensionMismatch(format!(
            "state dim {} vs product dim {}",
            rho.dim(),
            d
        )));
    }
    Ok(())
}

fn support_tol(rho: &HermitianMatrix) -> f64 {
    SUPPORT_TOL_FACTOR * rho.frobenius_norm().max(1.0)
}

/// Ellipsoid membership around a product reference:
/// `||prod^(-1/2) rho prod^(-1/2) - I_f||_F <= c_m`, with the additional
/// support condition `rho = P_f rho P_f` when the reference is rank-deficient.
pub fn ellipsoid_criterion(
    rho: &HermitianMatrix,
    prod: &ProductState,
    rank_tol: f64,
) -> Result<CertificateOutcome> {
    check_compat(rho, prod)?;
    let cm = c_m_bound(&prod.factor_dims())?;
    let assembled = prod.assembled();
    let d = assembled.dim();
    let (half_inv, rank, pf) = gen_neg_power(&assembled, 0.5, rank_tol)?;
    let sandwich = half_inv.raw() * rho.raw() * half_inv.raw();
    let delta = &sandwich - pf.raw();
    let delta_norm = delta.norm();
    let margin = delta_norm - cm.value;

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("delta_norm".into(), delta_norm);
    diagnostics.insert("c_m".into(), cm.value);
    diagnostics.insert("rank".into(), rank as f64);

    let mut certified = within(margin);
    if rank < d {
        let projected = pf.raw() * rho.raw() * pf.raw();
        let leakage = (rho.raw() - projected).norm();
        diagnostics.insert("support_leakage".into(), leakage);
        certified = certified && leakage <= support_tol(rho);
    }
    Ok(CertificateOutcome::new("ellipsoid", certified, margin, diagnostics))
}

/// Ball membership around a full-rank product reference:
/// `||rho - prod||_F <= c_m * lambda_min(prod)`.
pub fn ball_criterion(rho: &HermitianMatrix, prod: &ProductState) -> Result<CertificateOutcome> {
    check_compat(rho, prod)?;
    let cm = c_m_bound(&prod.factor_dims())?;
    let assembled = prod.assembled();
    let es = eigh(&assembled, crate::qmat::DEFAULT_RANK_TOL)?;
    let lam_min = es.min();
    let dist = (rho.raw() - assembled.raw()).norm();

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("c_m".into(), cm.value);
    diagnostics.insert("lambda_min".into(), lam_min);
    diagnostics.insert("delta_norm".into(), dist);

    if es.rank < assembled.dim() {
        // rank-deficient reference has ball radius zero
        return Ok(CertificateOutcome::new("ball", false, dist, diagnostics));
    }
    let margin = dist - cm.value * lam_min;
    Ok(CertificateOutcome::new("ball", within(margin), margin, diagnostics))
}

fn trace_moments(m: &DMatrix<Complex64>) -> (f64, f64) {
    let t1 = m.trace().re;
    // Tr[M^2] without forming the product: sum over M_ij M_ji
    let n = m.nrows();
    let mut t2 = 0.0;
    for i in 0..n {
        for j in 0..n {
            t2 += (m[(i, j)] * m[(j, i)]).re;
        }
    }
    (t1, t2)
}

/// Scaling-optimized trace condition
/// `Tr[(rho prod^(-1))^2] / Tr[rho prod^(-1)]^2 <= 1/(D_f - c_m^2)`,
/// with the support condition for rank-deficient references.
pub fn trace_criterion(
    rho: &HermitianMatrix,
    prod: &ProductState,
    rank_tol: f64,
) -> Result<CertificateOutcome> {
    check_compat(rho, prod)?;
    let cm = c_m_bound(&prod.factor_dims())?;
    let assembled = prod.assembled();
    let d = assembled.dim();
    let (inv, rank, pf) = gen_neg_power(&assembled, 1.0, rank_tol)?;
    let m = rho.raw() * inv.raw();
    let (t1, t2) = trace_moments(&m);

    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("c_m".into(), cm.value);
    diagnostics.insert("rank".into(), rank as f64);

    if t1 <= 0.0 {
        diagnostics.insert("trace_overlap".into(), t1);
        return Ok(CertificateOutcome::new("trace", false, f64::INFINITY, diagnostics));
    }
    let ratio = t2 / (t1 * t1);
    let rhs = 1.0 / (rank as f64 - cm.value * cm.value);
    let margin = ratio - rhs;
    diagnostics.insert("trace_ratio".into(), ratio);
    diagnostics.insert("alpha".into(), t1 / t2);

    let mut certified = within(margin);
    if rank < d {
        let projected = pf.raw() * rho.raw() * pf.raw();
        let leakage = (rho.raw() - projected).norm();
        diagnostics.insert("support_leakage".into(), leakage);
        certified = certified && leakage <= support_tol(rho);
    }
    Ok(CertificateOutcome::new("trace", certified, margin, diagnostics))
}

struct PivotCheck {
    margin: f64,
    certified: bool,
    rank: usize,
    leakage: f64,
}

/// Trace check for `delta + pivot` against the ellipsoid around `pivot`,
/// using the generalized inverse when the pivot is rank-deficient.
fn pivot_trace_check(
    delta: &DMatrix<Complex64>,
    pivot_mat: &HermitianMatrix,
    c: f64,
    rank_tol: f64,
    support_scale: f64,
) -> Result<PivotCheck> {
    let d = pivot_mat.dim();
    let (inv, rank, pf) = gen_neg_power(pivot_mat, 1.0, rank_tol)?;
    if rank == 0 {
        return Ok(PivotCheck {
            margin: f64::INFINITY,
            certified: false,
            rank,
            leakage: delta.norm(),
        });
    }
    let m = delta * inv.raw() + pf.raw();
    let (t1, t2) = trace_moments(&m);
    if t1 <= 0.0 {
        return Ok(PivotCheck {
            margin: f64::INFINITY,
            certified: false,
            rank,
            leakage: 0.0,
        });
    }
    let ratio = t2 / (t1 * t1);
    let rhs = 1.0 / (rank as f64 - c * c);
    let margin = ratio - rhs;
    let mut certified = within(margin);
    let mut leakage = 0.0;
    if rank < d {
        let projected = pf.raw() * delta * pf.raw();
        leakage = (delta - projected).norm();
        certified = certified && leakage <= SUPPORT_TOL_FACTOR * support_scale;
    }
    Ok(PivotCheck {
        margin,
        certified,
        rank,
        leakage,
    })
}

/// Pivot candidates ordered most-full-rank first (descending smallest
/// eigenvalue of the weighted term).
fn pivot_order(dec: &SeparableDecomposition) -> Result<Vec<(usize, f64)>> {
    let mut order = Vec::with_capacity(dec.terms().len());
    for i in 0..dec.terms().len() {
        let term = dec.term_matrix(i)?;
        let lam = eigh(&term, crate::qmat::DEFAULT_RANK_TOL)?.min();
        order.push((i, lam));
    }
    order.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(order)
}

fn decomposition_pivot_criterion(
    name: &str,
    rho: &HermitianMatrix,
    dec: &SeparableDecomposition,
    pivot: Option<usize>,
    rank_tol: f64,
    c_for_term: impl Fn(usize) -> Result<f64>,
) -> Result<CertificateOutcome> {
    let d: usize = dec.dims().iter().product();
    if rho.dim() != d {
        return Err(SepError::DimensionMismatch(format!(
            "state dim {} vs decomposition dim {}",
            rho.dim(),
            d
        )));
    }
    let delta = rho.raw() - dec.assembled().raw();
    let candidates: Vec<(usize, f64)> = match pivot {
        Some(i) => {
            if i >= dec.terms().len() {
                return Err(SepError::InvalidParameter(format!("pivot {} out of range", i)));
            }
            vec![(i, 0.0)]
        }
        None => pivot_order(dec)?,
    };

    let mut best: Option<(usize, PivotCheck, f64)> = None;
    for (i, _) in candidates {
        let c = c_for_term(i)?;
        let term = dec.term_matrix(i)?;
        let check = pivot_trace_check(&delta, &term, c, rank_tol, rho.frobenius_norm().max(1.0))?;
        let better = match &best {
            None => true,
            Some((_, b, _)) => check.margin < b.margin,
        };
        if better {
            let done = check.certified;
            best = Some((i, check, c));
            if done {
                break;
            }
        }
    }
    let (idx, check, c) = best.expect("at least one pivot candidate");
    let mut diagnostics = BTreeMap::new();
    diagnostics.insert("pivot".into(), idx as f64);
    diagnostics.insert("c_m".into(), c);
    diagnostics.insert("rank".into(), check.rank as f64);
    diagnostics.insert("delta_norm".into(), delta.norm());
    diagnostics.insert("support_leakage".into(), check.leakage);
    Ok(CertificateOutcome::new(name, check.certified, check.margin, diagnostics))
}

/// Separable neighborhood around a separable reference `K = sum_i K_i`:
/// certified if for some pivot term the trace condition holds for
/// `Delta + K_i` around `K_i`, where `Delta = rho - K`.
pub fn neighborhood_criterion(
    rho: &HermitianMatrix,
    dec: &SeparableDecomposition,
    pivot: Option<usize>,
    rank_tol: f64,
) -> Result<CertificateOutcome> {
    let m = dec.dims().len();
    if dec.block_count() != m {
        return Err(SepError::InvalidPartition(
            "neighborhood criterion expects fully-product terms".into(),
        ));
    }
    let dims = dec.dims().to_vec();
    decomposition_pivot_criterion("neighborhood", rho, dec, pivot, rank_tol, |_| {
        Ok(c_m_bound(&dims)?.value)
    })
}

/// k-separability criterion: each term is a product over a k-block partition;
/// the pivot check runs with `c_k` evaluated on the pivot's block dimensions.
/// `k = 2` is the biseparability criterion.
pub fn k_separability_criterion(
    rho: &HermitianMatrix,
    dec: &SeparableDecomposition,
    k: usize,
    pivot: Option<usize>,
    rank_tol: f64,
) -> Result<CertificateOutcome> {
    if dec.block_count() != k {
        return Err(SepError::InvalidPartition(format!(
            "decomposition has {}-block terms, expected {}",
            dec.block_count(),
            k
        )));
    }
    let name = if k == 2 { "bisep" } else { "k-sep" };
    let dims = dec.dims().to_vec();
    let terms: Vec<Vec<usize>> = dec
        .terms()
        .iter()
        .map(|t| t.partition.block_dims(&dims))
        .collect();
    decomposition_pivot_criterion(name, rho, dec, pivot, rank_tol, move |i| {
        Ok(c_m_bound(&terms[i])?.value)
    })
}
