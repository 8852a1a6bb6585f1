//! Hermitian eigendecomposition and spectral functions.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, SepError};
use crate::qmat::HermitianMatrix;

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, same order as `eigenvalues`.
    pub eigenvectors: DMatrix<Complex64>,
    /// Count of eigenvalues above `rank_tol * max(|lambda|_max, 1)`.
    pub rank: usize,
    pub rank_tol: f64,
}

impl EigenSystem {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Reassembles `V f(diag) V†` for a real spectral function.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.eigenvalues.len();
        let mut scaled = self.eigenvectors.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let w = f(lam);
            for i in 0..n {
                scaled[(i, k)] *= w;
            }
        }
        let mat = &scaled * self.eigenvectors.adjoint();
        HermitianMatrix::symmetrized(mat, None).expect("spectral map is square")
    }
}

fn rank_of(eigenvalues: &[f64], rank_tol: f64) -> usize {
    let lam_max = eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let thresh = rank_tol * lam_max.max(1.0);
    eigenvalues.iter().filter(|&&l| l > thresh).count()
}

fn sort_ascending(vals: Vec<f64>, vecs: DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    let sorted_vals: Vec<f64> = order.iter().map(|&k| vals[k]).collect();
    let mut sorted_vecs = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        sorted_vecs.set_column(dst, &vecs.column(src));
    }
    (sorted_vals, sorted_vecs)
}

/// Eigendecomposition with eigenvalues in ascending order.
///
/// Matrices with numerically real entries take a real symmetric path, which
/// matters for the 2^L-dimensional spin-chain Hamiltonians.
pub fn eigh(h: &HermitianMatrix, rank_tol: f64) -> Result<EigenSystem> {
    let n = h.dim();
    if n == 0 {
        return Err(SepError::InvalidParameter("empty matrix".into()));
    }
    let mat = h.raw();
    let scale = mat.norm().max(1.0);
    let max_imag = mat.iter().fold(0.0f64, |a, z| a.max(z.im.abs()));
    let max_iter = 30 * n + 1000;

    let (vals, vecs) = if max_imag <= 1e-13 * scale {
        let real: DMatrix<f64> = mat.map(|z| z.re);
        let se = real
            .try_symmetric_eigen(f64::EPSILON, max_iter)
            .ok_or(SepError::EigenConvergence)?;
        let vecs = se.eigenvectors.map(|x| Complex64::new(x, 0.0));
        (se.eigenvalues.iter().copied().collect::<Vec<f64>>(), vecs)
    } else {
        let se = mat
            .clone()
            .try_symmetric_eigen(f64::EPSILON, max_iter)
            .ok_or(SepError::EigenConvergence)?;
        (se.eigenvalues.iter().copied().collect::<Vec<f64>>(), se.eigenvectors)
    };
    let (eigenvalues, eigenvectors) = sort_ascending(vals, vecs);
    let rank = rank_of(&eigenvalues, rank_tol);
    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
        rank,
        rank_tol,
    })
}

/// Generalized negative power `A^(-p)`: inverse power applied on the support
/// of a PSD matrix, zero on its kernel. Returns the power, the numerical rank
/// and the projector onto the support.
pub fn gen_neg_power(
    a: &HermitianMatrix,
    p: f64,
    rank_tol: f64,
) -> Result<(HermitianMatrix, usize, HermitianMatrix)> {
    if p <= 0.0 {
        return Err(SepError::InvalidParameter("power must be positive".into()));
    }
    let es = eigh(a, rank_tol)?;
    let norm = a.frobenius_norm();
    if es.min() < -1e-8 * norm {
        return Err(SepError::NotPositiveSemidefinite(es.min()));
    }
    let lam_max = es.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let thresh = rank_tol * lam_max.max(1.0);
    let power = es.map_spectrum(|l| if l > thresh { l.powf(-p) } else { 0.0 });
    let projector = es.map_spectrum(|l| if l > thresh { 1.0 } else { 0.0 });
    Ok((power, es.rank, projector))
}

/// `P_f X P_f`: projection of `x` into the support subspace described by
/// `projector_f`.
pub fn project_full_rank(x: &HermitianMatrix, projector_f: &HermitianMatrix) -> Result<HermitianMatrix> {
    if x.dim() != projector_f.dim() {
        return Err(SepError::DimensionMismatch(format!(
            "operand dim {} vs projector dim {}",
            x.dim(),
            projector_f.dim()
        )));
    }
    let m = projector_f.raw() * x.raw() * projector_f.raw();
    HermitianMatrix::symmetrized(m, x.dims().map(|d| d.to_vec()))
}
