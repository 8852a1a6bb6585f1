//! Dense complex Hermitian linear algebra for small multipartite systems:
//! construction, Kronecker products, partial trace/transpose, eigendecomposition
//! and generalized matrix powers.

pub mod eigen;
pub mod exchange;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, SepError};

pub use eigen::{eigh, gen_neg_power, project_full_rank, EigenSystem};

/// Default relative tolerance for deciding numerical rank.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Maximum tolerated Hermitian asymmetry at construction.
pub const HERMITICITY_TOL: f64 = 1e-8;

/// PSD tolerance for product-state factors.
pub const PSD_TOL: f64 = 1e-10;

/// Dense Hermitian operator, optionally carrying a tensor factorization of its
/// index space into subsystem dimensions. Subsystem 0 is the slowest-varying
/// (most significant) index in the composite basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    mat: DMatrix<Complex64>,
    dims: Option<Vec<usize>>,
}

impl HermitianMatrix {
    /// Builds from a raw matrix, enforcing Hermiticity by symmetrization.
    /// Rejects inputs whose asymmetry exceeds [`HERMITICITY_TOL`] relative to scale.
    pub fn new(mat: DMatrix<Complex64>, dims: Option<Vec<usize>>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(SepError::DimensionMismatch(format!(
                "matrix is {}x{}, expected square",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let scale = mat.norm().max(1.0);
        let asym = (&mat - mat.adjoint()).norm();
        if asym > HERMITICITY_TOL * scale {
            return Err(SepError::NotHermitian(asym));
        }
        Self::symmetrized(mat, dims)
    }

    /// Symmetrizes without the asymmetry rejection. For matrices produced by
    /// operations that are Hermitian up to roundoff.
    pub(crate) fn symmetrized(mat: DMatrix<Complex64>, dims: Option<Vec<usize>>) -> Result<Self> {
        if let Some(ref d) = dims {
            let prod: usize = d.iter().product();
            if prod != mat.nrows() {
                return Err(SepError::DimensionMismatch(format!(
                    "subsystem dims {:?} have product {}, matrix dim is {}",
                    d,
                    prod,
                    mat.nrows()
                )));
            }
        }
        let herm = (&mat + mat.adjoint()).scale(0.5);
        Ok(Self { mat: herm, dims })
    }

    pub fn from_real(mat: DMatrix<f64>, dims: Option<Vec<usize>>) -> Result<Self> {
        Self::new(mat.map(|x| Complex64::new(x, 0.0)), dims)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mat: DMatrix::identity(dim, dim),
            dims: None,
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            mat: DMatrix::zeros(dim, dim),
            dims: None,
        }
    }

    /// Builds a diagonal matrix from real entries.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut mat = DMatrix::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            mat[(i, i)] = Complex64::new(d, 0.0);
        }
        Self { mat, dims: None }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn dims(&self) -> Option<&[usize]> {
        self.dims.as_deref()
    }

    pub fn with_dims(mut self, dims: Vec<usize>) -> Result<Self> {
        let prod: usize = dims.iter().product();
        if prod != self.dim() {
            return Err(SepError::DimensionMismatch(format!(
                "subsystem dims {:?} have product {}, matrix dim is {}",
                dims,
                prod,
                self.dim()
            )));
        }
        self.dims = Some(dims);
        Ok(self)
    }

    pub fn raw(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_raw(self) -> DMatrix<Complex64> {
        self.mat
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.mat[(i, j)]
    }

    pub fn trace(&self) -> f64 {
        self.mat.trace().re
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.norm()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            mat: self.mat.scale(s),
            dims: self.dims.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(SepError::DimensionMismatch(format!(
                "cannot add {}x{} and {}x{}",
                self.dim(),
                self.dim(),
                other.dim(),
                other.dim()
            )));
        }
        Ok(Self {
            mat: &self.mat + &other.mat,
            dims: self.dims.clone(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(self.add(&other.scaled(-1.0))?)
    }

    /// Minimum eigenvalue. Convenience wrapper over [`eigh`].
    pub fn min_eigenvalue(&self) -> Result<f64> {
        let es = eigh(self, DEFAULT_RANK_TOL)?;
        Ok(es.eigenvalues[0])
    }
}

/// Ordered list of positive semidefinite factors; the assembled operator is
/// their Kronecker product.
#[derive(Debug, Clone)]
pub struct ProductState {
    factors: Vec<HermitianMatrix>,
}

impl ProductState {
    /// Validates positive semidefiniteness of every factor.
    pub fn new(factors: Vec<HermitianMatrix>) -> Result<Self> {
        if factors.is_empty() {
            return Err(SepError::InvalidParameter("product state needs at least one factor".into()));
        }
        for f in &factors {
            let scale = f.frobenius_norm().max(1.0);
            let lam = f.min_eigenvalue()?;
            if lam < -PSD_TOL * scale {
                return Err(SepError::NotPositiveSemidefinite(lam));
            }
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[HermitianMatrix] {
        &self.factors
    }

    pub fn factor_dims(&self) -> Vec<usize> {
        self.factors.iter().map(|f| f.dim()).collect()
    }

    /// Kronecker product of all factors, tagged with the factor dimensions.
    pub fn assembled(&self) -> HermitianMatrix {
        let mut acc = self.factors[0].clone();
        for f in &self.factors[1..] {
            acc = kron(&acc, f);
        }
        HermitianMatrix {
            mat: acc.mat,
            dims: Some(self.factor_dims()),
        }
    }

    pub fn trace(&self) -> f64 {
        self.factors.iter().map(|f| f.trace()).product()
    }
}

/// Kronecker product with subsystem 0 as the slowest index:
/// `out[(i*db + k, j*db + l)] = a[(i,j)] * b[(k,l)]`.
pub fn kron(a: &HermitianMatrix, b: &HermitianMatrix) -> HermitianMatrix {
    let mat = a.mat.kronecker(&b.mat);
    let dims = match (&a.dims, &b.dims) {
        (Some(da), Some(db)) => {
            let mut d = da.clone();
            d.extend_from_slice(db);
            Some(d)
        }
        _ => None,
    };
    HermitianMatrix { mat, dims }
}

/// Decomposes a composite row/column index into per-subsystem indices,
/// subsystem 0 slowest.
pub(crate) fn split_index(mut idx: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for q in (0..dims.len()).rev() {
        out[q] = idx % dims[q];
        idx /= dims[q];
    }
    out
}

pub(crate) fn join_index(sub: &[usize], dims: &[usize]) -> usize {
    let mut idx = 0;
    for q in 0..dims.len() {
        idx = idx * dims[q] + sub[q];
    }
    idx
}

fn check_dims(rho: &HermitianMatrix, dims: &[usize]) -> Result<()> {
    let prod: usize = dims.iter().product();
    if prod != rho.dim() {
        return Err(SepError::DimensionMismatch(format!(
            "dims {:?} have product {}, matrix dim is {}",
            dims,
            prod,
            rho.dim()
        )));
    }
    Ok(())
}

/// Traces out every subsystem not listed in `keep` (0-based, ascending order
/// of the kept subsystems is preserved).
pub fn partial_trace(rho: &HermitianMatrix, dims: &[usize], keep: &[usize]) -> Result<HermitianMatrix> {
    check_dims(rho, dims)?;
    let m = dims.len();
    if keep.is_empty() || keep.iter().any(|&q| q >= m) {
        return Err(SepError::DimensionMismatch(format!(
            "keep set {:?} is not a nonempty subset of 0..{}",
            keep, m
        )));
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    let env: Vec<usize> = (0..m).filter(|q| !keep.contains(q)).collect();
    let keep_dims: Vec<usize> = keep.iter().map(|&q| dims[q]).collect();
    let env_dims: Vec<usize> = env.iter().map(|&q| dims[q]).collect();
    let dk: usize = keep_dims.iter().product();
    let de: usize = env_dims.iter().product::<usize>().max(1);

    let mut out = DMatrix::zeros(dk, dk);
    let mut sub = vec![0usize; m];
    for rk in 0..dk {
        let rks = split_index(rk, &keep_dims);
        for ck in 0..dk {
            let cks = split_index(ck, &keep_dims);
            let mut acc = Complex64::new(0.0, 0.0);
            for e in 0..de {
                let es = split_index(e, &env_dims);
                for (t, &q) in keep.iter().enumerate() {
                    sub[q] = rks[t];
                }
                for (t, &q) in env.iter().enumerate() {
                    sub[q] = es[t];
                }
                let row = join_index(&sub, dims);
                for (t, &q) in keep.iter().enumerate() {
                    sub[q] = cks[t];
                }
                let col = join_index(&sub, dims);
                acc += rho.mat[(row, col)];
            }
            out[(rk, ck)] = acc;
        }
    }
    HermitianMatrix::symmetrized(out, Some(keep_dims))
}

/// Transposes the indices of the listed subsystems (0-based).
pub fn partial_transpose(rho: &HermitianMatrix, dims: &[usize], subset: &[usize]) -> Result<HermitianMatrix> {
    check_dims(rho, dims)?;
    let m = dims.len();
    if subset.iter().any(|&q| q >= m) {
        return Err(SepError::DimensionMismatch(format!(
            "transpose set {:?} exceeds subsystem count {}",
            subset, m
        )));
    }
    let d = rho.dim();
    let mut out = DMatrix::zeros(d, d);
    for i in 0..d {
        let mut si = split_index(i, dims);
        for j in 0..d {
            let mut sj = split_index(j, dims);
            for &q in subset {
                std::mem::swap(&mut si[q], &mut sj[q]);
            }
            out[(join_index(&si, dims), join_index(&sj, dims))] = rho.mat[(i, j)];
            for &q in subset {
                std::mem::swap(&mut si[q], &mut sj[q]);
            }
        }
    }
    HermitianMatrix::symmetrized(out, Some(dims.to_vec()))
}

/// `√Tr(X†X)`.
pub fn frobenius_norm(x: &HermitianMatrix) -> f64 {
    x.frobenius_norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cplx(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn pauli_z() -> HermitianMatrix {
        HermitianMatrix::from_diagonal(&[1.0, -1.0])
    }

    fn bell_state() -> HermitianMatrix {
        // |Φ+><Φ+|
        let mut m = DMatrix::zeros(4, 4);
        for &(i, j) in &[(0, 0), (0, 3), (3, 0), (3, 3)] {
            m[(i, j)] = cplx(0.5);
        }
        HermitianMatrix::new(m, Some(vec![2, 2])).unwrap()
    }

    #[test]
    fn kron_identity() {
        let i2 = HermitianMatrix::identity(2);
        let k = kron(&i2, &i2);
        assert_eq!(k.dim(), 4);
        assert_abs_diff_eq!((k.raw() - DMatrix::<Complex64>::identity(4, 4)).norm(), 0.0);
    }

    #[test]
    fn kron_diagonal() {
        let a = HermitianMatrix::from_diagonal(&[1.0, 2.0]);
        let b = HermitianMatrix::from_diagonal(&[3.0, 4.0]);
        let k = kron(&a, &b);
        let expected = [3.0, 4.0, 6.0, 8.0];
        for (i, &e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(k.entry(i, i).re, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn kron_pauli_z() {
        let z = pauli_z();
        let k = kron(&z, &z);
        let expected = [1.0, -1.0, -1.0, 1.0];
        for (i, &e) in expected.iter().enumerate() {
            assert_abs_diff_eq!(k.entry(i, i).re, e, epsilon = 1e-15);
        }
    }

    #[test]
    fn partial_trace_product_factorizes() {
        let a = HermitianMatrix::from_diagonal(&[0.3, 0.7]);
        let b = HermitianMatrix::from_diagonal(&[1.0, 2.0, 3.0]);
        let full = kron(&a, &b);
        let t = partial_trace(&full, &[2, 3], &[0]).unwrap();
        // Tr_2(a ⊗ b) = a * Tr(b)
        assert_abs_diff_eq!(t.entry(0, 0).re, 0.3 * 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.entry(1, 1).re, 0.7 * 6.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_bell_is_maximally_mixed() {
        let r = partial_trace(&bell_state(), &[2, 2], &[0]).unwrap();
        assert_abs_diff_eq!(r.entry(0, 0).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.entry(1, 1).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.entry(0, 1).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn partial_trace_preserves_trace() {
        let b = bell_state();
        let r = partial_trace(&b, &[2, 2], &[1]).unwrap();
        assert_abs_diff_eq!(r.trace(), b.trace(), epsilon = 1e-12);
    }

    #[test]
    fn partial_transpose_bell_min_eigenvalue() {
        let pt = partial_transpose(&bell_state(), &[2, 2], &[1]).unwrap();
        let lam = pt.min_eigenvalue().unwrap();
        assert_abs_diff_eq!(lam, -0.5, epsilon = 1e-10);
    }

    #[test]
    fn partial_transpose_diagonal_unchanged() {
        let d = HermitianMatrix::from_diagonal(&[0.1, 0.2, 0.3, 0.4]);
        let pt = partial_transpose(&d, &[2, 2], &[0]).unwrap();
        assert_abs_diff_eq!((pt.raw() - d.raw()).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn partial_transpose_involution() {
        let b = bell_state();
        let pt2 = partial_transpose(&partial_transpose(&b, &[2, 2], &[1]).unwrap(), &[2, 2], &[1]).unwrap();
        assert_abs_diff_eq!((pt2.raw() - b.raw()).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn frobenius_examples() {
        assert_abs_diff_eq!(frobenius_norm(&HermitianMatrix::zeros(3)), 0.0);
        assert_abs_diff_eq!(frobenius_norm(&HermitianMatrix::identity(9)), 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            frobenius_norm(&HermitianMatrix::from_diagonal(&[3.0, 4.0])),
            5.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = DMatrix::<Complex64>::zeros(2, 2);
        m[(0, 1)] = cplx(1.0);
        assert!(matches!(
            HermitianMatrix::new(m, None),
            Err(SepError::NotHermitian(_))
        ));
    }

    #[test]
    fn rejects_bad_dims() {
        let m = DMatrix::<Complex64>::identity(4, 4);
        assert!(HermitianMatrix::new(m, Some(vec![2, 3])).is_err());
    }
}
