//! Transverse-field spin chains: `H = -sum_i (X_i X_{i+1} - h Z_i)`, Gibbs
//! states, and reduced density matrices of site subsets.
//!
//! Basis convention: site 0 is the slowest (most significant) bit and
//! `Z|0> = +|0>`. Spectra are convention-independent; matrix elements of the
//! reduced density matrices are not, so this choice is normative.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SepError};
use crate::qmat::{eigh, HermitianMatrix, DEFAULT_RANK_TOL};

/// Largest chain length handled by dense diagonalization (memory bound).
pub const DENSE_CAP: usize = 13;

/// Largest chain length for the matrix-free ground-state path.
pub const LANCZOS_CAP: usize = 20;

/// Thermal weights below this fraction of the total are dropped.
const WEIGHT_CUTOFF: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IsingSpec {
    pub length: usize,
    pub field: f64,
    pub boundary: Boundary,
    /// Temperature; zero selects the ground state.
    pub temperature: f64,
}

impl IsingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.length < 2 {
            return Err(SepError::InvalidParameter(format!(
                "chain length {} < 2",
                self.length
            )));
        }
        if self.temperature < 0.0 {
            return Err(SepError::InvalidParameter(format!(
                "temperature {} < 0",
                self.temperature
            )));
        }
        Ok(())
    }
}

fn bonds(l: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..l - 1).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Periodic && l > 2 {
        out.push((l - 1, 0));
    }
    out
}

/// Diagonal field part `h * sum_i z_i` for a basis state, with `z_i = +1` when
/// bit `l-1-i` is clear.
fn field_diagonal(state: usize, l: usize, h: f64) -> f64 {
    let ones = (state as u64).count_ones() as f64;
    h * (l as f64 - 2.0 * ones)
}

fn hamiltonian_real(l: usize, h: f64, boundary: Boundary) -> DMatrix<f64> {
    let dim = 1usize << l;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    let bonds = bonds(l, boundary);
    for s in 0..dim {
        m[(s, s)] = field_diagonal(s, l, h);
        for &(i, j) in &bonds {
            let t = s ^ (1 << (l - 1 - i)) ^ (1 << (l - 1 - j));
            m[(t, s)] -= 1.0;
        }
    }
    m
}

/// Dense Hamiltonian as a full operator (chains up to [`DENSE_CAP`] sites).
pub fn ising_hamiltonian(spec: &IsingSpec) -> Result<HermitianMatrix> {
    spec.validate()?;
    if spec.length > DENSE_CAP {
        return Err(SepError::InvalidParameter(format!(
            "length {} exceeds dense cap {}",
            spec.length, DENSE_CAP
        )));
    }
    HermitianMatrix::from_real(
        hamiltonian_real(spec.length, spec.field, spec.boundary),
        Some(vec![2; spec.length]),
    )
}

fn thermal_weights(energies: &[f64], t: f64) -> Result<Vec<f64>> {
    if t < 0.0 {
        return Err(SepError::InvalidParameter(format!("temperature {} < 0", t)));
    }
    let e0 = energies.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut w: Vec<f64> = if t == 0.0 {
        let tol = 1e-10 * e0.abs().max(1.0);
        energies
            .iter()
            .map(|&e| if e - e0 <= tol { 1.0 } else { 0.0 })
            .collect()
    } else {
        energies.iter().map(|&e| (-(e - e0) / t).exp()).collect()
    };
    let z: f64 = w.iter().sum();
    for x in &mut w {
        *x /= z;
        if *x < WEIGHT_CUTOFF {
            *x = 0.0;
        }
    }
    let z2: f64 = w.iter().sum();
    for x in &mut w {
        *x /= z2;
    }
    Ok(w)
}

/// `exp(-H/T) / Z` by full spectral decomposition; `T = 0` yields the
/// normalized ground-space projector.
pub fn gibbs_state(h: &HermitianMatrix, t: f64) -> Result<HermitianMatrix> {
    let es = eigh(h, DEFAULT_RANK_TOL)?;
    let w = thermal_weights(&es.eigenvalues, t)?;
    let n = es.eigenvalues.len();
    let mut scaled = es.eigenvectors.clone();
    for (k, &wk) in w.iter().enumerate() {
        for i in 0..n {
            scaled[(i, k)] *= wk;
        }
    }
    HermitianMatrix::symmetrized(&scaled * es.eigenvectors.adjoint(), h.dims().map(|d| d.to_vec()))
}

/// Cached eigendecomposition of a chain Hamiltonian, reusable across
/// temperatures. Real arithmetic throughout.
pub struct IsingEnsemble {
    length: usize,
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl IsingEnsemble {
    pub fn new(length: usize, field: f64, boundary: Boundary) -> Result<Self> {
        let spec = IsingSpec {
            length,
            field,
            boundary,
            temperature: 0.0,
        };
        spec.validate()?;
        if length > DENSE_CAP {
            return Err(SepError::InvalidParameter(format!(
                "length {} exceeds dense cap {}",
                length, DENSE_CAP
            )));
        }
        let m = hamiltonian_real(length, field, boundary);
        let dim = m.nrows();
        let se = m
            .try_symmetric_eigen(f64::EPSILON, 30 * dim + 1000)
            .ok_or(SepError::EigenConvergence)?;
        Ok(Self {
            length,
            energies: se.eigenvalues.iter().copied().collect(),
            vectors: se.eigenvectors,
        })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn ground_energy(&self) -> f64 {
        self.energies.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Reduced density matrix of `sites` at temperature `t`, accumulated
    /// directly from thermally weighted eigenvectors.
    pub fn rdm(&self, t: f64, sites: &[usize]) -> Result<HermitianMatrix> {
        let w = thermal_weights(&self.energies, t)?;
        let mut rho: Option<DMatrix<f64>> = None;
        for (k, &wk) in w.iter().enumerate() {
            if wk == 0.0 {
                continue;
            }
            let col: Vec<f64> = self.vectors.column(k).iter().copied().collect();
            let m = reshape_vector(&col, self.length, sites)?;
            let contrib = &m * m.transpose() * wk;
            rho = Some(match rho {
                None => contrib,
                Some(acc) => acc + contrib,
            });
        }
        let rho = rho.ok_or_else(|| SepError::InvalidParameter("all thermal weights truncated".into()))?;
        HermitianMatrix::from_real(rho, Some(vec![2; sites.len()]))
    }
}

/// Reshapes a pure-state vector into a (kept x environment) matrix for the
/// given site subset, kept sites ordered as in the chain.
fn reshape_vector(v: &[f64], l: usize, sites: &[usize]) -> Result<DMatrix<f64>> {
    if sites.is_empty() {
        return Err(SepError::InvalidParameter("empty site set".into()));
    }
    let mut kept = sites.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if kept.len() != sites.len() || kept.iter().any(|&q| q >= l) {
        return Err(SepError::InvalidParameter(format!(
            "site set {:?} invalid for chain of {} sites",
            sites, l
        )));
    }
    let env: Vec<usize> = (0..l).filter(|q| !kept.contains(q)).collect();
    let dk = 1usize << kept.len();
    let de = 1usize << env.len();
    let mut m = DMatrix::<f64>::zeros(dk, de);
    for s in 0..(1usize << l) {
        let mut ik = 0usize;
        for &q in &kept {
            ik = ik << 1 | (s >> (l - 1 - q)) & 1;
        }
        let mut ie = 0usize;
        for &q in &env {
            ie = ie << 1 | (s >> (l - 1 - q)) & 1;
        }
        m[(ik, ie)] = v[s];
    }
    Ok(m)
}

/// Matrix-free Lanczos ground state with full reorthogonalization.
/// Returns the ground energy and a normalized ground vector.
pub fn lanczos_ground(l: usize, h: f64, boundary: Boundary) -> Result<(f64, Vec<f64>)> {
    if l < 2 || l > LANCZOS_CAP {
        return Err(SepError::InvalidParameter(format!(
            "length {} outside 2..={}",
            l, LANCZOS_CAP
        )));
    }
    let dim = 1usize << l;
    let bonds = bonds(l, boundary);
    let matvec = |x: &[f64], y: &mut [f64]| {
        for s in 0..dim {
            y[s] = field_diagonal(s, l, h) * x[s];
        }
        for &(i, j) in &bonds {
            let flip = (1usize << (l - 1 - i)) | (1usize << (l - 1 - j));
            for s in 0..dim {
                y[s ^ flip] -= x[s];
            }
        }
    };

    // all-ones start: the ground state has nonnegative amplitudes in this
    // basis (off-diagonal couplings are nonpositive), so the overlap is nonzero
    let norm0 = (dim as f64).sqrt();
    let mut basis: Vec<Vec<f64>> = vec![vec![1.0 / norm0; dim]];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut prev_theta = f64::INFINITY;
    let max_steps = dim.min(300);
    let mut w = vec![0.0; dim];

    for step in 0..max_steps {
        let q = basis[step].clone();
        matvec(&q, &mut w);
        let alpha: f64 = q.iter().zip(w.iter()).map(|(a, b)| a * b).sum();
        alphas.push(alpha);
        // full reorthogonalization, twice for stability
        for _ in 0..2 {
            for b in &basis {
                let proj: f64 = b.iter().zip(w.iter()).map(|(a, c)| a * c).sum();
                for (wi, bi) in w.iter_mut().zip(b.iter()) {
                    *wi -= proj * bi;
                }
            }
        }
        let beta: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let theta = tridiag_ground(&alphas, &betas).0;
        let converged = (prev_theta - theta).abs() <= 1e-13 * theta.abs().max(1.0);
        prev_theta = theta;
        if beta < 1e-12 || converged || step + 1 == max_steps {
            break;
        }
        betas.push(beta);
        basis.push(w.iter().map(|x| x / beta).collect());
    }

    let (theta, y) = tridiag_ground(&alphas, &betas);
    let mut ground = vec![0.0; dim];
    for (c, b) in y.iter().zip(basis.iter()) {
        for (g, x) in ground.iter_mut().zip(b.iter()) {
            *g += c * x;
        }
    }
    let n: f64 = ground.iter().map(|x| x * x).sum::<f64>().sqrt();
    for g in &mut ground {
        *g /= n;
    }
    Ok((theta, ground))
}

/// Smallest eigenpair of the Lanczos tridiagonal matrix.
fn tridiag_ground(alphas: &[f64], betas: &[f64]) -> (f64, Vec<f64>) {
    let k = alphas.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let se = t.symmetric_eigen();
    let mut idx = 0;
    for i in 1..k {
        if se.eigenvalues[i] < se.eigenvalues[idx] {
            idx = i;
        }
    }
    (se.eigenvalues[idx], se.eigenvectors.column(idx).iter().copied().collect())
}

/// Reduced density matrix of `sites` for the chain described by `spec`.
/// Ground states route through matrix-free Lanczos (chains up to
/// [`LANCZOS_CAP`]); finite temperature through dense diagonalization.
pub fn ising_rdm(spec: &IsingSpec, sites: &[usize]) -> Result<HermitianMatrix> {
    spec.validate()?;
    if spec.temperature == 0.0 {
        let (_, v) = lanczos_ground(spec.length, spec.field, spec.boundary)?;
        let m = reshape_vector(&v, spec.length, sites)?;
        let rho = &m * m.transpose();
        HermitianMatrix::from_real(rho, Some(vec![2; sites.len()]))
    } else {
        let ens = IsingEnsemble::new(spec.length, spec.field, spec.boundary)?;
        ens.rdm(spec.temperature, sites)
    }
}
