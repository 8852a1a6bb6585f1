//! Closest-(k-)separable-state search: multi-restart Adam descent on an
//! unconstrained parameterization (weights as squares, factors as Gram
//! products), so every iterate is a valid decomposition by construction.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decomp::{DecompositionTerm, PartitionSpec, SeparableDecomposition};
use crate::error::{Result, SepError};
use crate::qmat::{join_index, partial_trace, split_index, HermitianMatrix, ProductState};

/// Floor added to pivot-term factors so the first term of every partition
/// stays safely full-rank (the downstream criteria need a full-rank pivot).
pub const PIVOT_FLOOR: f64 = 0.1;

/// Eigenvalue clip for factor initialization.
const INIT_CLIP: f64 = 1e-6;

/// Noise amplitude for non-pivot initialization.
const INIT_NOISE: f64 = 0.05;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizerConfig {
    /// Number of product terms in the ansatz.
    pub ansatz_terms: usize,
    /// Total gradient iterations, split over a fixed learning-rate schedule.
    pub max_iters: usize,
    pub restarts: usize,
    pub seed: u64,
    pub step_tolerance: f64,
    pub distance_tolerance: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            ansatz_terms: 8,
            max_iters: 10_000,
            restarts: 3,
            seed: 0,
            step_tolerance: 1e-12,
            distance_tolerance: 1e-9,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.ansatz_terms < 1 {
            return Err(SepError::InvalidParameter("ansatz_terms must be >= 1".into()));
        }
        if self.step_tolerance <= 0.0 || self.distance_tolerance <= 0.0 {
            return Err(SepError::InvalidParameter("tolerances must be positive".into()));
        }
        if self.restarts < 1 || self.max_iters < 1 {
            return Err(SepError::InvalidParameter(
                "restarts and max_iters must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct OptimizeOutcome {
    pub decomposition: SeparableDecomposition,
    pub distance: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// One ansatz term: scalar `s` (weight `s^2`) and one unconstrained complex
/// `G` per partition block (factor `G G†`, plus the pivot floor if flagged).
#[derive(Clone)]
struct Term {
    s: f64,
    gs: Vec<DMatrix<Complex64>>,
    partition: usize,
    pivot: bool,
}

struct Workspace<'a> {
    rho: &'a DMatrix<Complex64>,
    dims: &'a [usize],
    partitions: &'a [PartitionSpec],
    d: usize,
}

impl Workspace<'_> {
    fn factors(&self, t: &Term) -> Vec<DMatrix<Complex64>> {
        t.gs
            .iter()
            .map(|g| {
                let mut a = g * g.adjoint();
                if t.pivot {
                    for i in 0..a.nrows() {
                        a[(i, i)] += Complex64::new(PIVOT_FLOOR, 0.0);
                    }
                }
                a
            })
            .collect()
    }

    /// Embeds the product of block factors into the full index ordering.
    fn embed(&self, factors: &[DMatrix<Complex64>], partition: &PartitionSpec) -> DMatrix<Complex64> {
        let blocks = partition.blocks();
        let mut out = DMatrix::zeros(self.d, self.d);
        for i in 0..self.d {
            let si = split_index(i, self.dims);
            for j in 0..self.d {
                let sj = split_index(j, self.dims);
                let mut val = Complex64::new(1.0, 0.0);
                for (b, block) in blocks.iter().enumerate() {
                    let bd: Vec<usize> = block.iter().map(|&q| self.dims[q]).collect();
                    let bi: Vec<usize> = block.iter().map(|&q| si[q]).collect();
                    let bj: Vec<usize> = block.iter().map(|&q| sj[q]).collect();
                    val *= factors[b][(join_index(&bi, &bd), join_index(&bj, &bd))];
                }
                out[(i, j)] = val;
            }
        }
        out
    }

    /// Contraction of `Delta` with all factors except block `bi`; the partial
    /// derivative of `Tr[Delta K]` with respect to factor `bi` is its transpose.
    fn contract(
        &self,
        delta: &DMatrix<Complex64>,
        factors: &[DMatrix<Complex64>],
        partition: &PartitionSpec,
        bi: usize,
    ) -> DMatrix<Complex64> {
        let blocks = partition.blocks();
        let bd_i: Vec<usize> = blocks[bi].iter().map(|&q| self.dims[q]).collect();
        let dbl: usize = bd_i.iter().product();
        let mut n = DMatrix::<Complex64>::zeros(dbl, dbl);
        for i in 0..self.d {
            let si = split_index(i, self.dims);
            for j in 0..self.d {
                let sj = split_index(j, self.dims);
                let mut val = delta[(i, j)];
                for (b, block) in blocks.iter().enumerate() {
                    if b == bi {
                        continue;
                    }
                    let bd: Vec<usize> = block.iter().map(|&q| self.dims[q]).collect();
                    let bi_idx: Vec<usize> = block.iter().map(|&q| si[q]).collect();
                    let bj_idx: Vec<usize> = block.iter().map(|&q| sj[q]).collect();
                    val *= factors[b][(join_index(&bj_idx, &bd), join_index(&bi_idx, &bd))];
                }
                let ri: Vec<usize> = blocks[bi].iter().map(|&q| sj[q]).collect();
                let ci: Vec<usize> = blocks[bi].iter().map(|&q| si[q]).collect();
                n[(join_index(&ri, &bd_i), join_index(&ci, &bd_i))] += val;
            }
        }
        n
    }

    /// Objective `f = ||rho - K||_F^2` and gradient over the flat parameters.
    fn value_grad(&self, terms: &[Term], grad: &mut [f64]) -> f64 {
        let mut k = DMatrix::<Complex64>::zeros(self.d, self.d);
        let mut per_term: Vec<(Vec<DMatrix<Complex64>>, DMatrix<Complex64>)> =
            Vec::with_capacity(terms.len());
        for t in terms {
            let factors = self.factors(t);
            let kj = self.embed(&factors, &self.partitions[t.partition]);
            k += kj.scale(t.s * t.s);
            per_term.push((factors, kj));
        }
        let delta = self.rho - &k;
        let f = delta.norm_squared();

        let mut pos = 0usize;
        for (t, (factors, kj)) in terms.iter().zip(per_term.iter()) {
            let overlap: f64 = (0..self.d)
                .map(|i| (0..self.d).map(|j| (delta[(i, j)] * kj[(j, i)]).re).sum::<f64>())
                .sum();
            grad[pos] = -4.0 * t.s * overlap;
            pos += 1;
            for (bi, g) in t.gs.iter().enumerate() {
                let n = self.contract(&delta, factors, &self.partitions[t.partition], bi);
                // d f / d A = -2 s^2 conj(N); chain rule through A = G G†
                let fmat = n.map(|z| Complex64::new(-2.0 * t.s * t.s * z.re, 2.0 * t.s * t.s * z.im));
                let fg = (&fmat * g).scale(2.0);
                for z in fg.iter() {
                    grad[pos] = z.re;
                    pos += 1;
                }
                for z in fg.iter() {
                    grad[pos] = z.im;
                    pos += 1;
                }
            }
        }
        f
    }
}

fn param_count(terms: &[Term]) -> usize {
    terms
        .iter()
        .map(|t| 1 + t.gs.iter().map(|g| 2 * g.len()).sum::<usize>())
        .sum()
}

fn pack(terms: &[Term], x: &mut [f64]) {
    let mut pos = 0;
    for t in terms {
        x[pos] = t.s;
        pos += 1;
        for g in &t.gs {
            for z in g.iter() {
                x[pos] = z.re;
                pos += 1;
            }
            for z in g.iter() {
                x[pos] = z.im;
                pos += 1;
            }
        }
    }
}

fn unpack(terms: &mut [Term], x: &[f64]) {
    let mut pos = 0;
    for t in terms.iter_mut() {
        t.s = x[pos];
        pos += 1;
        for g in t.gs.iter_mut() {
            let n = g.len();
            let (re, rest) = x[pos..].split_at(n);
            let im = &rest[..n];
            for (idx, z) in g.iter_mut().enumerate() {
                *z = Complex64::new(re[idx], im[idx]);
            }
            pos += 2 * n;
        }
    }
}

/// Initial ansatz: pivot terms seeded from the block marginals of `rho` with
/// the floor subtracted; the rest from noisy marginals.
fn initialize(
    rho: &HermitianMatrix,
    dims: &[usize],
    partitions: &[PartitionSpec],
    u: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Term>> {
    let npiv = partitions.len().min(u);
    let mut terms = Vec::with_capacity(u);
    for j in 0..u {
        let pi = j % partitions.len();
        let pivot = j < npiv;
        let mut gs = Vec::new();
        for block in partitions[pi].blocks() {
            let red = partial_trace(rho, dims, block)?;
            let es = crate::qmat::eigh(&red, crate::qmat::DEFAULT_RANK_TOL)?;
            let dbl = red.dim();
            let mut g = DMatrix::<Complex64>::zeros(dbl, dbl);
            for (kcol, &lam) in es.eigenvalues.iter().enumerate() {
                let mut w = lam.max(INIT_CLIP);
                if pivot {
                    w = (w - PIVOT_FLOOR).max(INIT_CLIP);
                }
                let sw = w.sqrt();
                for i in 0..dbl {
                    g[(i, kcol)] = es.eigenvectors[(i, kcol)] * sw;
                }
            }
            if !pivot {
                for z in g.iter_mut() {
                    let re = sample_normal(rng);
                    let im = sample_normal(rng);
                    *z += Complex64::new(INIT_NOISE * re, INIT_NOISE * im);
                }
            }
            gs.push(g);
        }
        terms.push(Term {
            s: (1.0 / u as f64).sqrt(),
            gs,
            partition: pi,
            pivot,
        });
    }
    Ok(terms)
}

fn sample_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller from two uniforms
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Learning-rate schedule as (fraction of max_iters, rate).
const STAGES: [(f64, f64); 4] = [(0.2, 0.03), (0.2, 0.005), (0.3, 5e-4), (0.3, 5e-5)];

fn run_restart(
    rho: &HermitianMatrix,
    dims: &[usize],
    partitions: &[PartitionSpec],
    cfg: &OptimizerConfig,
    restart: usize,
) -> Result<(f64, Vec<Term>, usize, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(
        cfg.seed ^ (restart as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
    );
    let mut terms = initialize(rho, dims, partitions, cfg.ansatz_terms, &mut rng)?;
    let ws = Workspace {
        rho: rho.raw(),
        dims,
        partitions,
        d: rho.dim(),
    };
    let n = param_count(&terms);
    let mut x = vec![0.0; n];
    pack(&terms, &mut x);
    let mut grad = vec![0.0; n];
    let mut best_f = f64::INFINITY;
    let mut best_x = x.clone();
    let mut total_iters = 0usize;
    let mut last_stage_improvement = f64::INFINITY;

    for &(frac, lr) in STAGES.iter() {
        let iters = ((cfg.max_iters as f64 * frac).round() as usize).max(1);
        let stage_start_best = best_f;
        let mut mom = vec![0.0; n];
        let mut vel = vec![0.0; n];
        let (b1, b2, e8): (f64, f64, f64) = (0.9, 0.999, 1e-8);
        for it in 0..iters {
            unpack(&mut terms, &x);
            let f = ws.value_grad(&terms, &mut grad);
            if f < best_f {
                best_f = f;
                best_x.copy_from_slice(&x);
            }
            let bc1 = 1.0 - b1.powi(it as i32 + 1);
            let bc2 = 1.0 - b2.powi(it as i32 + 1);
            for i in 0..n {
                mom[i] = b1 * mom[i] + (1.0 - b1) * grad[i];
                vel[i] = b2 * vel[i] + (1.0 - b2) * grad[i] * grad[i];
                x[i] -= lr * (mom[i] / bc1) / ((vel[i] / bc2).sqrt() + e8);
            }
            total_iters += 1;
            if best_f <= cfg.distance_tolerance * cfg.distance_tolerance {
                break;
            }
        }
        last_stage_improvement = stage_start_best - best_f;
        x.copy_from_slice(&best_x);
        if best_f <= cfg.distance_tolerance * cfg.distance_tolerance {
            break;
        }
    }
    unpack(&mut terms, &best_x);
    let converged = best_f.sqrt() <= cfg.distance_tolerance
        || last_stage_improvement.abs() <= cfg.step_tolerance * best_f.max(1.0);
    Ok((best_f.sqrt(), terms, total_iters, converged))
}

/// Finds a nearby (k-)separable state as a weighted sum of positive product
/// terms distributed round-robin over `partitions`. Deterministic in
/// `cfg.seed`; restarts run in parallel and the best result wins.
pub fn closest_separable_state(
    rho: &HermitianMatrix,
    partitions: &[PartitionSpec],
    cfg: &OptimizerConfig,
) -> Result<OptimizeOutcome> {
    cfg.validate()?;
    if partitions.is_empty() {
        return Err(SepError::InvalidPartition("no partitions given".into()));
    }
    let dims = rho
        .dims()
        .ok_or_else(|| SepError::DimensionMismatch("state carries no subsystem dims".into()))?
        .to_vec();
    let k = partitions[0].block_count();
    for p in partitions {
        if p.subsystem_count() != dims.len() {
            return Err(SepError::InvalidPartition(
                "partition subsystem count does not match state dims".into(),
            ));
        }
        if p.block_count() != k {
            return Err(SepError::InvalidPartition(
                "all partitions must share one block count".into(),
            ));
        }
    }

    let results: Vec<Result<(f64, Vec<Term>, usize, bool)>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_restart(rho, &dims, partitions, cfg, r))
        .collect();
    let mut best: Option<(f64, Vec<Term>, usize, bool)> = None;
    for r in results {
        let r = r?;
        if best.as_ref().map_or(true, |b| r.0 < b.0) {
            best = Some(r);
        }
    }
    let (distance, terms, iterations, converged) = best.expect("restarts >= 1");

    let ws = Workspace {
        rho: rho.raw(),
        dims: &dims,
        partitions,
        d: rho.dim(),
    };
    let dec_terms: Vec<DecompositionTerm> = terms
        .iter()
        .map(|t| {
            let factors = ws
                .factors(t)
                .into_iter()
                .map(|a| HermitianMatrix::new(a, None))
                .collect::<Result<Vec<_>>>()?;
            Ok(DecompositionTerm {
                weight: t.s * t.s,
                product: ProductState::new(factors)?,
                partition: partitions[t.partition].clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let decomposition = SeparableDecomposition::new(dec_terms, dims)?;
    Ok(OptimizeOutcome {
        decomposition,
        distance,
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::kron;
    use approx::assert_abs_diff_eq;

    fn quick_cfg() -> OptimizerConfig {
        OptimizerConfig {
            ansatz_terms: 4,
            max_iters: 3000,
            restarts: 1,
            seed: 7,
            ..OptimizerConfig::default()
        }
    }

    fn bell() -> HermitianMatrix {
        let mut m = DMatrix::<Complex64>::zeros(4, 4);
        for &(i, j) in &[(0usize, 0usize), (0, 3), (3, 0), (3, 3)] {
            m[(i, j)] = Complex64::new(0.5, 0.0);
        }
        HermitianMatrix::new(m, Some(vec![2, 2])).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let f1 = HermitianMatrix::from_diagonal(&[0.6, 0.4]);
        let f2 = HermitianMatrix::from_diagonal(&[0.3, 0.7]);
        let mut rho_m = kron(&f1, &f2).raw().clone();
        rho_m[(0, 3)] += Complex64::new(0.03, 0.01);
        rho_m[(3, 0)] += Complex64::new(0.03, -0.01);
        let rho = HermitianMatrix::new(rho_m, Some(vec![2, 2])).unwrap();
        let dims = vec![2usize, 2];
        let partitions = vec![PartitionSpec::singletons(2)];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut terms = initialize(&rho, &dims, &partitions, 2, &mut rng).unwrap();
        let ws = Workspace {
            rho: rho.raw(),
            dims: &dims,
            partitions: &partitions,
            d: 4,
        };
        let n = param_count(&terms);
        let mut x = vec![0.0; n];
        pack(&terms, &mut x);
        let mut grad = vec![0.0; n];
        unpack(&mut terms, &x);
        ws.value_grad(&terms, &mut grad);
        let h = 1e-6;
        for idx in [0usize, 1, 3, 8, n / 2, n - 1] {
            let mut xp = x.clone();
            xp[idx] += h;
            unpack(&mut terms, &xp);
            let fp = ws.value_grad(&terms, &mut vec![0.0; n]);
            let mut xm = x.clone();
            xm[idx] -= h;
            unpack(&mut terms, &xm);
            let fm = ws.value_grad(&terms, &mut vec![0.0; n]);
            let fd = (fp - fm) / (2.0 * h);
            assert_abs_diff_eq!(grad[idx], fd, epsilon = 1e-5);
        }
    }

    #[test]
    fn maximally_mixed_is_immediate() {
        let rho = HermitianMatrix::identity(4)
            .scaled(0.25)
            .with_dims(vec![2, 2])
            .unwrap();
        let out = closest_separable_state(&rho, &[PartitionSpec::singletons(2)], &quick_cfg()).unwrap();
        assert!(out.distance <= 1e-8, "distance {}", out.distance);
    }

    #[test]
    fn separable_product_reached() {
        let f1 = HermitianMatrix::from_diagonal(&[0.6, 0.4]);
        let f2 = HermitianMatrix::from_diagonal(&[0.3, 0.7]);
        let rho = kron(&f1, &f2).with_dims(vec![2, 2]).unwrap();
        let out = closest_separable_state(&rho, &[PartitionSpec::singletons(2)], &quick_cfg()).unwrap();
        assert!(out.distance <= 1e-5, "distance {}", out.distance);
    }

    #[test]
    fn bell_distance_bounded() {
        // the depolarized candidate at the Werner boundary gives 1/sqrt(3)
        let out = closest_separable_state(&bell(), &[PartitionSpec::singletons(2)], &quick_cfg()).unwrap();
        assert!(out.distance <= 0.578, "distance {}", out.distance);
        assert!(out.distance >= 0.3, "distance {}", out.distance);
    }

    #[test]
    fn deterministic_given_seed() {
        let rho = bell();
        let cfg = OptimizerConfig {
            max_iters: 400,
            ..quick_cfg()
        };
        let a = closest_separable_state(&rho, &[PartitionSpec::singletons(2)], &cfg).unwrap();
        let b = closest_separable_state(&rho, &[PartitionSpec::singletons(2)], &cfg).unwrap();
        assert_eq!(a.distance.to_bits(), b.distance.to_bits());
    }

    #[test]
    fn pivot_terms_are_full_rank() {
        let out = closest_separable_state(&bell(), &[PartitionSpec::singletons(2)], &quick_cfg()).unwrap();
        let first = out.decomposition.term_matrix(0).unwrap();
        let es = crate::qmat::eigh(&first, crate::qmat::DEFAULT_RANK_TOL).unwrap();
        assert!(es.min() > 0.0);
    }
}
