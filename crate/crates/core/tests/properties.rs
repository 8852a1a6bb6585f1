//! Randomized invariants over the certificate and state machinery.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;

use sepcert::criteria::{ball_criterion, ellipsoid_criterion, trace_criterion, c_m_bound};
use sepcert::decomp::PartitionSpec;
use sepcert::detect::{natural_product_state, negativity};
use sepcert::models::xstate::XStateParams;
use sepcert::qmat::{
    eigh, exchange, partial_trace, HermitianMatrix, ProductState, DEFAULT_RANK_TOL,
};
use sepcert::volume::log_volume_ratio;

fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_density(dim: usize, rng: &mut ChaCha8Rng) -> HermitianMatrix {
    let g = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let m = &g * g.adjoint();
    let tr = m.trace().re;
    HermitianMatrix::new(m.scale(1.0 / tr), None).unwrap()
}

fn random_product(dims: &[usize], rng: &mut ChaCha8Rng) -> ProductState {
    let factors = dims
        .iter()
        .map(|&d| {
            let m = random_density(d, rng).raw().scale(0.8)
                + DMatrix::<Complex64>::identity(d, d).scale(0.2 / d as f64);
            HermitianMatrix::new(m, None).unwrap()
        })
        .collect();
    ProductState::new(factors).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn criterion_implication_chain(seed in any::<u64>(), scale_exp in -2.0f64..1.0) {
        let mut rng = rng_from(seed);
        let dims = [vec![2, 2], vec![2, 3], vec![2, 2, 2]][seed as usize % 3].clone();
        let d: usize = dims.iter().product();
        let prod = random_product(&dims, &mut rng);
        let lam_min = eigh(&prod.assembled(), DEFAULT_RANK_TOL).unwrap().min();
        let h = random_density(d, &mut rng).raw()
            - DMatrix::<Complex64>::identity(d, d).scale(1.0 / d as f64);
        let pert = h.scale(lam_min * 10f64.powf(scale_exp) / h.norm().max(1e-300));
        let rho = HermitianMatrix::new(prod.assembled().raw() + pert, Some(dims.clone())).unwrap();

        let ball = ball_criterion(&rho, &prod).unwrap();
        let ell = ellipsoid_criterion(&rho, &prod, DEFAULT_RANK_TOL).unwrap();
        let tr = trace_criterion(&rho, &prod, DEFAULT_RANK_TOL).unwrap();
        prop_assert!(!(ball.certified() && !ell.certified()),
            "ball margin {} but ellipsoid margin {}", ball.margin, ell.margin);
        prop_assert!(!(ell.certified() && !tr.certified()),
            "ellipsoid margin {} but trace margin {}", ell.margin, tr.margin);
    }

    #[test]
    fn trace_margin_scale_invariant(seed in any::<u64>(), alpha in 0.01f64..100.0) {
        let mut rng = rng_from(seed);
        let rho = random_density(4, &mut rng).with_dims(vec![2, 2]).unwrap();
        let prod = random_product(&[2, 2], &mut rng);
        let a = trace_criterion(&rho, &prod, DEFAULT_RANK_TOL).unwrap();
        let b = trace_criterion(&rho.scaled(alpha), &prod, DEFAULT_RANK_TOL).unwrap();
        prop_assert!((a.margin - b.margin).abs() < 1e-9,
            "margins {} vs {} at alpha {}", a.margin, b.margin, alpha);
    }

    #[test]
    fn center_always_certified(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let dims = [vec![2, 2], vec![3, 2], vec![2, 2, 2]][seed as usize % 3].clone();
        let prod = random_product(&dims, &mut rng);
        let rho = prod.assembled();
        prop_assert!(ellipsoid_criterion(&rho, &prod, DEFAULT_RANK_TOL).unwrap().certified());
        prop_assert!(ball_criterion(&rho, &prod).unwrap().certified());
        prop_assert!(trace_criterion(&rho, &prod, DEFAULT_RANK_TOL).unwrap().certified());
    }

    #[test]
    fn certified_two_qubit_states_are_ppt(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let bip = PartitionSpec::bipartitions(2).remove(0);
        for _ in 0..20 {
            let rho = random_density(4, &mut rng).with_dims(vec![2, 2]).unwrap();
            let prod = natural_product_state(&rho, &[2, 2]).unwrap();
            let certified = trace_criterion(&rho, &prod, DEFAULT_RANK_TOL).unwrap().certified()
                || ellipsoid_criterion(&rho, &prod, DEFAULT_RANK_TOL).unwrap().certified();
            if certified {
                let neg = negativity(&rho, &[2, 2], &bip).unwrap();
                prop_assert!(neg <= 1e-10, "certified state with negativity {}", neg);
            }
        }
    }

    #[test]
    fn c_m_in_unit_interval_and_decreasing(m in 2usize..7, d in 2usize..5) {
        let dims = vec![d; m];
        let c = c_m_bound(&dims).unwrap();
        prop_assert!(c.value > 0.0 && c.value <= 1.0);
        if m > 2 {
            let smaller = c_m_bound(&vec![d; m - 1]).unwrap();
            prop_assert!(c.value <= smaller.value + 1e-12,
                "c_{} = {} exceeds c_{} = {}", m, c.value, m - 1, smaller.value);
        }
    }

    #[test]
    fn volume_ratio_nonnegative_and_permutation_invariant(
        spectrum in proptest::collection::vec(1e-6f64..1.0, 2..12),
        swap in any::<(usize, usize)>(),
    ) {
        let a = log_volume_ratio(&spectrum).unwrap();
        prop_assert!(a.log10_ratio >= 0.0);
        let mut shuffled = spectrum.clone();
        let n = shuffled.len();
        shuffled.swap(swap.0 % n, swap.1 % n);
        let b = log_volume_ratio(&shuffled).unwrap();
        prop_assert!((a.log10_ratio - b.log10_ratio).abs() < 1e-9);
    }

    #[test]
    fn partial_trace_preserves_trace_and_positivity(seed in any::<u64>(), keep in 0usize..3) {
        let mut rng = rng_from(seed);
        let rho = random_density(8, &mut rng).with_dims(vec![2, 2, 2]).unwrap();
        let red = partial_trace(&rho, &[2, 2, 2], &[keep]).unwrap();
        prop_assert!((red.trace() - rho.trace()).abs() < 1e-12);
        prop_assert!(red.min_eigenvalue().unwrap() > -1e-12);
    }

    #[test]
    fn exchange_round_trip(seed in any::<u64>()) {
        let mut rng = rng_from(seed);
        let rho = random_density(4, &mut rng).with_dims(vec![2, 2]).unwrap();
        let text = exchange::write_matrix(&rho);
        let back = exchange::read_matrix(&text).unwrap();
        prop_assert!((back.raw() - rho.raw()).norm() < 1e-14);
        // After one round trip the representation is a fixed point byte-for-byte.
        let text2 = exchange::write_matrix(&back);
        let back2 = exchange::read_matrix(&text2).unwrap();
        prop_assert_eq!(exchange::write_matrix(&back2), text2);
    }

    #[test]
    fn k_partitions_are_valid_and_counted(m in 2usize..6) {
        let bips = PartitionSpec::bipartitions(m);
        prop_assert_eq!(bips.len(), (1usize << (m - 1)) - 1);
        for p in &bips {
            prop_assert_eq!(p.block_count(), 2);
            let covered: usize = p.blocks().iter().map(|b| b.len()).sum();
            prop_assert_eq!(covered, m);
        }
        prop_assert_eq!(PartitionSpec::k_partitions(m, 2).len(), bips.len());
    }

    #[test]
    fn dephasing_margin_monotone(p1 in 0.0f64..1.0, p2 in 0.0f64..1.0) {
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let base = XStateParams::reference();
        let probe = |p: f64| {
            let rho = sepcert::models::xstate::x_state(&base.dephase(p).unwrap()).unwrap();
            let prod = natural_product_state(&rho, &[2, 2, 2]).unwrap();
            trace_criterion(&rho, &prod, DEFAULT_RANK_TOL).unwrap().margin
        };
        prop_assert!(probe(hi) <= probe(lo) + 1e-12);
    }

    #[test]
    fn werner_boundary_sides(eps in 1e-6f64..0.2) {
        let werner = |v: f64| {
            let mut bell = DMatrix::<Complex64>::zeros(4, 4);
            for &(i, j) in &[(0usize, 0usize), (0, 3), (3, 0), (3, 3)] {
                bell[(i, j)] = Complex64::new(0.5, 0.0);
            }
            let id = DMatrix::<Complex64>::identity(4, 4);
            HermitianMatrix::new(bell.scale(v) + id.scale((1.0 - v) / 4.0), Some(vec![2, 2])).unwrap()
        };
        let id2 = HermitianMatrix::identity(2).scaled(0.5);
        let uniform = ProductState::new(vec![id2.clone(), id2]).unwrap();
        let inside = trace_criterion(&werner(1.0 / 3.0 - eps / 3.0), &uniform, DEFAULT_RANK_TOL).unwrap();
        prop_assert!(inside.certified());
        let outside = trace_criterion(&werner(1.0 / 3.0 + eps), &uniform, DEFAULT_RANK_TOL).unwrap();
        prop_assert!(!outside.certified());
    }
}
