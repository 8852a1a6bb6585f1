//! Three-qubit X states: diagonal `(a_1..a_4, b_4..b_1)` with anti-diagonal
//! coherences `c_1..c_4`, and their closed-form single-qubit marginals.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SepError};
use crate::qmat::HermitianMatrix;

const TRACE_TOL: f64 = 1e-12;
const POSITIVITY_TOL: f64 = 1e-12;

/// Parameters of a three-qubit X state: `a_j` on the upper diagonal, `b_j` on
/// the lower, `c_j` on the anti-diagonal (`c_j` at row `j-1`).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct XStateParams {
    pub a: [f64; 4],
    pub b: [f64; 4],
    pub c: [(f64, f64); 4],
}

impl XStateParams {
    pub fn new(a: [f64; 4], b: [f64; 4], c: [Complex64; 4]) -> Result<Self> {
        let p = Self {
            a,
            b,
            c: [
                (c[0].re, c[0].im),
                (c[1].re, c[1].im),
                (c[2].re, c[2].im),
                (c[3].re, c[3].im),
            ],
        };
        p.validate()?;
        Ok(p)
    }

    /// The worked example: `a = (1/8, 1/8, 1/32, 1/64)`,
    /// `b = (1/8, 1/8, 7/32, 15/64)`, `c = (1/12, 1/24, 1/24, 1/36)`.
    pub fn reference() -> Self {
        Self {
            a: [1.0 / 8.0, 1.0 / 8.0, 1.0 / 32.0, 1.0 / 64.0],
            b: [1.0 / 8.0, 1.0 / 8.0, 7.0 / 32.0, 15.0 / 64.0],
            c: [
                (1.0 / 12.0, 0.0),
                (1.0 / 24.0, 0.0),
                (1.0 / 24.0, 0.0),
                (1.0 / 36.0, 0.0),
            ],
        }
    }

    pub fn c_complex(&self, j: usize) -> Complex64 {
        Complex64::new(self.c[j].0, self.c[j].1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.iter().chain(self.b.iter()).any(|&v| v < 0.0) {
            return Err(SepError::InvalidParameter(
                "diagonal entries must be nonnegative".into(),
            ));
        }
        let trace: f64 = self.a.iter().sum::<f64>() + self.b.iter().sum::<f64>();
        if (trace - 1.0).abs() > TRACE_TOL {
            return Err(SepError::InvalidParameter(format!(
                "trace is {}, expected 1",
                trace
            )));
        }
        for j in 0..4 {
            let c2 = self.c[j].0 * self.c[j].0 + self.c[j].1 * self.c[j].1;
            if c2 > self.a[j] * self.b[j] + POSITIVITY_TOL {
                return Err(SepError::InvalidParameter(format!(
                    "|c_{}|^2 = {} exceeds a_{} b_{} = {}",
                    j + 1,
                    c2,
                    j + 1,
                    j + 1,
                    self.a[j] * self.b[j]
                )));
            }
        }
        Ok(())
    }

    /// Dephasing channel with strength `p` in `[0, 1]`: every anti-diagonal
    /// coherence is damped by `(1 - p)^(3/2)`.
    pub fn dephase(&self, p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(SepError::InvalidParameter(format!(
                "dephasing strength {} outside [0, 1]",
                p
            )));
        }
        let damp = (1.0 - p).powf(1.5);
        let mut out = self.clone();
        for cj in &mut out.c {
            cj.0 *= damp;
            cj.1 *= damp;
        }
        Ok(out)
    }
}

/// Assembles the 8x8 X-shaped density matrix: diagonal
/// `(a_1, a_2, a_3, a_4, b_4, b_3, b_2, b_1)`, coherence `c_j` at `(j-1, 8-j)`.
pub fn x_state(params: &XStateParams) -> Result<HermitianMatrix> {
    params.validate()?;
    let mut m = DMatrix::<Complex64>::zeros(8, 8);
    for j in 0..4 {
        m[(j, j)] = Complex64::new(params.a[j], 0.0);
        m[(7 - j, 7 - j)] = Complex64::new(params.b[j], 0.0);
        let c = params.c_complex(j);
        m[(j, 7 - j)] = c;
        m[(7 - j, j)] = c.conj();
    }
    HermitianMatrix::new(m, Some(vec![2, 2, 2]))
}

/// Closed-form single-qubit marginals; diagonal and independent of `c`.
pub fn x_state_rdms(params: &XStateParams) -> Result<[HermitianMatrix; 3]> {
    params.validate()?;
    let a = &params.a;
    let b = &params.b;
    let r1 = HermitianMatrix::from_diagonal(&[
        a[0] + a[1] + a[2] + a[3],
        b[0] + b[1] + b[2] + b[3],
    ]);
    let r2 = HermitianMatrix::from_diagonal(&[
        a[0] + a[1] + b[2] + b[3],
        b[0] + b[1] + a[2] + a[3],
    ]);
    let r3 = HermitianMatrix::from_diagonal(&[
        a[0] + b[1] + a[2] + b[3],
        b[0] + a[1] + b[2] + a[3],
    ]);
    Ok([r1, r2, r3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::partial_trace;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn reference_state_is_valid() {
        let p = XStateParams::reference();
        let rho = x_state(&p).unwrap();
        assert_abs_diff_eq!(rho.trace(), 1.0, epsilon = 1e-14);
        assert!(rho.min_eigenvalue().unwrap() > 0.0);
        // anti-diagonal placement
        assert_abs_diff_eq!(rho.entry(0, 7).re, 1.0 / 12.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.entry(3, 4).re, 1.0 / 36.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_coherence_is_diagonal() {
        let mut p = XStateParams::reference();
        p.c = [(0.0, 0.0); 4];
        let rho = x_state(&p).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert_abs_diff_eq!(rho.entry(i, j).norm(), 0.0, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn rejects_positivity_violation() {
        let mut p = XStateParams::reference();
        p.c[0] = (0.2, 0.0); // 0.04 > a_1 b_1 = 1/64
        assert!(x_state(&p).is_err());
    }

    #[test]
    fn rejects_bad_trace() {
        let mut p = XStateParams::reference();
        p.a[0] += 0.1;
        assert!(p.validate().is_err());
    }

    #[test]
    fn dephasing_endpoints_and_midpoint() {
        let p = XStateParams::reference();
        let p0 = p.dephase(0.0).unwrap();
        assert_abs_diff_eq!(p0.c[0].0, p.c[0].0, epsilon = 1e-15);
        let p1 = p.dephase(1.0).unwrap();
        for cj in &p1.c {
            assert_abs_diff_eq!(cj.0, 0.0, epsilon = 1e-15);
        }
        let ph = p.dephase(0.5).unwrap();
        assert_abs_diff_eq!(ph.c[0].0, (1.0 / 12.0) * 0.5f64.powf(1.5), epsilon = 1e-12);
        assert!(p.dephase(1.5).is_err());
        assert!(p.dephase(-0.1).is_err());
    }

    #[test]
    fn rdms_match_partial_trace_and_reference_values() {
        let p = XStateParams::reference();
        let rho = x_state(&p).unwrap();
        let rdms = x_state_rdms(&p).unwrap();
        assert_abs_diff_eq!(rdms[0].entry(0, 0).re, 0.296875, epsilon = 1e-14);
        assert_abs_diff_eq!(rdms[0].entry(1, 1).re, 0.703125, epsilon = 1e-14);
        assert_abs_diff_eq!(rdms[1].entry(0, 0).re, 0.703125, epsilon = 1e-14);
        assert_abs_diff_eq!(rdms[2].entry(0, 0).re, 0.515625, epsilon = 1e-14);
        for (q, rdm) in rdms.iter().enumerate() {
            let pt = partial_trace(&rho, &[2, 2, 2], &[q]).unwrap();
            assert!((pt.raw() - rdm.raw()).norm() < 1e-12);
        }
    }

    #[test]
    fn rdms_independent_of_coherences() {
        let p = XStateParams::reference();
        let mut q = p.clone();
        q.c = [(0.0, 0.01), (0.01, 0.0), (0.0, 0.0), (0.005, -0.005)];
        let ra = x_state_rdms(&p).unwrap();
        let rb = x_state_rdms(&q).unwrap();
        for (x, y) in ra.iter().zip(rb.iter()) {
            assert!((x.raw() - y.raw()).norm() < 1e-15);
        }
    }

    #[test]
    fn random_valid_params_are_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let mut a = [0.0; 4];
            let mut b = [0.0; 4];
            let mut total = 0.0;
            for j in 0..4 {
                a[j] = rng.gen::<f64>();
                b[j] = rng.gen::<f64>();
                total += a[j] + b[j];
            }
            for j in 0..4 {
                a[j] /= total;
                b[j] /= total;
            }
            let mut c = [(0.0, 0.0); 4];
            for j in 0..4 {
                let r = (a[j] * b[j]).sqrt() * rng.gen::<f64>();
                let phi = rng.gen::<f64>() * std::f64::consts::TAU;
                c[j] = (r * phi.cos(), r * phi.sin());
            }
            let p = XStateParams { a, b, c };
            let rho = x_state(&p).unwrap();
            assert!(rho.min_eigenvalue().unwrap() >= -1e-10);
        }
    }
}
