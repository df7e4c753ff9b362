//! Closed-form translation-invariant solutions on the abelian surface: the
//! algebraic reduction of the real moment map for rank-one Higgs tensors
//! depending on `y1` alone. Serves as the independent oracle for the 2D
//! solver.
//!
//! For the second family `xi = [[c, F(y1)], [F, F^2/c]]` and the ansatz
//! `u = |y|^2/2 + f(y1)`, the flux entry of the real moment map is
//!
//! ```text
//!   V11 = 1/g - T(p),   g = 1 + f'',  p = g |c|^2 + |F|^2,
//!   T(p) = p / (1 + sqrt(1 - p^2/|c|^2)),
//! ```
//!
//! and the equation `(V11)'' = 0` with periodicity forces `V11` constant:
//! pointwise `T(p) = 1/g + k` for a constant `k` fixed by `mean(f'') = 0`.
//! `T` is strictly increasing in `g` while `1/g + k` is strictly decreasing,
//! so the pointwise root is unique in the admissible band `p < |c|`; the
//! constant `k` is then pinned down by monotone bisection. At `F = 0` this
//! reproduces the flat solution with `1 + k = 1 - sqrt(1 - |c|^2)`.

use crate::linalg::C64;
use crate::torusfield::{MatrixField, ScalarField, SymplecticPotential, TorusGrid};
use rustfft::FftPlanner;
use thiserror::Error;

/// Nonsingularity margin: outputs keep `p^2 <= |c|^2 (1 - EPSILON)`.
pub const EPSILON: f64 = 0.01;

/// Second-family solutions exist (uniquely up to constants) for `|c| < 3/10`.
pub const C_BOUND: f64 = 0.3;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("constraint violated: {0}")]
    ConstraintViolated(String),
    #[error("root left the admissible branch: {0}")]
    BranchLost(String),
    #[error(transparent)]
    Field(#[from] crate::torusfield::FieldError),
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Rank-one translation-invariant Higgs tensor, sampled uniformly on `[0, 1)`.
#[derive(Clone, Debug)]
pub enum LowRankHiggs {
    /// `xi = [[0, 0], [0, xi22(y1)]]`.
    FirstType { xi22: Vec<C64> },
    /// `xi = [[c, F(y1)], [F(y1), F(y1)^2 / c]]` with `c != 0`.
    SecondType { c: C64, f12: Vec<C64> },
}

impl LowRankHiggs {
    pub fn first_type_from_fn(samples: usize, f: impl Fn(f64) -> C64) -> Self {
        let xi22 = (0..samples).map(|i| f(i as f64 / samples as f64)).collect();
        LowRankHiggs::FirstType { xi22 }
    }

    pub fn second_type_from_fn(c: C64, samples: usize, f: impl Fn(f64) -> C64) -> Self {
        let f12 = (0..samples).map(|i| f(i as f64 / samples as f64)).collect();
        LowRankHiggs::SecondType { c, f12 }
    }

    pub fn samples(&self) -> usize {
        match self {
            LowRankHiggs::FirstType { xi22 } => xi22.len(),
            LowRankHiggs::SecondType { f12, .. } => f12.len(),
        }
    }
}

/// Solution data of the reduced algebraic equation.
#[derive(Clone, Debug)]
pub struct Oracle1DResult {
    /// `f''` per sample, zero mean.
    pub fpp: Vec<f64>,
    /// The constant of integration (`T(p) - 1/g`).
    pub k: f64,
    /// `p = (1 + f'') |c|^2 + |F|^2` per sample (second family; zero
    /// otherwise).
    pub p: Vec<f64>,
    /// Pointwise algebraic residual `|T(p) - 1/g - k|`.
    pub residual: Vec<f64>,
}

impl Oracle1DResult {
    pub fn residual_sup(&self) -> f64 {
        self.residual.iter().fold(0.0_f64, |m, &v| m.max(v))
    }
}

fn t_of_p(p: f64, c2: f64) -> f64 {
    p / (1.0 + (1.0 - p * p / c2).max(0.0).sqrt())
}

/// Pointwise root of `T(g |c|^2 + absf2) = 1/g + k` in `g`; unique since the
/// left side increases and the right side decreases.
fn solve_g(c_abs: f64, absf2: f64, k: f64) -> f64 {
    let c2 = c_abs * c_abs;
    let psi = |g: f64| t_of_p(g * c2 + absf2, c2) - 1.0 / g - k;
    let mut lo = 1e-12;
    let mut hi = (c_abs * (1.0 - 1e-13) - absf2) / c2;
    debug_assert!(psi(lo) < 0.0 && psi(hi) > 0.0, "root bracket failed");
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if psi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solve the reduced real moment map equation. The first family always
/// returns the flat solution; the second family solves the pointwise
/// algebraic equation with the constant fixed by the zero-average gauge.
pub fn solve_translation_invariant(h: &LowRankHiggs) -> Result<Oracle1DResult> {
    match h {
        LowRankHiggs::FirstType { xi22 } => {
            let sup = xi22.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
            if sup >= 1.0 {
                return Err(OracleError::ConstraintViolated(format!(
                    "first-family entry has |xi22| = {sup} >= 1"
                )));
            }
            let n = xi22.len();
            Ok(Oracle1DResult { fpp: vec![0.0; n], k: 0.0, p: vec![0.0; n], residual: vec![0.0; n] })
        }
        LowRankHiggs::SecondType { c, f12 } => {
            let c_abs = c.norm();
            if c_abs == 0.0 || c_abs >= C_BOUND {
                return Err(OracleError::ConstraintViolated(format!(
                    "|c| = {c_abs} outside (0, {C_BOUND})"
                )));
            }
            let absf2: Vec<f64> = f12.iter().map(|z| z.norm_sqr()).collect();
            for (i, &a2) in absf2.iter().enumerate() {
                if a2 > c_abs * c_abs * (1.0 + 1e-14) {
                    return Err(OracleError::ConstraintViolated(format!(
                        "|F({i})| exceeds |c|"
                    )));
                }
            }
            let n = f12.len();
            let mean_g = |k: f64| -> f64 {
                absf2.iter().map(|&a2| solve_g(c_abs, a2, k)).sum::<f64>() / n as f64
            };
            // mean(g) is increasing in k; bracket endpoints established by
            // T in (0, |c|] and the zero-average identity.
            let mut k_lo = -1.0 + 1e-12;
            let mut k_hi = c_abs - 1.0;
            if !(mean_g(k_lo) < 1.0 && mean_g(k_hi) >= 1.0 - 1e-13) {
                return Err(OracleError::BranchLost("zero-average bracket failed".into()));
            }
            for _ in 0..80 {
                let k_mid = 0.5 * (k_lo + k_hi);
                if mean_g(k_mid) < 1.0 {
                    k_lo = k_mid;
                } else {
                    k_hi = k_mid;
                }
            }
            let k = 0.5 * (k_lo + k_hi);

            let c2 = c_abs * c_abs;
            let mut fpp = Vec::with_capacity(n);
            let mut p = Vec::with_capacity(n);
            let mut residual = Vec::with_capacity(n);
            for &a2 in &absf2 {
                let g = solve_g(c_abs, a2, k);
                let pv = g * c2 + a2;
                fpp.push(g - 1.0);
                p.push(pv);
                residual.push((t_of_p(pv, c2) - 1.0 / g - k).abs());
            }

            // Bounds chain and the nonsingularity margin.
            if !(k + 1.0 >= 0.0 && k + 1.0 <= c_abs + 1e-12) {
                return Err(OracleError::BranchLost(format!("k + 1 = {} outside [0, |c|]", k + 1.0)));
            }
            for (i, (&f, &pv)) in fpp.iter().zip(p.iter()).enumerate() {
                if 1.0 + f <= 0.0 {
                    return Err(OracleError::BranchLost(format!("positivity lost at sample {i}")));
                }
                if f + 1.0 + k > 1.0 + c_abs {
                    return Err(OracleError::BranchLost(format!("root bound lost at sample {i}")));
                }
                if pv * pv > c2 * (1.0 - EPSILON) {
                    return Err(OracleError::BranchLost(format!(
                        "nonsingularity margin lost at sample {i}: p = {pv}"
                    )));
                }
            }
            Ok(Oracle1DResult { fpp, k, p, residual })
        }
    }
}

fn fft1(values: &mut [C64], inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(values.len())
    } else {
        planner.plan_fft_forward(values.len())
    };
    fft.process(values);
    if inverse {
        let s = 1.0 / values.len() as f64;
        for v in values.iter_mut() {
            *v *= s;
        }
    }
}

fn decimate<T: Copy>(values: &[T], n_target: usize) -> Result<Vec<T>> {
    let m = values.len();
    if m == n_target {
        return Ok(values.to_vec());
    }
    if m % n_target != 0 {
        return Err(OracleError::ConstraintViolated(format!(
            "sample count {m} incompatible with grid {n_target}"
        )));
    }
    let stride = m / n_target;
    Ok(values.iter().step_by(stride).copied().collect())
}

/// Lift a 1D oracle solution to the 2-torus: `phi(y) = f(y1)` reconstructed
/// from `f''` by a double spectral antiderivative (zero-mean modes only),
/// and the Higgs field constant in `y2`.
pub fn lift_to_2d(
    r: &Oracle1DResult,
    h: &LowRankHiggs,
    grid: TorusGrid,
) -> Result<(SymplecticPotential, MatrixField)> {
    let n = grid.n_axis();
    let fpp = decimate(&r.fpp, n)?;

    // Double antiderivative in mode space: f_k = -fpp_k / (2 pi k)^2.
    let mut modes: Vec<C64> = fpp.iter().map(|&v| C64::new(v, 0.0)).collect();
    fft1(&mut modes, false);
    for (j, m) in modes.iter_mut().enumerate() {
        let k = if j <= n / 2 { j as i64 } else { j as i64 - n as i64 };
        if k == 0 {
            *m = C64::new(0.0, 0.0);
        } else {
            let w = crate::torusfield::TAU * k as f64;
            *m /= -w * w;
        }
    }
    fft1(&mut modes, true);
    let f_line: Vec<f64> = modes.iter().map(|z| z.re).collect();

    let phi = ScalarField::from_fn(grid, |y| {
        let i = (y[0] * n as f64).round() as usize % n;
        f_line[i]
    });
    let u = SymplecticPotential::new(phi);

    let xi = match h {
        LowRankHiggs::FirstType { xi22 } => {
            let line = decimate(xi22, n)?;
            let mut xi = MatrixField::zeros(grid);
            for idx in 0..grid.nodes() {
                let i = idx / n;
                xi.m22[idx] = line[i];
            }
            xi
        }
        LowRankHiggs::SecondType { c, f12 } => {
            let line = decimate(f12, n)?;
            let mut xi = MatrixField::zeros(grid);
            for idx in 0..grid.nodes() {
                let i = idx / n;
                let f = line[i];
                xi.m11[idx] = *c;
                xi.m12[idx] = f;
                xi.m22[idx] = f * f / c;
            }
            xi
        }
    };
    Ok((u, xi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complexmm::{integrability_defect, residual_complex};
    use crate::realmm::residual_real;
    use crate::torusfield::TAU;

    fn c64(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn flat_higgs_constant_solution() {
        let h = LowRankHiggs::second_type_from_fn(c64(0.2, 0.0), 256, |_| c64(0.0, 0.0));
        let r = solve_translation_invariant(&h).unwrap();
        assert!(r.fpp.iter().all(|&v| v.abs() < 1e-12));
        let expect = 1.0 - (1.0 - 0.04_f64).sqrt();
        assert!(
            (r.k + 1.0 - expect).abs() < 1e-9,
            "1 + k = {} vs {}",
            r.k + 1.0,
            expect
        );
        assert!(r.residual_sup() < 1e-12);
    }

    #[test]
    fn first_family_is_flat() {
        let h = LowRankHiggs::first_type_from_fn(128, |y| c64(0.3 * (TAU * y).sin(), 0.4));
        let r = solve_translation_invariant(&h).unwrap();
        assert!(r.fpp.iter().all(|&v| v == 0.0));
        assert_eq!(r.k, 0.0);
    }

    #[test]
    fn oscillating_higgs_solution() {
        let h = LowRankHiggs::second_type_from_fn(c64(0.2, 0.0), 1024, |y| {
            C64::from_polar(0.1 * (TAU * y).sin(), std::f64::consts::FRAC_PI_4)
        });
        let r = solve_translation_invariant(&h).unwrap();
        assert!(r.residual_sup() <= 1e-12, "residual {}", r.residual_sup());
        let mean: f64 = r.fpp.iter().sum::<f64>() / r.fpp.len() as f64;
        assert!(mean.abs() <= 1e-12, "mean fpp {mean}");
        assert!(r.fpp.iter().any(|&v| v.abs() > 1e-5), "solution should be nonflat");

        // Bounds chain.
        let c_abs = 0.2;
        assert!(r.k + 1.0 >= 0.0 && r.k + 1.0 <= c_abs);
        for (&f, &p) in r.fpp.iter().zip(r.p.iter()) {
            assert!(1.0 + f >= 1.0 - c_abs);
            assert!(f + 1.0 + r.k <= 1.0 + c_abs);
            assert!(p * p <= c_abs * c_abs * (1.0 - EPSILON));
        }
    }

    #[test]
    fn u1_invariance_of_moduli() {
        let base = solve_translation_invariant(&LowRankHiggs::second_type_from_fn(
            c64(0.2, 0.0),
            512,
            |y| c64(0.1 * (TAU * y).cos(), 0.0),
        ))
        .unwrap();
        let rotated = solve_translation_invariant(&LowRankHiggs::second_type_from_fn(
            C64::from_polar(0.2, 1.1),
            512,
            |y| C64::from_polar(0.1 * (TAU * y).cos(), -0.7),
        ))
        .unwrap();
        for (a, b) in base.fpp.iter().zip(rotated.fpp.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!((base.k - rotated.k).abs() < 1e-13);
    }

    #[test]
    fn constraint_violations() {
        let h = LowRankHiggs::second_type_from_fn(c64(0.35, 0.0), 64, |_| c64(0.0, 0.0));
        assert!(matches!(
            solve_translation_invariant(&h),
            Err(OracleError::ConstraintViolated(_))
        ));
        let h = LowRankHiggs::second_type_from_fn(c64(0.2, 0.0), 64, |_| c64(0.25, 0.0));
        assert!(matches!(
            solve_translation_invariant(&h),
            Err(OracleError::ConstraintViolated(_))
        ));
        let h = LowRankHiggs::first_type_from_fn(64, |_| c64(1.5, 0.0));
        assert!(matches!(
            solve_translation_invariant(&h),
            Err(OracleError::ConstraintViolated(_))
        ));
    }

    #[test]
    fn lift_flat_cases() {
        let grid = TorusGrid::new(32).unwrap();
        // fpp = 0 -> u = u0.
        let h = LowRankHiggs::second_type_from_fn(c64(0.2, 0.0), 32, |_| c64(0.0, 0.0));
        let r = solve_translation_invariant(&h).unwrap();
        let (u, xi) = lift_to_2d(&r, &h, grid).unwrap();
        assert!(u.phi.sup_norm() < 1e-12);
        // Constant xi: real residual vanishes identically.
        let res = residual_real(&u, &xi, 0.0).unwrap();
        assert!(res.sup_norm() < 1e-12);
    }

    #[test]
    fn lift_oscillating_case() {
        let grid = TorusGrid::new(64).unwrap();
        let h = LowRankHiggs::second_type_from_fn(c64(0.2, 0.0), 1024, |y| {
            c64(0.1 * (TAU * y).sin(), 0.0)
        });
        let r = solve_translation_invariant(&h).unwrap();
        let (u, xi) = lift_to_2d(&r, &h, grid).unwrap();
        assert!(residual_complex(&xi).sup_norm() <= 1e-10);
        let res = residual_real(&u, &xi, 0.0).unwrap();
        assert!(res.sup_norm() <= 1e-6, "real residual {}", res.sup_norm());
    }

    #[test]
    fn lift_integrability() {
        let grid = TorusGrid::new(64).unwrap();
        // Nonconstant F: not integrable.
        let h = LowRankHiggs::second_type_from_fn(c64(0.2, 0.0), 64, |y| {
            c64(0.1 * (TAU * y).sin(), 0.0)
        });
        let r = solve_translation_invariant(&h).unwrap();
        let (u, xi) = lift_to_2d(&r, &h, grid).unwrap();
        let defect = integrability_defect(&u, &xi).unwrap();
        assert!(defect > 0.1, "expected nonintegrable, defect {defect}");

        // Constant F: integrable.
        let h = LowRankHiggs::second_type_from_fn(c64(0.2, 0.0), 64, |_| c64(0.1, 0.05));
        let r = solve_translation_invariant(&h).unwrap();
        let (u, xi) = lift_to_2d(&r, &h, grid).unwrap();
        let defect = integrability_defect(&u, &xi).unwrap();
        assert!(defect <= 1e-10, "expected integrable, defect {defect}");
    }
}
