//! The linear complex moment map equation `xi^{ab}_{,ab} = 0`.
//!
//! In Fourier modes the equation decouples: a mode `xi_k` contributes
//! `k^T xi_k k`, so the solution space is the per-mode kernel of that
//! constraint. This module provides the residual, the L2-orthogonal
//! projection onto the kernel (weights (1, 2, 1) on `(xi11, xi12, xi22)`, the
//! Frobenius norm of symmetric matrices), solutions built from antisymmetric
//! T-tensors, the linearization of `det` on the solution space, and the
//! integrability defect.

use crate::linalg::C64;
use crate::matfun::SymMatC;
use crate::torusfield::{
    double_divergence, fft2_forward, fft2_inverse, hessian, spectral_derivative_c, ComplexField,
    MatrixField, SymplecticPotential, TorusGrid,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ComplexMmError {
    #[error("T-tensor is not antisymmetric in its last two slots")]
    AntisymmetryViolated,
    #[error("mode k = ({0}, {1}) is obstructed: the det differential vanishes on the kernel")]
    ModeObstructed(i64, i64),
    #[error(transparent)]
    Field(#[from] crate::torusfield::FieldError),
}

pub type Result<T> = std::result::Result<T, ComplexMmError>;

/// Residual of the complex moment map equation, `sum_{a,b} d_a d_b xi^{ab}`.
pub fn residual_complex(xi: &MatrixField) -> ComplexField {
    double_divergence(xi)
}

/// Per-mode constraint `k1^2 xi11 + 2 k1 k2 xi12 + k2^2 xi22`.
pub fn mode_constraint(k: [i64; 2], xi_k: &SymMatC) -> C64 {
    let (k1, k2) = (k[0] as f64, k[1] as f64);
    xi_k[(0, 0)] * k1 * k1 + xi_k[(0, 1)] * 2.0 * k1 * k2 + xi_k[(1, 1)] * k2 * k2
}

/// Weights of the mode-space inner product making it the L2 Frobenius
/// product on symmetric matrix fields.
const WEIGHTS: [f64; 3] = [1.0, 2.0, 1.0];

/// Grid-consistent constraint symbol at mode indices (i, j): the even symbol
/// `e_a = k_a^2` survives at Nyquist while the odd symbol `o_a` vanishes
/// there, matching the derivative operators of `torusfield`.
fn constraint_vector(grid: &TorusGrid, i: usize, j: usize) -> [f64; 3] {
    let n = grid.n_axis();
    let k1 = grid.wavenumber(i) as f64;
    let k2 = grid.wavenumber(j) as f64;
    let o1 = if i == n / 2 { 0.0 } else { k1 };
    let o2 = if j == n / 2 { 0.0 } else { k2 };
    [k1 * k1, 2.0 * o1 * o2, k2 * k2]
}

struct ModeBuffers {
    grid: TorusGrid,
    b11: Vec<C64>,
    b12: Vec<C64>,
    b22: Vec<C64>,
}

fn to_modes(xi: &MatrixField) -> ModeBuffers {
    let n = xi.grid.n_axis();
    let mut b11 = xi.m11.clone();
    let mut b12 = xi.m12.clone();
    let mut b22 = xi.m22.clone();
    fft2_forward(&mut b11, n);
    fft2_forward(&mut b12, n);
    fft2_forward(&mut b22, n);
    ModeBuffers { grid: xi.grid, b11, b12, b22 }
}

fn from_modes(mut m: ModeBuffers) -> MatrixField {
    let n = m.grid.n_axis();
    fft2_inverse(&mut m.b11, n);
    fft2_inverse(&mut m.b12, n);
    fft2_inverse(&mut m.b22, n);
    MatrixField { grid: m.grid, m11: m.b11, m12: m.b12, m22: m.b22 }
}

/// Orthogonal projection, mode by mode, onto the kernel of the complex
/// moment map constraint, under the weighted inner product. Idempotent; the
/// residual of the output vanishes to spectral accuracy.
pub fn fourier_project(xi: &MatrixField) -> MatrixField {
    let mut m = to_modes(xi);
    let n = m.grid.n_axis();
    for i in 0..n {
        for j in 0..n {
            let v = constraint_vector(&m.grid, i, j);
            let gram: f64 = (0..3).map(|t| v[t] * v[t] / WEIGHTS[t]).sum();
            if gram == 0.0 {
                continue; // zero mode: unconstrained
            }
            let idx = i * n + j;
            let cval = [m.b11[idx], m.b12[idx], m.b22[idx]];
            let lc = cval[0] * v[0] + cval[1] * v[1] + cval[2] * v[2];
            let lambda = lc / gram;
            m.b11[idx] = cval[0] - lambda * (v[0] / WEIGHTS[0]);
            m.b12[idx] = cval[1] - lambda * (v[1] / WEIGHTS[1]);
            m.b22[idx] = cval[2] - lambda * (v[2] / WEIGHTS[2]);
        }
    }
    from_modes(m)
}

/// Antisymmetric tensor `T^{abc} = -T^{acb}` on the torus. For n = 2 the
/// independent components are `T^{112}` and `T^{212}`.
#[derive(Clone, Debug)]
pub struct TTensor {
    pub t112: ComplexField,
    pub t212: ComplexField,
}

impl TTensor {
    pub fn new(t112: ComplexField, t212: ComplexField) -> Self {
        assert_eq!(t112.grid, t212.grid);
        TTensor { t112, t212 }
    }

    /// Build from all eight components `T^{abc}` (index order `a*4 + b*2 + c`),
    /// verifying antisymmetry in (b, c).
    pub fn from_components(grid: TorusGrid, comp: &[Vec<C64>; 8]) -> Result<Self> {
        for v in comp.iter() {
            assert_eq!(v.len(), grid.nodes());
        }
        let tol = 1e-14;
        for a in 0..2 {
            for idx in 0..grid.nodes() {
                let t_a11 = comp[a * 4][idx];
                let t_a12 = comp[a * 4 + 1][idx];
                let t_a21 = comp[a * 4 + 2][idx];
                let t_a22 = comp[a * 4 + 3][idx];
                if t_a11.norm() > tol || t_a22.norm() > tol || (t_a12 + t_a21).norm() > tol {
                    return Err(ComplexMmError::AntisymmetryViolated);
                }
            }
        }
        Ok(TTensor {
            t112: ComplexField { grid, values: comp[1].clone() },
            t212: ComplexField { grid, values: comp[5].clone() },
        })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        TTensor { t112: ComplexField::zeros(grid), t212: ComplexField::zeros(grid) }
    }
}

/// Zero the Nyquist modes (either axis) of a complex field. T-tensor content
/// at the Nyquist index is not representable by the skew-adjoint derivative
/// convention, so it is dropped before differentiating.
fn nyquist_filter(f: &ComplexField) -> ComplexField {
    let n = f.grid.n_axis();
    let mut buf = f.values.clone();
    fft2_forward(&mut buf, n);
    for i in 0..n {
        for j in 0..n {
            if i == n / 2 || j == n / 2 {
                buf[i * n + j] = C64::new(0.0, 0.0);
            }
        }
    }
    fft2_inverse(&mut buf, n);
    ComplexField { grid: f.grid, values: buf }
}

/// The general solution of the complex moment map equation built from an
/// antisymmetric tensor: `xi^{ab} = d_c T^{abc} + d_c T^{bac}`. The output
/// satisfies `residual_complex = 0` to spectral accuracy.
pub fn from_t_tensor(t: &TTensor) -> MatrixField {
    let t1 = nyquist_filter(&t.t112);
    let t2 = nyquist_filter(&t.t212);
    // xi11 = 2 d2 t112, xi12 = -d1 t112 + d2 t212, xi22 = -2 d1 t212.
    let d2_t1 = spectral_derivative_c(&t1, &[1]);
    let d1_t1 = spectral_derivative_c(&t1, &[0]);
    let d2_t2 = spectral_derivative_c(&t2, &[1]);
    let d1_t2 = spectral_derivative_c(&t2, &[0]);
    let grid = t1.grid;
    let mut out = MatrixField::zeros(grid);
    for idx in 0..grid.nodes() {
        out.m11[idx] = 2.0 * d2_t1.values[idx];
        out.m12[idx] = -d1_t1.values[idx] + d2_t2.values[idx];
        out.m22[idx] = -2.0 * d1_t2.values[idx];
    }
    out
}

/// Solve the linearized determinant equation on the solution space of the
/// complex moment map: find the minimal-norm `xi` (per mode, weighted inner
/// product) with `residual_complex(xi) = 0` and
/// `Tr(adj(xi0) xi) = gamma xi11 - 2 beta xi12 + alpha xi22 = f`.
///
/// A mode is obstructed when the det differential vanishes identically on
/// that mode's kernel while `f` has content there; for interior modes
/// (`k1 k2 != 0`) that is exactly the coincidence
/// `gamma = -(k1/k2) beta`, `alpha = -(k2/k1) beta`.
pub fn det_linearization_solve(xi0: &SymMatC, f: &ComplexField) -> Result<MatrixField> {
    let grid = f.grid;
    let n = grid.n_axis();
    let mut buf = f.values.clone();
    fft2_forward(&mut buf, n);
    let f_scale = buf.iter().fold(0.0_f64, |m, z| m.max(z.norm()));

    let alpha = xi0[(0, 0)];
    let beta = xi0[(0, 1)];
    let gamma = xi0[(1, 1)];
    // det differential as a functional on (xi11, xi12, xi22)
    let d = [gamma, -2.0 * beta, alpha];
    let g_d = [d[0].conj() / WEIGHTS[0], d[1].conj() / WEIGHTS[1], d[2].conj() / WEIGHTS[2]];
    let gd_norm2: f64 = (0..3).map(|t| g_d[t].norm_sqr() * WEIGHTS[t]).sum();

    let mut m = ModeBuffers {
        grid,
        b11: vec![C64::new(0.0, 0.0); grid.nodes()],
        b12: vec![C64::new(0.0, 0.0); grid.nodes()],
        b22: vec![C64::new(0.0, 0.0); grid.nodes()],
    };

    for i in 0..n {
        for j in 0..n {
            let idx = i * n + j;
            let fk = buf[idx];
            let v = constraint_vector(&grid, i, j);
            let gram: f64 = (0..3).map(|t| v[t] * v[t] / WEIGHTS[t]).sum();
            // Project the Riesz direction of the det functional onto the
            // mode kernel.
            let mut p = g_d;
            if gram > 0.0 {
                let vg: C64 = (0..3).map(|t| g_d[t] * v[t]).sum();
                let lambda = vg / gram;
                for t in 0..3 {
                    p[t] -= lambda * (v[t] / WEIGHTS[t]);
                }
            }
            let denom: C64 = (0..3).map(|t| d[t] * p[t]).sum();
            if denom.norm() <= 1e-14 * gd_norm2.max(1e-300) {
                if fk.norm() > 1e-12 * f_scale.max(1e-300) {
                    return Err(ComplexMmError::ModeObstructed(
                        grid.wavenumber(i),
                        grid.wavenumber(j),
                    ));
                }
                continue;
            }
            let cc = fk / denom;
            m.b11[idx] = cc * p[0];
            m.b12[idx] = cc * p[1];
            m.b22[idx] = cc * p[2];
        }
    }
    Ok(from_modes(m))
}

/// `Tr(adj(xi0) xi)` as a field, the det differential at `xi0` applied to a
/// matrix field.
pub fn det_differential(xi0: &SymMatC, xi: &MatrixField) -> ComplexField {
    let alpha = xi0[(0, 0)];
    let beta = xi0[(0, 1)];
    let gamma = xi0[(1, 1)];
    let mut out = ComplexField::zeros(xi.grid);
    for idx in 0..xi.grid.nodes() {
        out.values[idx] = gamma * xi.m11[idx] - 2.0 * beta * xi.m12[idx] + alpha * xi.m22[idx];
    }
    out
}

/// Integrability defect of a Higgs field: with `H = G xi G`, the deviation of
/// `d_c H_ab` from full symmetry (max over nodes and index triples). Zero at
/// grid resolution iff `xi` is the push-forward of a Hessian.
pub fn integrability_defect(u: &SymplecticPotential, xi: &MatrixField) -> Result<f64> {
    let g = hessian(u)?;
    let grid = xi.grid;
    let mut h11 = ComplexField::zeros(grid);
    let mut h12 = ComplexField::zeros(grid);
    let mut h22 = ComplexField::zeros(grid);
    for idx in 0..grid.nodes() {
        let (g11, g12, g22) = (g.a11[idx], g.a12[idx], g.a22[idx]);
        let (x11, x12, x22) = (xi.m11[idx], xi.m12[idx], xi.m22[idx]);
        // G xi
        let a11 = x11 * g11 + x12 * g12;
        let a12 = x12 * g11 + x22 * g12;
        let a21 = x11 * g12 + x12 * g22;
        let a22 = x12 * g12 + x22 * g22;
        // (G xi) G
        h11.values[idx] = a11 * g11 + a12 * g12;
        h12.values[idx] = a11 * g12 + a12 * g22;
        let h21 = a21 * g11 + a22 * g12;
        h22.values[idx] = a21 * g12 + a22 * g22;
        debug_assert!((h12.values[idx] - h21).norm() < 1e-10);
    }
    let d2_h11 = spectral_derivative_c(&h11, &[1]);
    let d1_h12 = spectral_derivative_c(&h12, &[0]);
    let d2_h12 = spectral_derivative_c(&h12, &[1]);
    let d1_h22 = spectral_derivative_c(&h22, &[0]);
    let mut defect = 0.0_f64;
    for idx in 0..grid.nodes() {
        defect = defect
            .max((d2_h11.values[idx] - d1_h12.values[idx]).norm())
            .max((d2_h12.values[idx] - d1_h22.values[idx]).norm());
    }
    Ok(defect)
}

// ---------------------------------------------------------------------------
// Fourier-mode tables
// ---------------------------------------------------------------------------

/// Sparse table of Fourier coefficients of a Higgs field.
#[derive(Clone, Debug, Default)]
pub struct FourierModes {
    pub entries: Vec<([i64; 2], [C64; 3])>,
}

impl FourierModes {
    /// Synthesize the matrix field `sum_k xi_k e^{2 pi i k.y}` on a grid.
    /// Modes beyond the grid resolution are rejected.
    pub fn synthesize(&self, grid: TorusGrid) -> Result<MatrixField> {
        let n = grid.n_axis() as i64;
        let mut m = ModeBuffers {
            grid,
            b11: vec![C64::new(0.0, 0.0); grid.nodes()],
            b12: vec![C64::new(0.0, 0.0); grid.nodes()],
            b22: vec![C64::new(0.0, 0.0); grid.nodes()],
        };
        let scale = grid.nodes() as f64;
        for (k, c) in &self.entries {
            if k[0].abs() > n / 2 || k[1].abs() > n / 2 {
                return Err(ComplexMmError::Field(crate::torusfield::FieldError::BadFile(
                    format!("mode ({}, {}) beyond grid resolution", k[0], k[1]),
                )));
            }
            let i = k[0].rem_euclid(n) as usize;
            let j = k[1].rem_euclid(n) as usize;
            let idx = i * grid.n_axis() + j;
            m.b11[idx] += c[0] * scale;
            m.b12[idx] += c[1] * scale;
            m.b22[idx] += c[2] * scale;
        }
        Ok(from_modes(m))
    }

    /// Full mode table of a matrix field.
    pub fn analyze(xi: &MatrixField) -> FourierModes {
        let m = to_modes(xi);
        let n = m.grid.n_axis();
        let scale = 1.0 / m.grid.nodes() as f64;
        let mut entries = Vec::with_capacity(m.grid.nodes());
        for i in 0..n {
            for j in 0..n {
                let idx = i * n + j;
                entries.push((
                    [m.grid.wavenumber(i), m.grid.wavenumber(j)],
                    [m.b11[idx] * scale, m.b12[idx] * scale, m.b22[idx] * scale],
                ));
            }
        }
        FourierModes { entries }
    }

    /// CSV rows `k1,k2` then Re/Im of the three coefficients.
    pub fn to_csv(&self, out: &mut String) {
        for (k, c) in &self.entries {
            out.push_str(&format!(
                "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                k[0], k[1], c[0].re, c[0].im, c[1].re, c[1].im, c[2].re, c[2].im
            ));
        }
    }
}
