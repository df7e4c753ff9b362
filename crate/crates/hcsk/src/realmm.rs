//! The real moment map `((1 - xi G xibar G)^{1/2} G^{-1})^{ab}_{,ab} + C = 0`:
//! residual evaluation, the HK-energy with analytic gradient and Hessian
//! action, and the continuity-method solver.
//!
//! The solver minimizes `F̂_t = F + t H` for `t` stepped from 0 to 1, where
//! `F = -1/2 ∫ log det G` and `H = 1/2 ∫ rho(xi G xibar G)`. The gradient
//! uses the derivative kernel `alpha_check = 1/2 (1 + S)^{-1}` of `rho`
//! (`S = (1 - xi G xibar G)^{1/2}`), through the identity
//!
//! ```text
//!   grad F̂ = -1/2 ddiv(G^{-1}) + Re ddiv(alpha_check xi G xibar)
//!          = -1/2 residual
//! ```
//!
//! and the Hessian action linearizes `S` by the divided-difference kernel
//! `dS = Q [ -Y_ij / (s_i + s_j) ] Q^{-1}`, which stays regular when
//! eigenvalues collide (`s_i + s_j >= 2 sqrt(1 - specrad) > 0`), so no
//! finite-difference fallback is needed near degenerate spectra.

use crate::linalg::C64;
use crate::matfun::{bg_scalar, delta2};
use crate::torusfield::{
    double_divergence_opt, fft2_forward, fft2_inverse, hessian, hessian_of_field,
    hessian_unchecked, spec_rad_max_with_hessian, MatrixField, RealSymField, ScalarField,
    SymplecticPotential, TorusGrid, TAU,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RealMmError {
    #[error(transparent)]
    Field(#[from] crate::torusfield::FieldError),
    #[error("spectral radius {0} >= 1 at some node: pair is inadmissible")]
    SpectralRadiusExceeded(f64),
    #[error("imaginary part of the divergence leaks beyond tolerance: {0}")]
    ImaginaryLeak(f64),
    #[error("no admissible step; continuity path stalled at t = {t_reached}")]
    SafeguardViolated { t_reached: f64 },
    #[error("Newton did not converge at t = {t} (gradient sup-norm {grad_norm})")]
    NoConvergence { t: f64, grad_norm: f64 },
    #[error("bad solver options: {0}")]
    BadOptions(String),
}

pub type Result<T> = std::result::Result<T, RealMmError>;

// ---------------------------------------------------------------------------
// 2x2 complex matrix scratch arithmetic (row-major [a11, a12, a21, a22])
// ---------------------------------------------------------------------------

type M2 = [C64; 4];

#[inline]
fn m2_mul(a: &M2, b: &M2) -> M2 {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

#[inline]
fn m2_conj(a: &M2) -> M2 {
    [a[0].conj(), a[1].conj(), a[2].conj(), a[3].conj()]
}

#[inline]
fn m2_add(a: &M2, b: &M2) -> M2 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

#[inline]
fn m2_scale(a: &M2, s: f64) -> M2 {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

#[inline]
fn m2_from_sym(x11: C64, x12: C64, x22: C64) -> M2 {
    [x11, x12, x12, x22]
}

#[inline]
fn m2_from_real_sym(a: f64, b: f64, c: f64) -> M2 {
    [C64::new(a, 0.0), C64::new(b, 0.0), C64::new(b, 0.0), C64::new(c, 0.0)]
}

// ---------------------------------------------------------------------------
// Per-node spectral cache
// ---------------------------------------------------------------------------

/// Spectral data of one node, fixed while `u` is fixed. All functions of
/// `M = xi G xibar G` are evaluated as `Q f(Delta) Q^{-1}` with
/// `Q = G^{-1/2} U` for the unitary `U` diagonalizing the Hermitian
/// `N N^H`, `N = G^{1/2} xi G^{1/2}`.
struct NodeCache {
    gi: [f64; 3],
    q: M2,
    qinv: M2,
    s: [f64; 2],
    xi: [C64; 3],
    xibar: M2,
    xig: M2,
    xibg: M2,
    xigxib: M2,
    acheck: M2,
    acheck_xi: M2,
    phi_h: M2,
    v_res: M2,
}

/// Closed-form spectral factorization of a 2x2 Hermitian matrix. Returns
/// ascending eigenvalues (clamped at zero) and the unitary of eigenvectors.
fn herm2_eigen(h11: f64, h12: C64, h22: f64) -> ([f64; 2], M2) {
    let mean = 0.5 * (h11 + h22);
    let half_diff = 0.5 * (h11 - h22);
    let disc = (half_diff * half_diff + h12.norm_sqr()).sqrt();
    let lo = (mean - disc).max(0.0);
    let hi = (mean + disc).max(0.0);
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    if disc <= 1e-300 || h12.norm() <= 1e-18 * (h11.abs() + h22.abs()).max(1e-300) {
        if h11 <= h22 {
            return ([lo, hi], [one, zero, zero, one]);
        }
        return ([lo, hi], [zero, one, one, zero]);
    }
    // Eigenvector for `hi`: the better conditioned of (h12, hi - h11) and
    // (hi - h22, conj(h12)).
    let c1 = (h12, C64::new(hi - h11, 0.0));
    let c2 = (C64::new(hi - h22, 0.0), h12.conj());
    let n1 = c1.0.norm_sqr() + c1.1.norm_sqr();
    let n2 = c2.0.norm_sqr() + c2.1.norm_sqr();
    let (v1, v2) = if n1 >= n2 { c1 } else { c2 };
    let nrm = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
    let (v1, v2) = (v1 / nrm, v2 / nrm);
    ([lo, hi], [-v2.conj(), v1, v1.conj(), v2])
}

fn build_node_cache(
    g11: f64,
    g12: f64,
    g22: f64,
    x11: C64,
    x12: C64,
    x22: C64,
) -> Option<NodeCache> {
    let det = g11 * g22 - g12 * g12;
    if !(g11 > 0.0 && det > 0.0) {
        return None;
    }
    // W = G^{1/2} = (G + sqrt(det) 1) / sqrt(tr + 2 sqrt(det)).
    let sd = det.sqrt();
    let tnorm = (g11 + g22 + 2.0 * sd).sqrt();
    let (w11, w12, w22) = ((g11 + sd) / tnorm, g12 / tnorm, (g22 + sd) / tnorm);
    let wdet = w11 * w22 - w12 * w12;
    let (wi11, wi12, wi22) = (w22 / wdet, -w12 / wdet, w11 / wdet);

    let w = m2_from_real_sym(w11, w12, w22);
    let wi = m2_from_real_sym(wi11, wi12, wi22);
    let xi_m = m2_from_sym(x11, x12, x22);
    let nw = m2_mul(&m2_mul(&w, &xi_m), &w);
    let h11 = nw[0].norm_sqr() + nw[1].norm_sqr();
    let h22 = nw[2].norm_sqr() + nw[3].norm_sqr();
    let h12 = nw[0] * nw[2].conj() + nw[1] * nw[3].conj();
    let (delta, u) = herm2_eigen(h11, h12, h22);
    if delta[1] >= 1.0 {
        return None;
    }
    let s = [(1.0 - delta[0]).sqrt(), (1.0 - delta[1]).sqrt()];

    let q = m2_mul(&wi, &u);
    let uh = [u[0].conj(), u[2].conj(), u[1].conj(), u[3].conj()];
    let qinv = m2_mul(&uh, &w);

    let gc = m2_from_real_sym(g11, g12, g22);
    let gi = [g22 / det, -g12 / det, g11 / det];
    let gim = m2_from_real_sym(gi[0], gi[1], gi[2]);

    let xig = m2_mul(&xi_m, &gc);
    let xibg = m2_conj(&xig);
    let xibar = m2_conj(&xi_m);
    let xigxib = m2_mul(&xig, &xibar);

    let spectral = |f0: f64, f1: f64| -> M2 {
        let d = [C64::new(f0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(f1, 0.0)];
        m2_mul(&m2_mul(&q, &d), &qinv)
    };
    let acheck = spectral(0.5 / (1.0 + s[0]), 0.5 / (1.0 + s[1]));
    let smat = spectral(s[0], s[1]);
    let v_res = m2_mul(&smat, &gim);
    let acheck_xi = m2_mul(&acheck, &xi_m);
    let phi_h = m2_mul(&acheck, &xigxib);

    Some(NodeCache {
        gi,
        q,
        qinv,
        s,
        xi: [x11, x12, x22],
        xibar,
        xig,
        xibg,
        xigxib,
        acheck,
        acheck_xi,
        phi_h,
        v_res,
    })
}

struct FieldCache {
    grid: TorusGrid,
    nodes: Vec<NodeCache>,
}

fn build_cache(g: &RealSymField, xi: &MatrixField) -> Result<FieldCache> {
    let grid = g.grid;
    let nodes: Vec<Option<NodeCache>> = (0..grid.nodes())
        .into_par_iter()
        .map(|idx| {
            build_node_cache(
                g.a11[idx],
                g.a12[idx],
                g.a22[idx],
                xi.m11[idx],
                xi.m12[idx],
                xi.m22[idx],
            )
        })
        .collect();
    if nodes.iter().any(|n| n.is_none()) {
        let rep = spec_rad_max_with_hessian(g, xi);
        return Err(RealMmError::SpectralRadiusExceeded(rep.spec_rad_max.max(1.0)));
    }
    Ok(FieldCache { grid, nodes: nodes.into_iter().map(|n| n.unwrap()).collect() })
}

/// Store the symmetric part of a per-node M2 into a MatrixField slot.
fn store_sym(field: &mut MatrixField, idx: usize, m: &M2) {
    field.m11[idx] = m[0];
    field.m12[idx] = 0.5 * (m[1] + m[2]);
    field.m22[idx] = m[3];
}

// ---------------------------------------------------------------------------
// Public evaluation operations
// ---------------------------------------------------------------------------

/// Residual of the real moment map,
/// `Re[ sum d_a d_b ((1 - xi G xibar G)^{1/2} G^{-1})^{ab} ] + C`, together
/// with the sup-norm of the (analytically vanishing) imaginary part.
pub fn residual_real_with_diagnostic(
    u: &SymplecticPotential,
    xi: &MatrixField,
    c_const: f64,
) -> Result<(ScalarField, f64)> {
    let g = hessian(u)?;
    let cache = build_cache(&g, xi)?;
    let mut v = MatrixField::zeros(cache.grid);
    for idx in 0..cache.grid.nodes() {
        store_sym(&mut v, idx, &cache.nodes[idx].v_res);
    }
    let dd = double_divergence_opt(&v, false);
    let imag = dd.imag_sup();
    let mut out = dd.real_part();
    for val in out.values.iter_mut() {
        *val += c_const;
    }
    Ok((out, imag))
}

/// Residual of the real moment map; errors if the imaginary leak diagnostic
/// exceeds 1e-6.
pub fn residual_real(
    u: &SymplecticPotential,
    xi: &MatrixField,
    c_const: f64,
) -> Result<ScalarField> {
    let (out, imag) = residual_real_with_diagnostic(u, xi, c_const)?;
    if imag > 1e-6 {
        return Err(RealMmError::ImaginaryLeak(imag));
    }
    Ok(out)
}

/// HK-energy triple `(F, H, F + H)` with `F = -1/2 ∫ log det G` and
/// `H = 1/2 ∫ rho(xi G xibar G)`.
pub fn hk_energy(u: &SymplecticPotential, xi: &MatrixField) -> Result<(f64, f64, f64)> {
    let g = hessian(u)?;
    let n = g.grid.nodes();
    let mut logdet_sum = 0.0;
    let mut rho_sum = 0.0;
    for idx in 0..n {
        let det = g.a11[idx] * g.a22[idx] - g.a12[idx] * g.a12[idx];
        logdet_sum += det.ln();
        let (lo, hi) = delta2(
            g.a11[idx],
            g.a12[idx],
            g.a22[idx],
            xi.m11[idx],
            xi.m12[idx],
            xi.m22[idx],
        );
        if hi >= 1.0 {
            return Err(RealMmError::SpectralRadiusExceeded(hi));
        }
        rho_sum += bg_scalar(lo) + bg_scalar(hi);
    }
    let f = -0.5 * logdet_sum / n as f64;
    let h = 0.5 * rho_sum / n as f64;
    Ok((f, h, f + h))
}

/// L2-gradient of the HK-energy with respect to the potential, projected to
/// zero mean. Satisfies `grad = -1/2 residual_real(u, xi, 0)` identically.
pub fn hk_gradient(u: &SymplecticPotential, xi: &MatrixField) -> Result<ScalarField> {
    let g = hessian(u)?;
    let cache = build_cache(&g, xi)?;
    Ok(gradient_t(&cache, 1.0, false))
}

fn gradient_t(cache: &FieldCache, t: f64, dealias: bool) -> ScalarField {
    let mut m = MatrixField::zeros(cache.grid);
    for idx in 0..cache.grid.nodes() {
        let nc = &cache.nodes[idx];
        let gi = m2_from_real_sym(nc.gi[0], nc.gi[1], nc.gi[2]);
        let combo = m2_add(&m2_scale(&gi, -0.5), &m2_scale(&nc.phi_h, t));
        store_sym(&mut m, idx, &combo);
    }
    let mut out = double_divergence_opt(&m, dealias).real_part();
    out.project_zero_mean();
    out
}

/// Analytic Hessian action of the HK-energy on a zero-mean variation `psi`.
pub fn hk_hessian_apply(
    u: &SymplecticPotential,
    xi: &MatrixField,
    psi: &ScalarField,
) -> Result<ScalarField> {
    let g = hessian(u)?;
    let cache = build_cache(&g, xi)?;
    Ok(hessian_apply_t(&cache, psi, 1.0, false))
}

fn hessian_apply_t(cache: &FieldCache, psi: &ScalarField, t: f64, dealias: bool) -> ScalarField {
    let d2psi = hessian_of_field(psi);
    let grid = cache.grid;
    let mut m = MatrixField::zeros(grid);
    let entries: Vec<M2> = (0..grid.nodes())
        .into_par_iter()
        .map(|idx| {
            let nc = &cache.nodes[idx];
            let gd = m2_from_real_sym(d2psi.a11[idx], d2psi.a12[idx], d2psi.a22[idx]);
            // d(G^{-1}) = -G^{-1} Gdot G^{-1}
            let gim = m2_from_real_sym(nc.gi[0], nc.gi[1], nc.gi[2]);
            let gi_gd_gi = m2_mul(&m2_mul(&gim, &gd), &gim);
            if t == 0.0 {
                return m2_scale(&gi_gd_gi, 0.5);
            }
            // Mdot = xi Gdot xibar G + xi G xibar Gdot
            let xi_m = m2_from_sym(nc.xi[0], nc.xi[1], nc.xi[2]);
            let a1 = m2_mul(&xi_m, &gd);
            let mdot = m2_add(&m2_mul(&a1, &nc.xibg), &m2_mul(&nc.xig, &m2_conj(&a1)));
            // Sdot via the divided-difference kernel in the Q basis.
            let y = m2_mul(&m2_mul(&nc.qinv, &mdot), &nc.q);
            let z = [
                -y[0] / (2.0 * nc.s[0]),
                -y[1] / (nc.s[0] + nc.s[1]),
                -y[2] / (nc.s[0] + nc.s[1]),
                -y[3] / (2.0 * nc.s[1]),
            ];
            let sdot = m2_mul(&m2_mul(&nc.q, &z), &nc.qinv);
            // d(alpha_check) = -2 acheck Sdot acheck
            let dach = m2_scale(&m2_mul(&m2_mul(&nc.acheck, &sdot), &nc.acheck), -2.0);
            // d(Phi_H) = dach (xi G xibar) + acheck xi Gdot xibar
            let dphi = m2_add(
                &m2_mul(&dach, &nc.xigxib),
                &m2_mul(&m2_mul(&nc.acheck_xi, &gd), &nc.xibar),
            );
            m2_add(&m2_scale(&gi_gd_gi, 0.5), &m2_scale(&dphi, t))
        })
        .collect();
    for (idx, e) in entries.iter().enumerate() {
        store_sym(&mut m, idx, e);
    }
    let mut out = double_divergence_opt(&m, dealias).real_part();
    out.project_zero_mean();
    out
}

// ---------------------------------------------------------------------------
// Continuity solver
// ---------------------------------------------------------------------------

/// Solver options (defaults in parentheses).
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveOptions {
    /// Grid nodes per axis (64).
    pub grid_n: usize,
    /// Initial number of uniform continuity steps from t = 0 to 1 (4).
    pub continuity_steps: usize,
    /// Convergence tolerance on the residual sup-norm (1e-9).
    pub newton_tol: f64,
    /// Maximum Newton iterations per continuity step (50).
    pub max_newton: usize,
    /// Admissibility safeguard: iterates keep the spectral radius
    /// at or below `1 - margin` (0.01).
    pub safeguard_margin: f64,
    /// Backtracking factor of the line search (0.5).
    pub backtrack: f64,
    /// Relative tolerance of the preconditioned CG solve (1e-10).
    pub krylov_tol: f64,
    /// 2/3-rule dealiasing of nonlinear fluxes inside the solver (true).
    pub dealias: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            grid_n: 64,
            continuity_steps: 4,
            newton_tol: 1e-9,
            max_newton: 50,
            safeguard_margin: 0.01,
            backtrack: 0.5,
            krylov_tol: 1e-10,
            dealias: true,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.continuity_steps == 0
            || self.newton_tol <= 0.0
            || self.max_newton == 0
            || self.backtrack <= 0.0
            || self.backtrack >= 1.0
            || self.krylov_tol <= 0.0
        {
            return Err(RealMmError::BadOptions("all options must be positive".into()));
        }
        if !(self.safeguard_margin > 0.0 && self.safeguard_margin < 0.5) {
            return Err(RealMmError::BadOptions("safeguard margin must lie in (0, 0.5)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct PathStep {
    pub t: f64,
    pub iterations: usize,
    pub residual_sup: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LogRecord {
    pub t: f64,
    pub iter: usize,
    pub grad_norm: f64,
    pub energy: f64,
    pub specrad: f64,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub u: SymplecticPotential,
    pub residual_sup: f64,
    /// Energy triple (F, H, F + H) at the solution.
    pub energy: (f64, f64, f64),
    pub path: Vec<PathStep>,
    pub log: Vec<LogRecord>,
    pub spec_rad_final: f64,
    pub warnings: Vec<String>,
}

/// Admissible energy evaluation: `None` if the trial potential leaves the
/// safeguarded set (convexity of G; spectral radius <= 1 - margin whenever
/// the Higgs term is active).
fn try_energy(
    u: &SymplecticPotential,
    xi: &MatrixField,
    t: f64,
    margin: f64,
) -> Option<(f64, f64, RealSymField)> {
    let g = hessian_unchecked(u);
    let n = g.grid.nodes();
    let mut logdet_sum = 0.0;
    let mut rho_sum = 0.0;
    let mut rad: f64 = 0.0;
    for idx in 0..n {
        let det = g.a11[idx] * g.a22[idx] - g.a12[idx] * g.a12[idx];
        if !(g.a11[idx] > 0.0 && det > 0.0) {
            return None;
        }
        logdet_sum += det.ln();
        let (lo, hi) = delta2(
            g.a11[idx],
            g.a12[idx],
            g.a22[idx],
            xi.m11[idx],
            xi.m12[idx],
            xi.m22[idx],
        );
        rad = rad.max(hi);
        if t != 0.0 {
            if hi > 1.0 - margin {
                return None;
            }
            rho_sum += bg_scalar(lo) + bg_scalar(hi);
        }
    }
    let energy = -0.5 * logdet_sum / n as f64 + t * 0.5 * rho_sum / n as f64;
    Some((energy, rad, g))
}

/// Exact inverse of the flat-background Hessian `1/2 Delta^2` on nonzero
/// modes; the zero mode is annihilated.
fn precondition(r: &ScalarField) -> ScalarField {
    let grid = r.grid;
    let n = grid.n_axis();
    let mut buf = r.to_complex().values;
    fft2_forward(&mut buf, n);
    for i in 0..n {
        let k1 = grid.wavenumber(i) as f64;
        for j in 0..n {
            let k2 = grid.wavenumber(j) as f64;
            let k2sum = k1 * k1 + k2 * k2;
            let idx = i * n + j;
            if k2sum == 0.0 {
                buf[idx] = C64::new(0.0, 0.0);
            } else {
                buf[idx] *= 2.0 / (TAU.powi(4) * k2sum * k2sum);
            }
        }
    }
    fft2_inverse(&mut buf, n);
    ScalarField { grid, values: buf.iter().map(|z| z.re).collect() }
}

/// Preconditioned conjugate gradients for the Hessian operator (positive
/// definite on the zero-mean subspace).
fn pcg(
    apply: impl Fn(&ScalarField) -> ScalarField,
    b: &ScalarField,
    rel_tol: f64,
    max_iter: usize,
) -> ScalarField {
    let mut x = ScalarField::zeros(b.grid);
    let mut r = b.clone();
    let b_norm = b.l2_norm();
    if b_norm == 0.0 {
        return x;
    }
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = r.inner(&z);
    for _ in 0..max_iter {
        let ap = apply(&p);
        let pap = p.inner(&ap);
        if !(pap > 0.0) || !pap.is_finite() {
            break;
        }
        let alpha = rz / pap;
        x.axpy(alpha, &p);
        r.axpy(-alpha, &ap);
        if r.l2_norm() <= rel_tol * b_norm {
            break;
        }
        z = precondition(&r);
        let rz_new = r.inner(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        let mut p_new = z.clone();
        p_new.axpy(beta, &p);
        p = p_new;
    }
    x
}

struct NewtonOutcome {
    iterations: usize,
    residual_sup: f64,
}

/// Newton-Krylov minimization of `F̂_t` at fixed `t`, with a backtracking
/// line search that keeps every trial point safeguarded. Mutates `u` in
/// place, appends to the log.
fn newton_solve(
    u: &mut SymplecticPotential,
    xi: &MatrixField,
    t: f64,
    opts: &SolveOptions,
    log: &mut Vec<LogRecord>,
) -> Result<NewtonOutcome> {
    let margin = opts.safeguard_margin;
    let (mut energy, mut rad, mut g_field) = match try_energy(u, xi, t, margin) {
        Some(v) => v,
        None => return Err(RealMmError::SafeguardViolated { t_reached: t }),
    };
    // At t = 0 the energy is the pure K-energy: the spectral cache is never
    // consulted, so build it against a vanishing Higgs field (which also
    // keeps the t = 0 stage well-defined for inadmissible xi).
    let zero_xi;
    let xi_cache: &MatrixField = if t == 0.0 {
        zero_xi = MatrixField::zeros(u.grid());
        &zero_xi
    } else {
        xi
    };

    for iter in 0..opts.max_newton {
        let cache = build_cache(&g_field, xi_cache)?;
        let grad = gradient_t(&cache, t, opts.dealias);
        let grad_norm = grad.sup_norm();
        log.push(LogRecord { t, iter, grad_norm, energy, specrad: rad });
        if 2.0 * grad_norm <= opts.newton_tol {
            return Ok(NewtonOutcome { iterations: iter, residual_sup: 2.0 * grad_norm });
        }

        let rhs = grad.scaled(-1.0);
        let step =
            pcg(|p| hessian_apply_t(&cache, p, t, opts.dealias), &rhs, opts.krylov_tol, 400);
        let descent = grad.inner(&step);
        // The Hessian is positive definite on zero-mean fields, so the CG
        // output is a descent direction; fall back to the preconditioned
        // gradient if roundoff says otherwise.
        let step = if descent < 0.0 { step } else { precondition(&rhs) };
        let descent = grad.inner(&step).min(0.0);

        let mut s = 1.0;
        let mut accepted = false;
        while s >= 1e-14 {
            let mut phi_trial = u.phi.clone();
            phi_trial.axpy(s, &step);
            let trial = SymplecticPotential::new(phi_trial);
            if let Some((e_trial, rad_trial, g_trial)) = try_energy(&trial, xi, t, margin) {
                // Armijo decrease with a roundoff allowance: near the
                // minimizer the predicted decrease drops below the floating
                // point resolution of the energy itself.
                let roundoff = 1e-14 * (1.0 + energy.abs());
                if e_trial <= energy + 1e-4 * s * descent + roundoff {
                    *u = trial;
                    energy = e_trial;
                    rad = rad_trial;
                    g_field = g_trial;
                    accepted = true;
                    break;
                }
            }
            s *= opts.backtrack;
        }
        if !accepted {
            return Err(RealMmError::NoConvergence { t, grad_norm });
        }
    }
    let cache = build_cache(&g_field, xi_cache)?;
    let grad_norm = gradient_t(&cache, t, opts.dealias).sup_norm();
    if 2.0 * grad_norm <= opts.newton_tol {
        return Ok(NewtonOutcome { iterations: opts.max_newton, residual_sup: 2.0 * grad_norm });
    }
    Err(RealMmError::NoConvergence { t, grad_norm })
}

/// Solve the real moment map equation for a fixed Higgs field by the
/// continuity method in `t` on `F̂_t = F + t H`, starting from `start` (the
/// flat potential if absent). `c_const` must vanish on the torus: the
/// residual has zero mean identically.
pub fn solve_continuity(
    xi: &MatrixField,
    c_const: f64,
    opts: &SolveOptions,
    start: Option<&SymplecticPotential>,
) -> Result<SolveReport> {
    opts.validate()?;
    if c_const != 0.0 {
        return Err(RealMmError::BadOptions(
            "the periodic real moment map requires C = 0".into(),
        ));
    }
    let grid = xi.grid;
    let mut warnings = Vec::new();
    let xi_residual = crate::complexmm::residual_complex(xi).sup_norm();
    if xi_residual > 1e-8 {
        warnings.push(format!(
            "Higgs field does not solve the complex moment map: residual sup {xi_residual:.3e}"
        ));
    }

    let mut u = match start {
        Some(s) => {
            if s.grid() != grid {
                return Err(RealMmError::BadOptions("start potential grid mismatch".into()));
            }
            s.clone()
        }
        None => SymplecticPotential::flat(grid),
    };

    let mut log = Vec::new();
    let mut path = Vec::new();

    if xi.sup_norm() == 0.0 {
        // The Higgs term vanishes identically: F̂_t is t-independent.
        let out = newton_solve(&mut u, xi, 1.0, opts, &mut log)?;
        path.push(PathStep { t: 1.0, iterations: out.iterations, residual_sup: out.residual_sup });
    } else {
        let out = newton_solve(&mut u, xi, 0.0, opts, &mut log)?;
        path.push(PathStep { t: 0.0, iterations: out.iterations, residual_sup: out.residual_sup });

        let mut t = 0.0_f64;
        let mut dt = 1.0 / opts.continuity_steps as f64;
        let dt_floor = 1.0 / 64.0;
        while t < 1.0 {
            let target = (t + dt).min(1.0);
            let mut u_try = u.clone();
            match newton_solve(&mut u_try, xi, target, opts, &mut log) {
                Ok(out) => {
                    u = u_try;
                    t = target;
                    path.push(PathStep {
                        t,
                        iterations: out.iterations,
                        residual_sup: out.residual_sup,
                    });
                }
                Err(err) => {
                    dt *= 0.5;
                    if dt < dt_floor {
                        return Err(match err {
                            RealMmError::NoConvergence { t: te, grad_norm } => {
                                RealMmError::NoConvergence { t: te, grad_norm }
                            }
                            _ => RealMmError::SafeguardViolated { t_reached: t },
                        });
                    }
                }
            }
        }
    }

    let (res, _) = residual_real_with_diagnostic(&u, xi, 0.0)?;
    let residual_sup = res.sup_norm();
    let energy = hk_energy(&u, xi)?;
    let g = hessian(&u)?;
    let spec_rad_final = spec_rad_max_with_hessian(&g, xi).spec_rad_max;
    Ok(SolveReport { u, residual_sup, energy, path, log, spec_rad_final, warnings })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::SymMatC;
    use crate::torusfield::ScalarField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn grid() -> TorusGrid {
        TorusGrid::new(32).unwrap()
    }

    fn random_phi(rng: &mut ChaCha8Rng, g: TorusGrid, amp: f64) -> ScalarField {
        let mut f = ScalarField::zeros(g);
        for _ in 0..8 {
            let k1 = rng.gen_range(-4i64..=4) as f64;
            let k2 = rng.gen_range(-4i64..=4) as f64;
            let a = rng.gen_range(-amp..amp);
            let ph = rng.gen_range(0.0..TAU);
            for idx in 0..g.nodes() {
                let y = g.y(idx);
                f.values[idx] += a * (TAU * (k1 * y[0] + k2 * y[1]) + ph).cos();
            }
        }
        f
    }

    /// Random potential with `sup |D^2 phi| <= hess_bound` (so G stays
    /// uniformly positive definite).
    fn random_potential(rng: &mut ChaCha8Rng, g: TorusGrid, hess_bound: f64) -> SymplecticPotential {
        let mut phi = random_phi(rng, g, 1.0);
        let d2 = hessian_of_field(&phi);
        let mut sup = 0.0_f64;
        for idx in 0..g.nodes() {
            sup = sup.max(d2.a11[idx].abs()).max(d2.a12[idx].abs()).max(d2.a22[idx].abs());
        }
        if sup > 0.0 {
            phi = phi.scaled(hess_bound / sup);
        }
        SymplecticPotential::new(phi)
    }

    fn random_admissible_pair(
        rng: &mut ChaCha8Rng,
        g: TorusGrid,
        target: f64,
    ) -> (SymplecticPotential, MatrixField) {
        let u = random_potential(rng, g, 0.3);
        let base = SymMatC::sym2(
            c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)),
            c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)),
            c(rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)),
        );
        let mut xi = MatrixField::constant(g, &base);
        let wiggle = random_phi(rng, g, 0.05);
        for idx in 0..g.nodes() {
            xi.m12[idx] += c(wiggle.values[idx], -0.5 * wiggle.values[idx]);
        }
        let rep = crate::torusfield::spec_rad_max(&u, &xi).unwrap();
        if rep.spec_rad_max > 0.0 {
            let f = (target / rep.spec_rad_max).sqrt() * rng.gen_range(0.5..1.0);
            xi = xi.scaled(c(f, 0.0));
        }
        (u, xi)
    }

    #[test]
    fn residual_trivial() {
        let g = grid();
        let u0 = SymplecticPotential::flat(g);
        let zero = MatrixField::zeros(g);
        let r = residual_real(&u0, &zero, 0.0).unwrap();
        assert!(r.sup_norm() < 1e-12);

        // Constant admissible xi: all derivatives of constants vanish.
        let xi = MatrixField::constant(g, &SymMatC::sym2(c(0.3, 0.1), c(0.1, -0.2), c(0.0, 0.25)));
        let r = residual_real(&u0, &xi, 0.0).unwrap();
        assert!(r.sup_norm() < 1e-12);
    }

    #[test]
    fn residual_u1_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(101);
        let g = grid();
        let (u, xi) = random_admissible_pair(&mut rng, g, 0.5);
        let r1 = residual_real(&u, &xi, 0.0).unwrap();
        let r2 = residual_real(&u, &xi.scaled(C64::from_polar(1.0, 1.234)), 0.0).unwrap();
        let mut err = 0.0_f64;
        for idx in 0..g.nodes() {
            err = err.max((r1.values[idx] - r2.values[idx]).abs());
        }
        assert!(err <= 1e-10 * r1.sup_norm().max(1.0), "U(1) defect {err}");
    }

    #[test]
    fn energy_values() {
        let g = grid();
        let u0 = SymplecticPotential::flat(g);
        let zero = MatrixField::zeros(g);
        assert_eq!(hk_energy(&u0, &zero).unwrap(), (0.0, 0.0, 0.0));

        // Constant xi: H = 1/2 rho(xi xibar) exactly.
        let xi_c = SymMatC::sym2(c(0.3, 0.0), c(0.1, 0.2), c(-0.2, 0.1));
        let xi = MatrixField::constant(g, &xi_c);
        let (f, h, _) = hk_energy(&u0, &xi).unwrap();
        assert_eq!(f, 0.0);
        let s = crate::matfun::spectrum(&crate::matfun::PosDefR::identity(2), &xi_c).unwrap();
        let rho = crate::matfun::bg_rho(&s).unwrap();
        assert!((h - 0.5 * rho).abs() < 1e-13);
    }

    /// Adaptive Simpson quadrature, the independent oracle for the 1D energy
    /// integral.
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: usize) -> f64 {
        let m = 0.5 * (a + b);
        let s = |l: f64, r: f64| (r - l) / 6.0 * (f(l) + 4.0 * f(0.5 * (l + r)) + f(r));
        let whole = s(a, b);
        let left = s(a, m);
        let right = s(m, b);
        if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            simpson(f, a, m, tol / 2.0, depth - 1) + simpson(f, m, b, tol / 2.0, depth - 1)
        }
    }

    #[test]
    fn energy_against_quadrature_oracle() {
        let g = TorusGrid::new(64).unwrap();
        let eps = 0.5 / (TAU * TAU);
        let u = SymplecticPotential::new(ScalarField::from_fn(g, |y| eps * (TAU * y[0]).cos()));
        let (f, _, _) = hk_energy(&u, &MatrixField::zeros(g)).unwrap();
        let oracle = -0.5
            * simpson(
                &|s: f64| (1.0 - eps * TAU * TAU * (TAU * s).cos()).ln(),
                0.0,
                1.0,
                1e-13,
                30,
            );
        assert!((f - oracle).abs() <= 1e-10, "F {f} vs quadrature {oracle}");
    }

    #[test]
    fn gradient_residual_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(103);
        let g = grid();
        for _ in 0..10 {
            let (u, xi) = random_admissible_pair(&mut rng, g, 0.6);
            let grad = hk_gradient(&u, &xi).unwrap();
            let res = residual_real(&u, &xi, 0.0).unwrap();
            let mut err = 0.0_f64;
            for idx in 0..g.nodes() {
                err = err.max((grad.values[idx] + 0.5 * res.values[idx]).abs());
            }
            assert!(err <= 1e-9, "identity defect {err}");
            assert!(grad.mean().abs() < 1e-12);
        }
    }

    #[test]
    fn gradient_matches_energy_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(107);
        let g = grid();
        let (u, xi) = random_admissible_pair(&mut rng, g, 0.5);
        let grad = hk_gradient(&u, &xi).unwrap();
        let h = 1e-5;
        for _ in 0..10 {
            let psi = random_potential(&mut rng, g, 0.5).phi;
            let mut up = u.phi.clone();
            up.axpy(h, &psi);
            let mut um = u.phi.clone();
            um.axpy(-h, &psi);
            let ep = hk_energy(&SymplecticPotential::new(up), &xi).unwrap().2;
            let em = hk_energy(&SymplecticPotential::new(um), &xi).unwrap().2;
            let fd = (ep - em) / (2.0 * h);
            let pairing = grad.inner(&psi);
            let denom = pairing.abs().max(fd.abs()).max(1e-10);
            assert!((pairing - fd).abs() / denom <= 1e-6, "pairing {pairing} vs fd {fd}");
        }
    }

    #[test]
    fn hessian_bilaplacian_case() {
        let g = grid();
        let u0 = SymplecticPotential::flat(g);
        let zero = MatrixField::zeros(g);
        let psi = ScalarField::from_fn(g, |y| (TAU * y[0]).cos());
        let hpsi = hk_hessian_apply(&u0, &zero, &psi).unwrap();
        // Hess psi = 1/2 Delta^2 psi -> <H psi, psi> = (2 pi)^4 / 4.
        let pairing = hpsi.inner(&psi);
        let expect = 0.25 * TAU.powi(4);
        assert!((pairing - expect).abs() <= 1e-10 * expect, "pairing {pairing} vs {expect}");
    }

    #[test]
    fn hessian_symmetry_and_fd() {
        let mut rng = ChaCha8Rng::seed_from_u64(109);
        let g = grid();
        let (u, xi) = random_admissible_pair(&mut rng, g, 0.5);
        let psi1 = random_potential(&mut rng, g, 0.5).phi;
        let psi2 = random_potential(&mut rng, g, 0.5).phi;

        let h1 = hk_hessian_apply(&u, &xi, &psi1).unwrap();
        let h2 = hk_hessian_apply(&u, &xi, &psi2).unwrap();
        let a = h1.inner(&psi2);
        let b = h2.inner(&psi1);
        assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0), "symmetry defect {} vs {}", a, b);

        // Directional finite differences of the gradient.
        let h = 1e-5;
        let mut up = u.phi.clone();
        up.axpy(h, &psi1);
        let mut um = u.phi.clone();
        um.axpy(-h, &psi1);
        let gp = hk_gradient(&SymplecticPotential::new(up), &xi).unwrap();
        let gm = hk_gradient(&SymplecticPotential::new(um), &xi).unwrap();
        let mut err = 0.0_f64;
        let mut scale = 0.0_f64;
        for idx in 0..g.nodes() {
            let fd = (gp.values[idx] - gm.values[idx]) / (2.0 * h);
            err = err.max((h1.values[idx] - fd).abs());
            scale = scale.max(fd.abs());
        }
        assert!(err <= 1e-5 * scale.max(1.0), "fd defect {err} at scale {scale}");

        // <Hess psi, psi> equals 1/2 of the integrated pointwise quadratic
        // form.
        let gh = hessian(&u).unwrap();
        let d2psi = hessian_of_field(&psi1);
        let mut acc = 0.0;
        for idx in 0..g.nodes() {
            let gm = crate::torusfield::node_metric(&gh, idx).unwrap();
            acc += crate::matfun::hessian_quadratic_form(&gm, &d2psi.at(idx), &xi.at(idx)).unwrap();
        }
        let integral = 0.5 * acc / g.nodes() as f64;
        let pairing = h1.inner(&psi1);
        assert!(
            (pairing - integral).abs() <= 1e-8 * integral.abs().max(1.0),
            "pairing {pairing} vs quadratic form integral {integral}"
        );
        assert!(pairing >= 0.0);
    }

    #[test]
    fn solve_flat() {
        let g = grid();
        let report = solve_continuity(
            &MatrixField::zeros(g),
            0.0,
            &SolveOptions { grid_n: 32, ..Default::default() },
            None,
        )
        .unwrap();
        assert!(report.u.phi.sup_norm() <= 1e-10);
        assert!(report.residual_sup <= 1e-10);
        assert_eq!(report.path.len(), 1);
        assert_eq!(report.path[0].iterations, 0);
    }

    #[test]
    fn solve_constant_higgs_recovers_flat() {
        let mut rng = ChaCha8Rng::seed_from_u64(113);
        let g = grid();
        // Semidefinite real and imaginary parts: uniqueness holds.
        let xi = MatrixField::constant(g, &SymMatC::sym2(c(0.25, 0.1), c(0.1, 0.05), c(0.3, 0.2)));
        let start = random_potential(&mut rng, g, 0.05);
        let report = solve_continuity(
            &xi,
            0.0,
            &SolveOptions { grid_n: 32, ..Default::default() },
            Some(&start),
        )
        .unwrap();
        let gh = hessian(&report.u).unwrap();
        let mut dev = 0.0_f64;
        for idx in 0..g.nodes() {
            dev = dev
                .max((gh.a11[idx] - 1.0).abs())
                .max(gh.a12[idx].abs())
                .max((gh.a22[idx] - 1.0).abs());
        }
        assert!(dev <= 1e-7, "hessian deviation from identity {dev}");
        // Monotone energy along each Newton run.
        for w in report.log.windows(2) {
            if w[0].t == w[1].t {
                assert!(w[1].energy <= w[0].energy + 1e-12);
            }
        }
    }

    #[test]
    fn solve_rejects_inadmissible_higgs() {
        let g = grid();
        let xi = MatrixField::constant(g, &SymMatC::diag(&[c(1.2, 0.0), c(1.1, 0.0)]));
        match solve_continuity(&xi, 0.0, &SolveOptions { grid_n: 32, ..Default::default() }, None) {
            Err(RealMmError::SafeguardViolated { t_reached }) => {
                assert_eq!(t_reached, 0.0);
            }
            other => panic!("expected SafeguardViolated, got {other:?}"),
        }
    }
}
