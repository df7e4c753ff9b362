//! Pointwise complex-symmetric matrix calculus for the HcscK system.
//!
//! Everything revolves around the endomorphism `M = xi G xibar G` for a real
//! positive definite `G` and a complex symmetric `xi`. All spectral functions
//! of `M` are computed through the Hermitian similarity
//!
//! ```text
//!   W M W^{-1} = N N^H,   N = W xi W,   W = G^{1/2},
//! ```
//!
//! so `f(M) = Q f(Delta) Q^{-1}` with `Q = W^{-1} U` for the unitary `U`
//! diagonalizing the positive semidefinite `N N^H`. This keeps every
//! eigenproblem Hermitian; `M` itself is never fed to a non-normal solver.

use crate::linalg::{herm_eigen, inv_spd, real_sym_eigen, sqrt_spd, CMat, RMat, C64};
use thiserror::Error;

/// Gap below which second-variation formulas refuse to evaluate: the closed
/// forms divide by eigenvalue differences.
pub const DEGENERATE_GAP: f64 = 1e-8;

/// Eigenvalues of `N N^H` in `[-NEGATIVE_CLAMP, 0)` are clamped to zero;
/// anything more negative is reported as an error.
pub const NEGATIVE_CLAMP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum MatFunError {
    #[error("matrix is not positive definite")]
    NonPositiveDefinite,
    #[error("eigenvalue {0} of the Hermitian similarity is negative beyond tolerance")]
    NegativeEigenvalue(f64),
    #[error("spectral radius {0} >= 1: pair is outside the admissible set")]
    SpectralRadiusExceeded(f64),
    #[error("eigenvalue gap {0} below degeneracy threshold")]
    DegenerateSpectrum(f64),
}

pub type Result<T> = std::result::Result<T, MatFunError>;

/// Complex symmetric matrix (the Higgs tensor and its relatives).
#[derive(Clone, Debug, PartialEq)]
pub struct SymMatC(CMat);

impl SymMatC {
    /// Build from the upper triangle, row by row: for n = 2 the slice is
    /// `[m11, m12, m22]`. Symmetry holds exactly by construction.
    pub fn from_upper(n: usize, upper: &[C64]) -> Self {
        assert_eq!(upper.len(), n * (n + 1) / 2);
        let mut m = CMat::zeros(n);
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                m[(i, j)] = upper[k];
                m[(j, i)] = upper[k];
                k += 1;
            }
        }
        SymMatC(m)
    }

    pub fn zero(n: usize) -> Self {
        SymMatC(CMat::zeros(n))
    }

    /// 2x2 convenience constructor.
    pub fn sym2(m11: C64, m12: C64, m22: C64) -> Self {
        SymMatC::from_upper(2, &[m11, m12, m22])
    }

    pub fn diag(entries: &[C64]) -> Self {
        SymMatC(CMat::diag(entries))
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn mat(&self) -> &CMat {
        &self.0
    }

    pub fn scale(&self, s: C64) -> SymMatC {
        SymMatC(self.0.scale(s))
    }

    pub fn det2(&self) -> C64 {
        assert_eq!(self.n(), 2);
        self.0[(0, 0)] * self.0[(1, 1)] - self.0[(0, 1)] * self.0[(0, 1)]
    }
}

impl std::ops::Index<(usize, usize)> for SymMatC {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

/// Real symmetric positive definite matrix; definiteness is verified by a
/// Cholesky factorization at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct PosDefR(RMat);

impl PosDefR {
    pub fn new(m: RMat) -> Result<Self> {
        // Symmetrize first so tiny asymmetries cannot poison the factorization.
        let n = m.n();
        let mut s = m;
        for i in 0..n {
            for j in 0..i {
                let avg = 0.5 * (s[(i, j)] + s[(j, i)]);
                s[(i, j)] = avg;
                s[(j, i)] = avg;
            }
        }
        if s.cholesky().is_none() {
            return Err(MatFunError::NonPositiveDefinite);
        }
        Ok(PosDefR(s))
    }

    pub fn identity(n: usize) -> Self {
        PosDefR(RMat::identity(n))
    }

    pub fn diag(entries: &[f64]) -> Result<Self> {
        PosDefR::new(RMat::diag(entries))
    }

    pub fn sym2(g11: f64, g12: f64, g22: f64) -> Result<Self> {
        PosDefR::new(RMat::from_rows(2, &[g11, g12, g12, g22]))
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn mat(&self) -> &RMat {
        &self.0
    }

    pub fn sqrt(&self) -> RMat {
        sqrt_spd(&self.0)
    }

    pub fn inverse(&self) -> RMat {
        inv_spd(&self.0)
    }
}

/// Spectral data of `M = xi G xibar G`: eigenvalues `delta` sorted ascending,
/// the similarity `Q` with `M = Q diag(delta) Q^{-1}`, and the whitener
/// `W = G^{1/2}`.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub delta: Vec<f64>,
    pub transform: CMat,
    transform_inv: CMat,
    pub whitener: RMat,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.delta.len()
    }

    pub fn transform_inv(&self) -> &CMat {
        &self.transform_inv
    }

    /// Largest eigenvalue.
    pub fn spectral_radius(&self) -> f64 {
        *self.delta.last().unwrap()
    }

    pub fn min_gap(&self) -> f64 {
        let n = self.delta.len();
        let mut gap = f64::INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                gap = gap.min((self.delta[i] - self.delta[j]).abs());
            }
        }
        gap
    }

    fn require_admissible(&self) -> Result<()> {
        let r = self.spectral_radius();
        if r >= 1.0 {
            return Err(MatFunError::SpectralRadiusExceeded(r));
        }
        Ok(())
    }

    fn require_distinct(&self) -> Result<()> {
        let gap = self.min_gap();
        if gap < DEGENERATE_GAP {
            return Err(MatFunError::DegenerateSpectrum(gap));
        }
        Ok(())
    }

    /// `Q f(Delta) Q^{-1}` for a scalar function of the eigenvalues.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> CMat {
        let fd: Vec<f64> = self.delta.iter().map(|&d| f(d)).collect();
        self.transform.matmul(&CMat::diag_re(&fd)).matmul(&self.transform_inv)
    }

    /// Spectral projector onto the i-th eigenvalue.
    pub fn projector(&self, i: usize) -> CMat {
        let n = self.n();
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        self.transform.matmul(&CMat::diag_re(&e)).matmul(&self.transform_inv)
    }
}

/// Eigen-data of `M = xi G xibar G` through the Hermitian similarity
/// `N N^H`, `N = G^{1/2} xi G^{1/2}`. Eigenvalues in `[-1e-12, 0)` are
/// clamped to zero; `N N^H` is positive semidefinite analytically.
pub fn spectrum(g: &PosDefR, xi: &SymMatC) -> Result<Spectrum> {
    assert_eq!(g.n(), xi.n());
    let w = g.sqrt();
    let wc = w.to_complex();
    let n_mat = wc.matmul(xi.mat()).matmul(&wc);
    let h = n_mat.matmul(&n_mat.adjoint());
    let (mut delta, u) = herm_eigen(&h);
    for d in delta.iter_mut() {
        if *d < 0.0 {
            if *d < -NEGATIVE_CLAMP {
                return Err(MatFunError::NegativeEigenvalue(*d));
            }
            *d = 0.0;
        }
    }
    let w_inv = inv_spd(&w);
    let transform = w_inv.to_complex().matmul(&u);
    let transform_inv = u.adjoint().matmul(&wc);
    Ok(Spectrum { delta, transform, transform_inv, whitener: w })
}

/// Takagi-Autonne factorization `N = U D U^T` of a complex symmetric matrix,
/// with `U` unitary and `D` real nonnegative, returned ascending.
///
/// Implemented through the real symmetric embedding
/// `B = [[Re N, Im N], [Im N, -Re N]]`: an eigenvector `(x; y)` of `B` with
/// eigenvalue `s >= 0` gives a column `u = x + i y` with `N conj(u) = s u`.
/// Columns from distinct nonnegative eigenvalues are automatically complex
/// orthonormal; only the (near-)null space needs a basis massaged so that
/// `u_i^H u_j = delta_ij`.
pub fn takagi(n_mat: &SymMatC) -> (CMat, Vec<f64>) {
    let n = n_mat.n();
    let m = n_mat.mat();
    let mut b = RMat::zeros(2 * n);
    for i in 0..n {
        for j in 0..n {
            b[(i, j)] = m[(i, j)].re;
            b[(i, j + n)] = m[(i, j)].im;
            b[(i + n, j)] = m[(i, j)].im;
            b[(i + n, j + n)] = -m[(i, j)].re;
        }
    }
    let (vals, vecs) = real_sym_eigen(&b);
    // The spectrum of B is symmetric around zero; keep the n largest values.
    let mut idx: Vec<usize> = (0..2 * n).collect();
    idx.sort_by(|&a, &c| vals[a].partial_cmp(&vals[c]).unwrap());
    let kept: Vec<usize> = idx[n..].to_vec();

    let scale = m.frobenius().max(1.0);
    let zero_tol = 1e-13 * scale;

    let mut u = CMat::zeros(n);
    let mut d = vec![0.0; n];
    let mut small: Vec<usize> = Vec::new();
    for (col, &k) in kept.iter().enumerate() {
        d[col] = vals[k].max(0.0);
        if vals[k].abs() <= zero_tol {
            small.push(col);
            continue;
        }
        for i in 0..n {
            u[(i, col)] = C64::new(vecs[(i, k)], vecs[(i + n, k)]);
        }
    }

    if !small.is_empty() {
        // Near-null directions: the +s and -s eigenspaces are no longer
        // numerically separated, so build complex-orthonormal vectors
        // greedily inside the real null space, removing both w and Jw
        // (J(x;y) = (-y;x)) at each step.
        let dim = 2 * small.len();
        let mut basis: Vec<Vec<f64>> = idx[..2 * n]
            .iter()
            .filter(|&&k| vals[k].abs() <= zero_tol)
            .map(|&k| (0..2 * n).map(|i| vecs[(i, k)]).collect())
            .collect();
        assert!(basis.len() >= dim, "takagi: inconsistent null space");
        let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
        let jmap = |w: &[f64]| -> Vec<f64> {
            let mut out = vec![0.0; 2 * n];
            for i in 0..n {
                out[i] = -w[i + n];
                out[i + n] = w[i];
            }
            out
        };
        for &col in &small {
            // First basis vector with significant norm after projections.
            let mut w = basis.remove(0);
            let mut nrm = dot(&w, &w).sqrt();
            while nrm < 1e-8 && !basis.is_empty() {
                w = basis.remove(0);
                nrm = dot(&w, &w).sqrt();
            }
            for x in w.iter_mut() {
                *x /= nrm;
            }
            let jw = jmap(&w);
            for b in basis.iter_mut() {
                let c1 = dot(b, &w);
                let c2 = dot(b, &jw);
                for i in 0..2 * n {
                    b[i] -= c1 * w[i] + c2 * jw[i];
                }
            }
            for i in 0..n {
                u[(i, col)] = C64::new(w[i], w[i + n]);
            }
        }
    }
    (u, d)
}

/// The Biquard-Gauduchon scalar function
/// `f(x) = 1 - sqrt(1-x) + log((1 + sqrt(1-x)) / 2)` on `[0, 1)`.
pub fn bg_scalar(x: f64) -> f64 {
    let s = (1.0 - x).sqrt();
    1.0 - s + ((1.0 + s) / 2.0).ln()
}

/// First derivative `f'(x) = 1 / (2 (1 + sqrt(1-x)))`.
pub fn bg_scalar_prime(x: f64) -> f64 {
    0.5 / (1.0 + (1.0 - x).sqrt())
}

/// Second derivative `f''(x) = 1 / (4 sqrt(1-x) (1 + sqrt(1-x))^2)`.
pub fn bg_scalar_second(x: f64) -> f64 {
    let s = (1.0 - x).sqrt();
    0.25 / (s * (1.0 + s) * (1.0 + s))
}

/// Biquard-Gauduchon density `rho = sum_i f(delta_i)`.
pub fn bg_rho(s: &Spectrum) -> Result<f64> {
    s.require_admissible()?;
    Ok(s.delta.iter().map(|&d| bg_scalar(d)).sum())
}

/// The transform `alpha_check = 1/2 (1 + (1 - xi G xibar G)^{1/2})^{-1}`,
/// the derivative kernel of `rho`.
pub fn hat_transform(g: &PosDefR, xi: &SymMatC) -> Result<CMat> {
    let s = spectrum(g, xi)?;
    s.require_admissible()?;
    Ok(s.apply(|d| 0.5 / (1.0 + (1.0 - d).sqrt())))
}

/// The unique positive square root `S = (1 - xi G xibar G)^{1/2}`.
pub fn sqrt_one_minus(g: &PosDefR, xi: &SymMatC) -> Result<CMat> {
    let s = spectrum(g, xi)?;
    s.require_admissible()?;
    Ok(s.apply(|d| (1.0 - d).sqrt()))
}

/// Moore-Penrose inverse of `delta_i - M` in the eigenbasis:
/// `Q diag(..., 1/(delta_i - delta_j), 0 at slot i, ...) Q^{-1}`.
/// Requires pairwise distinct eigenvalues.
pub fn shifted_pseudoinverse(s: &Spectrum, i: usize) -> Result<CMat> {
    s.require_distinct()?;
    let di = s.delta[i];
    let entries: Vec<f64> = s
        .delta
        .iter()
        .enumerate()
        .map(|(j, &dj)| if j == i { 0.0 } else { 1.0 / (di - dj) })
        .collect();
    Ok(s.transform.matmul(&CMat::diag_re(&entries)).matmul(s.transform_inv()))
}

fn first_derivative_matrix(g: &PosDefR, gdot: &RMat, xi: &SymMatC) -> CMat {
    // d/dt (xi G_t xibar G_t) along G_t = G + t Gdot, at t = 0.
    let gd = gdot.to_complex();
    let gc = g.mat().to_complex();
    let xig = xi.mat().matmul(&gc);
    let xibg = xi.mat().conj().matmul(&gc);
    let xigd = xi.mat().matmul(&gd);
    let xibgd = xi.mat().conj().matmul(&gd);
    xigd.matmul(&xibg).add(&xig.matmul(&xibgd))
}

/// First and second derivatives of the sorted eigenvalues of
/// `xi G_t xibar G_t` along the linear path `G_t = G + t Gdot`, at `t = 0`.
/// Returns `(delta_dot, delta_ddot)`.
pub fn eig_variations(g: &PosDefR, gdot: &RMat, xi: &SymMatC) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = g.n();
    let xi_norm = xi.mat().frobenius();
    let gd_norm = gdot.frobenius();
    if xi_norm == 0.0 || gd_norm == 0.0 {
        return Ok((vec![0.0; n], vec![0.0; n]));
    }
    let s = spectrum(g, xi)?;
    s.require_distinct()?;

    let m1 = first_derivative_matrix(g, gdot, xi);
    // d^2/dt^2 (xi G_t xibar G_t) = 2 xi Gdot xibar Gdot.
    let gd = gdot.to_complex();
    let m2 = xi.mat().matmul(&gd).matmul(&xi.mat().conj()).matmul(&gd).scale(C64::new(2.0, 0.0));

    let y1 = s.transform_inv().matmul(&m1).matmul(&s.transform);
    let y2 = s.transform_inv().matmul(&m2).matmul(&s.transform);

    let mut dot = vec![0.0; n];
    let mut ddot = vec![0.0; n];
    for i in 0..n {
        dot[i] = y1[(i, i)].re;
        let mut acc = y2[(i, i)].re;
        for j in 0..n {
            if j == i {
                continue;
            }
            acc += 2.0 * (y1[(i, j)] * y1[(j, i)]).re / (s.delta[i] - s.delta[j]);
        }
        ddot[i] = acc;
    }
    Ok((dot, ddot))
}

/// Second derivative of the eigenvalues only.
pub fn eig_second_variation(g: &PosDefR, gdot: &RMat, xi: &SymMatC) -> Result<Vec<f64>> {
    Ok(eig_variations(g, gdot, xi)?.1)
}

/// Pointwise integrand of the second variation of the HK-energy density
/// along `G_t = G + t Gdot`:
///
/// ```text
///   Tr(G^{-1} Gdot G^{-1} Gdot) + Drho . delta_ddot + delta_dot^T D2rho delta_dot
///   = d^2/dt^2 [ -log det G_t + rho(xi G_t xibar G_t) ]  at t = 0.
/// ```
///
/// Nonnegative for admissible inputs; the metric term compensates the
/// possibly negative eigenvalue-curvature term.
pub fn hessian_quadratic_form(g: &PosDefR, gdot: &RMat, xi: &SymMatC) -> Result<f64> {
    let gi = g.inverse();
    let gig = gi.matmul(gdot);
    let metric_term = gig.matmul(&gig).trace();

    if xi.mat().frobenius() == 0.0 || gdot.frobenius() == 0.0 {
        return Ok(metric_term);
    }
    let s = spectrum(g, xi)?;
    s.require_admissible()?;
    let (dot, ddot) = eig_variations(g, gdot, xi)?;
    let mut rho_terms = 0.0;
    for i in 0..s.n() {
        rho_terms += bg_scalar_prime(s.delta[i]) * ddot[i];
        rho_terms += bg_scalar_second(s.delta[i]) * dot[i] * dot[i];
    }
    Ok(metric_term + rho_terms)
}

/// Paired off-diagonal coefficients of the reordered second-variation sum:
/// the symmetric-part coefficient
/// `2 (sqrt(di) sqrt(1-dj) - sqrt(dj) sqrt(1-di)) / (sqrt(di) - sqrt(dj))`
/// (always nonnegative) and the skew-part coefficient
/// `2 (sqrt(dj) sqrt(1-di) + sqrt(di) sqrt(1-dj)) / (sqrt(di) + sqrt(dj))`
/// (strictly positive).
pub fn sum_ab_coefficients(di: f64, dj: f64) -> (f64, f64) {
    let (ti, tj) = (di.sqrt(), dj.sqrt());
    let (si, sj) = ((1.0 - di).sqrt(), (1.0 - dj).sqrt());
    let a = if (ti - tj).abs() < 1e-12 {
        // limit of the divided difference as the eigenvalues coincide
        2.0 / (1.0 - di).sqrt()
    } else {
        2.0 * (ti * sj - tj * si) / (ti - tj)
    };
    let b = if ti + tj == 0.0 { 2.0 } else { 2.0 * (tj * si + ti * sj) / (ti + tj) };
    (a, b)
}

/// Diagonal coefficient `1 + delta / (1 + sqrt(1 - delta))` of the
/// second-variation sum.
pub fn diag_coefficient(d: f64) -> f64 {
    1.0 + d / (1.0 + (1.0 - d).sqrt())
}

// ---------------------------------------------------------------------------
// Fast 2x2 paths shared with the field-level code. These avoid the full
// spectral factorization when only eigenvalues are needed.
// ---------------------------------------------------------------------------

/// Eigenvalues (ascending) of `xi G xibar G` for n = 2 from trace and
/// determinant; both are real and nonnegative for symmetric xi, SPD G.
pub(crate) fn delta2(g11: f64, g12: f64, g22: f64, x11: C64, x12: C64, x22: C64) -> (f64, f64) {
    // Tr(xi G xibar G) with G real symmetric:
    //   (xi G)_{ab} and (xibar G)_{ba} contracted.
    let a11 = x11 * g11 + x12 * g12;
    let a12 = x11 * g12 + x12 * g22;
    let a21 = x12 * g11 + x22 * g12;
    let a22 = x12 * g12 + x22 * g22;
    let tr = (a11 * a11.conj() + a12 * a21.conj() + a21 * a12.conj() + a22 * a22.conj()).re;
    let detg = g11 * g22 - g12 * g12;
    let detxi = x11 * x22 - x12 * x12;
    let det = detxi.norm_sqr() * detg * detg;
    let half = 0.5 * tr;
    let disc = (half * half - det).max(0.0).sqrt();
    ((half - disc).max(0.0), half + disc)
}
