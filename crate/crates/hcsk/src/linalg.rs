//! Small dense matrices and the eigensolvers the rest of the crate is built
//! on. Everything here is sized for n = 2..4; algorithms are chosen for
//! robustness at that scale (cyclic Jacobi, classical Cholesky), not for
//! large-matrix throughput.

use num_complex::Complex64;

pub type C64 = Complex64;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    n: usize,
    data: Vec<C64>,
}

/// Dense row-major real matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct RMat {
    n: usize,
    data: Vec<f64>,
}

impl CMat {
    pub fn zeros(n: usize) -> Self {
        CMat { n, data: vec![C64::new(0.0, 0.0); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(n: usize, rows: &[C64]) -> Self {
        assert_eq!(rows.len(), n * n);
        CMat { n, data: rows.to_vec() }
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = CMat::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn diag_re(entries: &[f64]) -> Self {
        let mut m = CMat::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = C64::new(e, 0.0);
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add(&self, other: &CMat) -> CMat {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a += *b;
        }
        out
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(other.data.iter()) {
            *a -= *b;
        }
        out
    }

    pub fn scale(&self, s: C64) -> CMat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a *= s;
        }
        out
    }

    pub fn conj(&self) -> CMat {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a = a.conj();
        }
        out
    }

    pub fn transpose(&self) -> CMat {
        let n = self.n;
        let mut out = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out[(i, j)] = self[(j, i)];
            }
        }
        out
    }

    pub fn adjoint(&self) -> CMat {
        self.transpose().conj()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn real_part(&self) -> RMat {
        RMat { n: self.n, data: self.data.iter().map(|z| z.re).collect() }
    }

    /// Hermitian symmetrization (A + A^H)/2.
    pub fn hermitize(&self) -> CMat {
        let at = self.adjoint();
        self.add(&at).scale(C64::new(0.5, 0.0))
    }

    /// Direct inverse; small n only. Panics on exactly singular input.
    pub fn inverse(&self) -> CMat {
        let n = self.n;
        // Gauss-Jordan with partial pivoting.
        let mut a = self.clone();
        let mut inv = CMat::identity(n);
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[(r, col)].norm() > a[(piv, col)].norm() {
                    piv = r;
                }
            }
            assert!(a[(piv, col)].norm() > 0.0, "singular matrix");
            if piv != col {
                for j in 0..n {
                    a.data.swap(col * n + j, piv * n + j);
                    inv.data.swap(col * n + j, piv * n + j);
                }
            }
            let d = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= d;
                inv[(col, j)] /= d;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[(r, col)];
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..n {
                    let acj = a[(col, j)];
                    let icj = inv[(col, j)];
                    a[(r, j)] -= f * acj;
                    inv[(r, j)] -= f * icj;
                }
            }
        }
        inv
    }
}

impl std::ops::Index<(usize, usize)> for CMat {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.n + j]
    }
}

impl RMat {
    pub fn zeros(n: usize) -> Self {
        RMat { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RMat::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(n: usize, rows: &[f64]) -> Self {
        assert_eq!(rows.len(), n * n);
        RMat { n, data: rows.to_vec() }
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = RMat::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_complex(&self) -> CMat {
        CMat { n: self.n, data: self.data.iter().map(|&x| C64::new(x, 0.0)).collect() }
    }

    pub fn matmul(&self, other: &RMat) -> RMat {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = RMat::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                for j in 0..n {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    /// Classical Cholesky of a symmetric matrix; `None` if not positive
    /// definite.
    pub fn cholesky(&self) -> Option<RMat> {
        let n = self.n;
        let mut l = RMat::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l[(i, j)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Some(l)
    }
}

impl std::ops::Index<(usize, usize)> for RMat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for RMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations. Returns eigenvalues sorted ascending and the unitary matrix of
/// eigenvectors as columns, so `a = v * diag(vals) * v^H`.
///
/// The input is Hermitian-symmetrized first; quadratic convergence makes a
/// handful of sweeps plenty at the matrix sizes used here.
pub fn herm_eigen(a: &CMat) -> (Vec<f64>, CMat) {
    let n = a.n;
    let mut m = a.hermitize();
    let mut v = CMat::identity(n);
    let scale = m.frobenius().max(1.0);
    let tol = 1e-16 * scale;

    for _sweep in 0..60 {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += m[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let r = apq.norm();
                if r <= tol * 1e-2 {
                    continue;
                }
                let phase = apq / r;
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let tau = (aqq - app) / (2.0 * r);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Unitary U: identity except
                //   U_pp = c, U_pq = s*phase, U_qp = -s*conj(phase), U_qq = c.
                // Update m <- U^H m U and v <- v U.
                for j in 0..n {
                    let mpj = m[(p, j)];
                    let mqj = m[(q, j)];
                    m[(p, j)] = mpj * c - mqj * s * phase;
                    m[(q, j)] = mpj * s * phase.conj() + mqj * c;
                }
                for i in 0..n {
                    let mip = m[(i, p)];
                    let miq = m[(i, q)];
                    m[(i, p)] = mip * c - miq * s * phase.conj();
                    m[(i, q)] = mip * s * phase + miq * c;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = vip * c - viq * s * phase.conj();
                    v[(i, q)] = vip * s * phase + viq * c;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
            }
        }
    }

    let mut vals: Vec<f64> = (0..n).map(|i| m[(i, i)].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
    let sorted_vals: Vec<f64> = order.iter().map(|&i| vals[i]).collect();
    let mut sorted_v = CMat::zeros(n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for i in 0..n {
            sorted_v[(i, new_col)] = v[(i, old_col)];
        }
    }
    vals = sorted_vals;
    (vals, sorted_v)
}

/// Eigendecomposition of a real symmetric matrix; wraps [`herm_eigen`] and
/// strips the (zero) imaginary parts.
pub fn real_sym_eigen(a: &RMat) -> (Vec<f64>, RMat) {
    let (vals, v) = herm_eigen(&a.to_complex());
    (vals, v.real_part())
}

/// Symmetric positive definite square root. Closed form for n = 2, Jacobi
/// otherwise. Panics if the input is not positive definite.
pub fn sqrt_spd(g: &RMat) -> RMat {
    let n = g.n;
    if n == 2 {
        let (a, b, c) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
        let det = a * c - b * b;
        let tr = a + c;
        assert!(det > 0.0 && tr > 0.0, "matrix not positive definite");
        let s = det.sqrt();
        let t = (tr + 2.0 * s).sqrt();
        return RMat::from_rows(2, &[(a + s) / t, b / t, b / t, (c + s) / t]);
    }
    let (vals, v) = real_sym_eigen(g);
    assert!(vals.iter().all(|&x| x > 0.0), "matrix not positive definite");
    let mut out = RMat::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..n {
                s += v[(i, k)] * vals[k].sqrt() * v[(j, k)];
            }
            out[(i, j)] = s;
        }
    }
    out
}

/// Inverse of a symmetric positive definite matrix.
pub fn inv_spd(g: &RMat) -> RMat {
    let n = g.n;
    if n == 2 {
        let (a, b, c) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
        let det = a * c - b * b;
        assert!(det != 0.0, "singular matrix");
        return RMat::from_rows(2, &[c / det, -b / det, -b / det, a / det]);
    }
    g.to_complex().inverse().real_part()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> CMat {
        let mut a = CMat::zeros(n);
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        a.hermitize()
    }

    #[test]
    fn herm_eigen_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in 2..=4 {
            for _ in 0..200 {
                let a = random_hermitian(&mut rng, n);
                let (vals, v) = herm_eigen(&a);
                let recon = v.matmul(&CMat::diag_re(&vals)).matmul(&v.adjoint());
                assert!(recon.sub(&a).frobenius() < 1e-12 * a.frobenius().max(1.0));
                let unit = v.adjoint().matmul(&v).sub(&CMat::identity(n));
                assert!(unit.frobenius() < 1e-13);
                for w in vals.windows(2) {
                    assert!(w[0] <= w[1] + 1e-14);
                }
            }
        }
    }

    #[test]
    fn herm_eigen_degenerate() {
        // Multiple eigenvalues: the identity plus a rank-one bump.
        let mut a = CMat::identity(3);
        a[(0, 1)] = C64::new(0.0, 0.5);
        a[(1, 0)] = C64::new(0.0, -0.5);
        let (vals, v) = herm_eigen(&a);
        let recon = v.matmul(&CMat::diag_re(&vals)).matmul(&v.adjoint());
        assert!(recon.sub(&a).frobenius() < 1e-13);
    }

    #[test]
    fn sqrt_spd_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let (a, b): (f64, f64) = (rng.gen_range(0.3..3.0), rng.gen_range(-0.4..0.4));
            let c = rng.gen_range(b.abs() * b.abs() / 0.3 + 0.1..4.0);
            let g = RMat::from_rows(2, &[a, b, b, c]);
            if g.cholesky().is_none() {
                continue;
            }
            let w = sqrt_spd(&g);
            let diff = w.matmul(&w);
            let mut err: f64 = 0.0;
            for i in 0..4 {
                err = err.max((diff.data()[i] - g.data()[i]).abs());
            }
            assert!(err < 1e-13, "sqrt defect {err}");
        }
    }

    #[test]
    fn cholesky_detects_indefinite() {
        let g = RMat::from_rows(2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(g.cholesky().is_none());
        let g = RMat::from_rows(2, &[2.0, 0.3, 0.3, 1.0]);
        assert!(g.cholesky().is_some());
    }

    #[test]
    fn inverse_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 2..=4 {
            let a = random_hermitian(&mut rng, n).add(&CMat::identity(n).scale(C64::new(3.0, 0.0)));
            let inv = a.inverse();
            let eye = a.matmul(&inv).sub(&CMat::identity(n));
            assert!(eye.frobenius() < 1e-12);
        }
    }
}
