//! Randomized invariant suites (gradient checks, convexity sampling, Takagi
//! reconstruction, projection idempotence) shared by the CLI `verify`
//! command and the acceptance tests, plus the seeded samplers they draw
//! from.

use crate::complexmm::{fourier_project, mode_constraint, residual_complex, FourierModes};
use crate::linalg::{CMat, C64};
use crate::matfun::{self, SymMatC};
use crate::realmm::hk_energy;
use crate::torusfield::{
    hessian_of_field, spec_rad_max, ComplexField, MatrixField, ScalarField, SymplecticPotential,
    TorusGrid, TAU,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

/// Band-limited random real field: a sum of `terms` cosine waves with
/// `|k|_inf <= kmax`.
pub fn random_trig_field(
    rng: &mut ChaCha8Rng,
    grid: TorusGrid,
    kmax: i64,
    terms: usize,
    amp: f64,
) -> ScalarField {
    let mut f = ScalarField::zeros(grid);
    for _ in 0..terms {
        let k1 = rng.gen_range(-kmax..=kmax) as f64;
        let k2 = rng.gen_range(-kmax..=kmax) as f64;
        let a = rng.gen_range(-amp..amp);
        let ph = rng.gen_range(0.0..TAU);
        for idx in 0..grid.nodes() {
            let y = grid.y(idx);
            f.values[idx] += a * (TAU * (k1 * y[0] + k2 * y[1]) + ph).cos();
        }
    }
    f
}

/// Band-limited random complex field.
pub fn random_trig_complex(
    rng: &mut ChaCha8Rng,
    grid: TorusGrid,
    kmax: i64,
    terms: usize,
    amp: f64,
) -> ComplexField {
    let mut f = ComplexField::zeros(grid);
    for _ in 0..terms {
        let k1 = rng.gen_range(-kmax..=kmax) as f64;
        let k2 = rng.gen_range(-kmax..=kmax) as f64;
        let a = C64::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp));
        for idx in 0..grid.nodes() {
            let y = grid.y(idx);
            f.values[idx] += a * C64::from_polar(1.0, TAU * (k1 * y[0] + k2 * y[1]));
        }
    }
    f
}

/// Random potential with `sup |D^2 phi| <= hess_bound`, so `G = 1 + D^2 phi`
/// stays uniformly positive definite.
pub fn random_potential(
    rng: &mut ChaCha8Rng,
    grid: TorusGrid,
    hess_bound: f64,
) -> SymplecticPotential {
    let mut phi = random_trig_field(rng, grid, 4, 8, 1.0);
    let d2 = hessian_of_field(&phi);
    let mut sup = 0.0_f64;
    for idx in 0..grid.nodes() {
        sup = sup.max(d2.a11[idx].abs()).max(d2.a12[idx].abs()).max(d2.a22[idx].abs());
    }
    if sup > 0.0 {
        phi = phi.scaled(hess_bound / sup);
    }
    SymplecticPotential::new(phi)
}

/// Random complex symmetric matrix.
pub fn random_sym_mat(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> SymMatC {
    let mut upper = Vec::new();
    for _ in 0..n * (n + 1) / 2 {
        upper.push(C64::new(rng.gen_range(-amp..amp), rng.gen_range(-amp..amp)));
    }
    SymMatC::from_upper(n, &upper)
}

/// Random constant Higgs tensor with positive semidefinite real and
/// imaginary parts (the uniqueness regime), scaled to the requested spectral
/// radius at the flat metric.
pub fn random_semidefinite_higgs(rng: &mut ChaCha8Rng, target_rad: f64) -> SymMatC {
    let psd = |rng: &mut ChaCha8Rng| -> [f64; 3] {
        let (a, b, c, d) = (
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        // R^T R for a random 2x2 R.
        [a * a + c * c, a * b + c * d, b * b + d * d]
    };
    let re = psd(rng);
    let im = psd(rng);
    let xi = SymMatC::sym2(
        C64::new(re[0], im[0]),
        C64::new(re[1], im[1]),
        C64::new(re[2], im[2]),
    );
    let s = matfun::spectrum(&matfun::PosDefR::identity(2), &xi).unwrap();
    let rad = s.spectral_radius();
    if rad == 0.0 {
        return xi;
    }
    xi.scale(C64::new((target_rad / rad).sqrt(), 0.0))
}

/// Random admissible pair `(u, xi)` on the grid with max spectral radius
/// close to `target`.
pub fn random_admissible_pair(
    rng: &mut ChaCha8Rng,
    grid: TorusGrid,
    target: f64,
) -> (SymplecticPotential, MatrixField) {
    let u = random_potential(rng, grid, 0.3);
    let base = random_sym_mat(rng, 2, 0.4);
    let mut xi = MatrixField::constant(grid, &base);
    let wiggle = random_trig_field(rng, grid, 3, 4, 0.1);
    for idx in 0..grid.nodes() {
        xi.m12[idx] += C64::new(wiggle.values[idx], -0.4 * wiggle.values[idx]);
    }
    let rep = spec_rad_max(&u, &xi).unwrap();
    if rep.spec_rad_max > 0.0 {
        let f = (target / rep.spec_rad_max).sqrt() * rng.gen_range(0.6..1.0);
        xi = xi.scaled(C64::new(f, 0.0));
    }
    (u, xi)
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize)]
pub struct SuiteResult {
    pub name: String,
    pub pass: bool,
    pub max_defect: f64,
    pub threshold: f64,
    pub cases: usize,
}

impl SuiteResult {
    fn from_defect(name: &str, max_defect: f64, threshold: f64, cases: usize) -> SuiteResult {
        SuiteResult {
            name: name.to_string(),
            pass: max_defect <= threshold,
            max_defect,
            threshold,
            cases,
        }
    }
}

/// Gradient suite: the analytic HK-gradient against central finite
/// differences of the energy; max relative defect over random admissible
/// triples.
pub fn gradient_suite(seed: u64, grid_n: usize, cases: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6772_6164);
    let grid = TorusGrid::new(grid_n).unwrap();
    let h = 1e-5;
    let mut max_defect = 0.0_f64;
    for _ in 0..cases {
        let (u, xi) = random_admissible_pair(&mut rng, grid, 0.5);
        let grad = crate::realmm::hk_gradient(&u, &xi).unwrap();
        let psi = random_potential(&mut rng, grid, 0.5).phi;
        let mut up = u.phi.clone();
        up.axpy(h, &psi);
        let mut um = u.phi.clone();
        um.axpy(-h, &psi);
        let ep = hk_energy(&SymplecticPotential::new(up), &xi).unwrap().2;
        let em = hk_energy(&SymplecticPotential::new(um), &xi).unwrap().2;
        let fd = (ep - em) / (2.0 * h);
        let pairing = grad.inner(&psi);
        let defect = (pairing - fd).abs() / pairing.abs().max(fd.abs()).max(1e-10);
        max_defect = max_defect.max(defect);
    }
    SuiteResult::from_defect("gradient", max_defect, 1e-6, cases)
}

/// Convexity suite: second differences of the HK-energy along random linear
/// paths in the admissible set, sampled at 11 points each. Reports the most
/// negative sampled value (sign-flipped into a defect).
pub fn convexity_suite(seed: u64, grid_n: usize, paths: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x636f_6e76);
    let grid = TorusGrid::new(grid_n).unwrap();
    let mut min_second = f64::INFINITY;
    let mut accepted = 0;
    while accepted < paths {
        let (u0, xi) = random_admissible_pair(&mut rng, grid, 0.6);
        let bump = random_potential(&mut rng, grid, 0.1);
        let mut phi1 = u0.phi.clone();
        phi1.axpy(1.0, &bump.phi);
        let u1 = SymplecticPotential::new(phi1);

        // Sample the energy at 11 points; skip paths that exit the
        // admissible set (it is not convex in general).
        let mut values = Vec::with_capacity(11);
        let mut ok = true;
        for i in 0..11 {
            let t = i as f64 / 10.0;
            let mut phi = u0.phi.scaled(1.0 - t);
            phi.axpy(t, &u1.phi);
            match hk_energy(&SymplecticPotential::new(phi), &xi) {
                Ok((_, _, total)) => values.push(total),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        for w in values.windows(3) {
            let dt = 0.1;
            min_second = min_second.min((w[2] - 2.0 * w[1] + w[0]) / (dt * dt));
        }
        accepted += 1;
    }
    SuiteResult::from_defect("convexity", (-min_second).max(0.0), 1e-10, paths)
}

/// Takagi suite: reconstruction and unitarity defects over random complex
/// symmetric matrices.
pub fn takagi_suite(seed: u64, cases: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7461_6b61);
    let mut max_defect = 0.0_f64;
    for i in 0..cases {
        let n = if i % 3 == 0 { 3 } else { 2 };
        let m = random_sym_mat(&mut rng, n, 2.0);
        let (u, d) = matfun::takagi(&m);
        let recon = u.matmul(&CMat::diag_re(&d)).matmul(&u.transpose());
        let scale = m.mat().frobenius().max(1.0);
        let defect = recon.sub(m.mat()).frobenius() / scale;
        let unitarity = u.adjoint().matmul(&u).sub(&CMat::identity(n)).frobenius();
        max_defect = max_defect.max(defect).max(unitarity);
    }
    SuiteResult::from_defect("takagi", max_defect, 1e-10, cases)
}

/// Projection suite: idempotence of the Fourier kernel projection and the
/// per-mode constraint of its output.
pub fn projection_suite(seed: u64, grid_n: usize, cases: usize) -> SuiteResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7072_6f6a);
    let grid = TorusGrid::new(grid_n).unwrap();
    let mut max_defect = 0.0_f64;
    for _ in 0..cases {
        let xi = MatrixField {
            grid,
            m11: random_trig_complex(&mut rng, grid, 6, 10, 1.0).values,
            m12: random_trig_complex(&mut rng, grid, 6, 10, 1.0).values,
            m22: random_trig_complex(&mut rng, grid, 6, 10, 1.0).values,
        };
        let scale = xi.sup_norm().max(1.0);
        let p1 = fourier_project(&xi);
        let p2 = fourier_project(&p1);
        let mut idem = 0.0_f64;
        for idx in 0..grid.nodes() {
            idem = idem
                .max((p1.m11[idx] - p2.m11[idx]).norm())
                .max((p1.m12[idx] - p2.m12[idx]).norm())
                .max((p1.m22[idx] - p2.m22[idx]).norm());
        }
        max_defect = max_defect.max(idem / scale);
        max_defect = max_defect.max(residual_complex(&p1).sup_norm() / scale * 1e-2);
        // Per-mode constraint of the projected field (away from Nyquist,
        // where the symbol convention differs from the raw quadratic form).
        let table = FourierModes::analyze(&p1);
        let ny = grid.n_axis() as i64 / 2;
        for (k, c) in &table.entries {
            if k[0].abs() == ny || k[1].abs() == ny {
                continue;
            }
            let cons = mode_constraint(*k, &SymMatC::sym2(c[0], c[1], c[2]));
            max_defect = max_defect.max(cons.norm() / scale * 1e-3);
        }
    }
    SuiteResult::from_defect("projection", max_defect, 1e-12, cases)
}

/// Run the four invariant suites with deterministic sub-seeds.
pub fn run_all(seed: u64, grid_n: usize) -> Vec<SuiteResult> {
    vec![
        gradient_suite(seed, grid_n, 10),
        convexity_suite(seed, grid_n, 20),
        takagi_suite(seed, 300),
        projection_suite(seed, grid_n, 10),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_default_seed() {
        for suite in run_all(0, 16) {
            assert!(
                suite.pass,
                "suite {} failed: defect {} > {}",
                suite.name, suite.max_defect, suite.threshold
            );
        }
    }

    #[test]
    fn suites_are_deterministic() {
        let a = run_all(42, 16);
        let b = run_all(42, 16);
        for (x, y) in a.iter().zip(b.iter()) {
            assert_eq!(x.max_defect.to_bits(), y.max_defect.to_bits());
        }
    }
}
