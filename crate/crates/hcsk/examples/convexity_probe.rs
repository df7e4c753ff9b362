//! Convexity of the HK-energy: second differences along random linear paths
//! of admissible potentials, the pointwise second-variation integrand, and
//! the sign structure of its reordered coefficient sums.

use hcsk::matfun::{hessian_quadratic_form, spectrum, sum_ab_coefficients, PosDefR};
use hcsk::linalg::RMat;
use hcsk::realmm::hk_energy;
use hcsk::torusfield::{SymplecticPotential, TorusGrid};
use hcsk::verify::{random_admissible_pair, random_potential, random_sym_mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let grid = TorusGrid::new(32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);

    // Energy along linear paths.
    let mut min_second = f64::INFINITY;
    let mut paths = 0;
    while paths < 25 {
        let (u0, xi) = random_admissible_pair(&mut rng, grid, 0.6);
        let bump = random_potential(&mut rng, grid, 0.1);
        let mut phi1 = u0.phi.clone();
        phi1.axpy(1.0, &bump.phi);
        let mut values = Vec::new();
        let mut ok = true;
        for i in 0..11 {
            let t = i as f64 / 10.0;
            let mut phi = u0.phi.scaled(1.0 - t);
            phi.axpy(t, &phi1);
            match hk_energy(&SymplecticPotential::new(phi), &xi) {
                Ok((_, _, total)) => values.push(total),
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue; // the admissible set is not convex; skip exiting paths
        }
        for w in values.windows(3) {
            min_second = min_second.min((w[2] - 2.0 * w[1] + w[0]) / 0.01);
        }
        paths += 1;
    }
    println!("25 random linear paths, 11 samples each:");
    println!("  min sampled d^2/dt^2 of the energy: {min_second:.3e} (convex: {})", min_second >= -1e-10);

    // Pointwise integrand samples.
    let mut min_q = f64::INFINITY;
    let mut done = 0;
    while done < 2000 {
        let g = loop {
            let a = 1.0 + rng.gen_range(-0.4..0.4);
            let b = rng.gen_range(-0.3..0.3);
            let c = 1.0 + rng.gen_range(-0.4..0.4);
            if let Ok(g) = PosDefR::sym2(a, b, c) {
                break g;
            }
        };
        let raw = random_sym_mat(&mut rng, 2, 0.5);
        let s = spectrum(&g, &raw).unwrap();
        let r = s.spectral_radius();
        let xi = if r > 0.0 {
            raw.scale(num_complex::Complex64::new((0.8 / r).sqrt() * rng.gen_range(0.4..1.0), 0.0))
        } else {
            raw
        };
        let (a, b, c) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let gdot = RMat::from_rows(2, &[a, b, b, c]);
        match hessian_quadratic_form(&g, &gdot, &xi) {
            Ok(v) => {
                min_q = min_q.min(v);
                done += 1;
            }
            Err(_) => continue,
        }
    }
    println!("2000 pointwise integrand samples: min value {min_q:.3e}");

    // Coefficient signs of the reordered sum.
    println!("\ncoefficients of the reordered second-variation sum:");
    println!("  delta_i  delta_j   symmetric part   skew part");
    for &(di, dj) in &[(0.1, 0.5), (0.3, 0.31), (0.05, 0.9), (0.7, 0.75)] {
        let (a, b) = sum_ab_coefficients(di, dj);
        println!("  {di:<8.2} {dj:<8.2}  {a:<15.6}  {b:.6}");
    }
}
