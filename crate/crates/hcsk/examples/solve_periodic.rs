//! Continuity-method solve of the periodic real moment map for a
//! translation-invariant rank-one Higgs field, cross-checked against the
//! closed-form 1D reduction.

use hcsk::matfun::SymMatC;
use hcsk::oracle1d::{solve_translation_invariant, LowRankHiggs};
use hcsk::realmm::{hk_energy, residual_real, solve_continuity, SolveOptions};
use hcsk::torusfield::{hessian, MatrixField, TorusGrid, TAU};
use num_complex::Complex64 as C64;

fn main() {
    let grid = TorusGrid::new(64).unwrap();
    let c = C64::new(0.2, 0.0);
    let f = |y: f64| C64::new(0.1 * (TAU * y).sin(), 0.0);

    // Higgs field xi = [[c, F(y1)], [F, F^2/c]]: solves the complex moment
    // map and has rank one.
    let xi = MatrixField::from_fn(grid, |y| {
        let fv = f(y[0]);
        SymMatC::sym2(c, fv, fv * fv / c)
    });

    let report = solve_continuity(&xi, 0.0, &SolveOptions::default(), None).unwrap();
    println!("continuity path:");
    for step in &report.path {
        println!(
            "  t = {:.2}: {} Newton iterations, residual {:.2e}",
            step.t, step.iterations, step.residual_sup
        );
    }
    println!("final residual sup: {:.2e}", report.residual_sup);
    println!(
        "energy: F = {:.6e}, H = {:.6e}, total = {:.6e}",
        report.energy.0, report.energy.1, report.energy.2
    );
    println!("max spectral radius at the solution: {:.4}", report.spec_rad_final);

    // Compare the solved metric with the 1D oracle.
    let higgs = LowRankHiggs::second_type_from_fn(c, 1024, f);
    let oracle = solve_translation_invariant(&higgs).unwrap();
    let g = hessian(&report.u).unwrap();
    let n = grid.n_axis();
    let fpp_line: Vec<f64> = oracle.fpp.iter().step_by(1024 / n).copied().collect();
    let mut diff = 0.0_f64;
    for idx in 0..grid.nodes() {
        diff = diff.max((g.a11[idx] - 1.0 - fpp_line[idx / n]).abs());
    }
    println!("\noracle comparison:");
    println!("  k = {:.12}", oracle.k);
    println!("  sup |f''_solver - f''_oracle| = {:.2e}", diff);

    // Energy and residual of the flat potential for contrast.
    let u0 = hcsk::torusfield::SymplecticPotential::flat(grid);
    let (f0, h0, t0) = hk_energy(&u0, &xi).unwrap();
    let r0 = residual_real(&u0, &xi, 0.0).unwrap().sup_norm();
    println!("\nflat start for contrast: energy ({f0:.4e}, {h0:.4e}, {t0:.4e}), residual {r0:.3e}");
}
