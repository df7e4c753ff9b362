//! The Delzant toolkit on the unit square: Guillemin data, the stability
//! functional on a probe family, the Higgs boundary-condition check, and the
//! interior residual of the canonical potential.

use hcsk::matfun::{PosDefR, SymMatC};
use hcsk::toricstab::{
    guillemin, guillemin_hessian, guillemin_plus_quadratic, l_functional, stability_probe,
    toric_residual_interior, xi_boundary_check, Affine, DelzantPolygon, ProbeFunction,
};
use num_complex::Complex64 as C64;

fn main() {
    let p = DelzantPolygon::unit_square();
    println!("unit square: {} faces, area {}, dsigma(dP) = {}", p.faces().len(), p.area(), p.sigma_boundary());
    println!("C = dsigma(dP)/area = {}", p.c_constant());

    let (u, g) = guillemin(&p, [0.5, 0.5]).unwrap();
    println!("\nGuillemin potential at the center: {:.6} (= -2 log 2)", u);
    println!(
        "Guillemin Hessian at the center: [[{}, {}], [{}, {}]]",
        g.mat()[(0, 0)],
        g.mat()[(0, 1)],
        g.mat()[(1, 0)],
        g.mat()[(1, 1)]
    );

    // Stability functional on a probe family normalized at the center.
    let probes = vec![
        ProbeFunction::Quadratic { q: [1.0, 0.0, 0.0], grad: [-1.0, 0.0], offset: 0.25 },
        ProbeFunction::Quadratic { q: [0.0, 0.0, 1.0], grad: [0.0, -1.0], offset: 0.25 },
        ProbeFunction::Quadratic { q: [1.0, 0.0, 1.0], grad: [-1.0, -1.0], offset: 0.5 },
        ProbeFunction::PLConvex {
            pieces: vec![
                Affine { grad: [1.0, -1.0], offset: 0.0 },
                Affine { grad: [-1.0, 1.0], offset: 0.0 },
            ],
        },
    ];
    println!("\nstability probes:");
    for (i, f) in probes.iter().enumerate() {
        println!("  probe {i}: L_C = {:.8}", l_functional(&p, f));
    }
    let report = stability_probe(&p, &probes).unwrap();
    println!(
        "lambda_hat = {:.6} from probe {} ({})",
        report.lambda_hat,
        report.worst,
        if report.lambda_hat > 0.0 { "evidence of uniform stability" } else { "instability witness" }
    );

    // Higgs boundary condition: smooth data passes, a bare constant fails.
    let margins = [0.08, 0.04, 0.02, 0.01];
    let phi = SymMatC::sym2(C64::new(0.5, 0.2), C64::new(-0.1, 0.3), C64::new(0.7, 0.0));
    let smooth = |y: [f64; 2]| -> SymMatC {
        let g = guillemin_hessian(&p, y).unwrap();
        let gp = PosDefR::sym2(g[0], g[1], g[2]).unwrap();
        let gi = gp.inverse().to_complex();
        let m = gi.matmul(phi.mat()).matmul(&gi);
        SymMatC::sym2(m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)])
    };
    let rep = xi_boundary_check(&p, &smooth, &margins).unwrap();
    println!("\nboundary check, smooth xi = G_P^-1 Phi G_P^-1: pass = {}", rep.pass);
    println!("  shell sups: {:?}", rep.shell_sups.iter().map(|v| format!("{v:.3}")).collect::<Vec<_>>());
    let constant = |_: [f64; 2]| SymMatC::sym2(C64::new(0.1, 0.0), C64::new(0.0, 0.0), C64::new(0.1, 0.0));
    let rep = xi_boundary_check(&p, &constant, &margins).unwrap();
    println!("boundary check, constant xi: pass = {} (divergent face {:?})", rep.pass, rep.divergent_face);

    // Interior residual of the canonical potential: for the square,
    // (G_P^{-1})^{ab}_{,ab} = -4 identically, so the residual equals C - 4.
    let g_fn = guillemin_plus_quadratic(&p, [0.0; 3]);
    let xi0 = |_: [f64; 2]| SymMatC::zero(2);
    let out = toric_residual_interior(&p, &g_fn, &xi0, 4.0, 0.1).unwrap();
    let max_dev = out.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    println!(
        "\ninterior residual of u_P with C = 4: {} lattice points, max |residual| = {max_dev:.2e}",
        out.points.len()
    );
}
