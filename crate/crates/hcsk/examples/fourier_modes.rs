//! The linear complex moment map on the torus: residual, solutions from
//! antisymmetric T-tensors, kernel projection, and the minimal-norm solve of
//! the linearized determinant equation.

use hcsk::complexmm::{
    det_differential, det_linearization_solve, from_t_tensor, fourier_project, residual_complex,
    FourierModes, TTensor,
};
use hcsk::matfun::SymMatC;
use hcsk::torusfield::{ComplexField, MatrixField, TorusGrid, TAU};
use num_complex::Complex64 as C64;

fn main() {
    let grid = TorusGrid::new(32).unwrap();

    // A solution built from a T-tensor is annihilated by the residual.
    let t = TTensor::new(
        ComplexField::from_fn(grid, |y| C64::new((TAU * y[0]).sin(), 0.3 * (TAU * y[1]).cos())),
        ComplexField::from_fn(grid, |y| C64::new(0.0, (TAU * (y[0] + y[1])).sin())),
    );
    let xi = from_t_tensor(&t);
    println!("T-tensor field sup norm: {:.4}", xi.sup_norm());
    println!("residual of the T-tensor solution: {:.2e}", residual_complex(&xi).sup_norm());

    // Projecting a generic field onto the solution space.
    let raw = MatrixField::from_fn(grid, |y| {
        SymMatC::sym2(
            C64::new((TAU * y[0]).cos(), 0.0),
            C64::new(0.2, (2.0 * TAU * y[1]).sin()),
            C64::new(0.0, -0.4 * (TAU * y[0]).sin()),
        )
    });
    println!("\nresidual before projection: {:.4}", residual_complex(&raw).sup_norm());
    let projected = fourier_project(&raw);
    println!("residual after projection:  {:.2e}", residual_complex(&projected).sup_norm());
    let twice = fourier_project(&projected);
    let mut idem = 0.0_f64;
    for idx in 0..grid.nodes() {
        idem = idem.max((projected.m11[idx] - twice.m11[idx]).norm());
    }
    println!("projection idempotence defect: {:.2e}", idem);

    // Fourier-mode table of the projected field (largest coefficients).
    let table = FourierModes::analyze(&projected);
    let mut entries = table.entries.clone();
    entries.sort_by(|a, b| {
        let na: f64 = b.1.iter().map(|z| z.norm()).sum();
        let nb: f64 = a.1.iter().map(|z| z.norm()).sum();
        na.partial_cmp(&nb).unwrap()
    });
    println!("\nlargest modes (k1, k2) -> |xi11|, |xi12|, |xi22|:");
    for (k, c) in entries.iter().take(4) {
        println!(
            "  ({:2}, {:2}) -> {:.4}, {:.4}, {:.4}",
            k[0],
            k[1],
            c[0].norm(),
            c[1].norm(),
            c[2].norm()
        );
    }

    // Linearized determinant equation on the solution space.
    let xi0 = SymMatC::sym2(C64::new(2.0_f64.sqrt(), 0.0), C64::new(1.0, 0.0), C64::new(2.0_f64.sqrt(), 0.0));
    let f = ComplexField::from_fn(grid, |y| C64::from_polar(1.0, TAU * (y[0] + y[1])));
    let sol = det_linearization_solve(&xi0, &f).unwrap();
    let back = det_differential(&xi0, &sol);
    let mut roundtrip = 0.0_f64;
    for idx in 0..grid.nodes() {
        roundtrip = roundtrip.max((back.values[idx] - f.values[idx]).norm());
    }
    println!("\ndet-linearization round-trip defect: {:.2e}", roundtrip);
    println!("det-linearization solution residual: {:.2e}", residual_complex(&sol).sup_norm());

    // The obstructed coincidence raises an error rather than dropping modes.
    let blocked = SymMatC::sym2(C64::new(-1.0, 0.0), C64::new(1.0, 0.0), C64::new(-1.0, 0.0));
    match det_linearization_solve(&blocked, &f) {
        Err(e) => println!("obstructed base point: {e}"),
        Ok(_) => println!("unexpected success"),
    }
}
