//! Pointwise spectral calculus on a single admissible pair: eigenvalues of
//! `xi G xibar G`, the Takagi factorization, the Biquard-Gauduchon density,
//! and the transforms built from the matrix square root.

use hcsk::linalg::CMat;
use hcsk::matfun::{
    bg_rho, eig_second_variation, hat_transform, hessian_quadratic_form, spectrum, sqrt_one_minus,
    takagi, PosDefR, SymMatC,
};
use hcsk::linalg::RMat;
use num_complex::Complex64 as C64;

fn main() {
    let g = PosDefR::sym2(1.4, 0.2, 0.9).unwrap();
    let xi = SymMatC::sym2(C64::new(0.30, 0.10), C64::new(0.05, -0.12), C64::new(0.18, 0.22));

    let s = spectrum(&g, &xi).unwrap();
    println!("eigenvalues of xi G xibar G: {:?}", s.delta);
    println!("spectral radius: {:.6} (admissible: {})", s.spectral_radius(), s.spectral_radius() < 1.0);
    println!("rho density: {:.8}", bg_rho(&s).unwrap());

    // Takagi factorization of the whitened Higgs tensor N = W xi W.
    let w = g.sqrt().to_complex();
    let n_mat = w.matmul(xi.mat()).matmul(&w);
    let n_sym = SymMatC::sym2(n_mat[(0, 0)], n_mat[(0, 1)], n_mat[(1, 1)]);
    let (u, d) = takagi(&n_sym);
    let recon = u.matmul(&CMat::diag_re(&d)).matmul(&u.transpose());
    println!("takagi singular values: {:?}", d);
    println!("takagi reconstruction defect: {:.2e}", recon.sub(n_sym.mat()).frobenius());
    println!("takagi unitarity defect: {:.2e}", u.adjoint().matmul(&u).sub(&CMat::identity(2)).frobenius());

    // The square root and the derivative kernel of rho.
    let sq = sqrt_one_minus(&g, &xi).unwrap();
    let gc = g.mat().to_complex();
    let m = xi.mat().matmul(&gc).matmul(&xi.mat().conj()).matmul(&gc);
    let target = CMat::identity(2).sub(&m);
    println!("sqrt squaring defect: {:.2e}", sq.matmul(&sq).sub(&target).frobenius());
    let hat = hat_transform(&g, &xi).unwrap();
    println!("hat transform [0,0] entry: {:.6} + {:.1e} i", hat[(0, 0)].re, hat[(0, 0)].im);

    // Eigenvalue curvature along a metric direction, and the pointwise
    // second-variation integrand of the HK-energy.
    let gdot = RMat::from_rows(2, &[0.6, -0.1, -0.1, 0.3]);
    let ddot = eig_second_variation(&g, &gdot, &xi).unwrap();
    println!("eigenvalue second variations: {:?}", ddot);
    let q = hessian_quadratic_form(&g, &gdot, &xi).unwrap();
    println!("second-variation integrand: {:.8} (nonnegative: {})", q, q >= 0.0);
}
