//! Numerical toolkit for the Hitchin-cscK (HcscK) system in symplectic
//! coordinates.
//!
//! On the flat 2-torus the system is the pair of equations for a periodic
//! symplectic potential `u(y) = |y|^2/2 + phi(y)` and a complex symmetric
//! "Higgs tensor" field `xi(y)`:
//!
//! ```text
//!   xi^{ab}_{,ab} = 0                                   (complex moment map)
//!   ((1 - xi G xibar G)^{1/2} G^{-1})^{ab}_{,ab} = -C   (real moment map)
//! ```
//!
//! with `G = D^2 u`. The real equation is the Euler-Lagrange equation of the
//! HK-energy `F̂ = -1/2 ∫ log det G + 1/2 ∫ rho(xi G xibar G)`, where `rho` is
//! the Biquard-Gauduchon spectral function; `F̂` is convex along linear paths
//! of admissible potentials, which is what the continuity solver exploits.
//!
//! Module map:
//! * [`linalg`] — small dense complex/real matrices, Jacobi eigensolver.
//! * [`matfun`] — pointwise spectral calculus: spectra of `xi G xibar G`,
//!   Takagi factorization, Biquard-Gauduchon function, square roots,
//!   eigenvalue second variations.
//! * [`torusfield`] — periodic fields on a uniform grid with DFT-based
//!   differentiation, plus the field file formats.
//! * [`complexmm`] — the linear complex moment map: residual, Fourier-mode
//!   kernel projection, T-tensor solutions, the det-locus linearization.
//! * [`realmm`] — the real moment map: residual, HK-energy with analytic
//!   gradient/Hessian action, continuity-method solver.
//! * [`oracle1d`] — closed-form translation-invariant solutions on the
//!   abelian surface; the independent oracle for the 2D solver.
//! * [`toricstab`] — Delzant polygons, Guillemin potentials, the stability
//!   functional `L_C`, Higgs boundary conditions, interior residuals.
//! * [`verify`] — randomized invariant suites shared by the CLI and tests.
//! * [`cli`] — the `hcsk` command-line front end.

pub mod cli;
pub mod complexmm;
pub mod linalg;
pub mod matfun;
pub mod oracle1d;
pub mod realmm;
pub mod toricstab;
pub mod torusfield;
pub mod verify;

pub use num_complex::Complex64;
