//! Periodic scalar and matrix-valued fields on a uniform grid over the unit
//! 2-torus, with DFT-based differentiation.
//!
//! Nodes are `y = (i/N, j/N)` stored row-major (`idx = i*N + j`). Nonlinear
//! and matrix operations act pointwise in node space; derivatives act in mode
//! space, where they are exact on trigonometric polynomials resolved by the
//! grid. The Nyquist mode is zeroed for odd derivative orders, which keeps
//! every derivative operator skew-adjoint.

use crate::linalg::{RMat, C64};
use crate::matfun::{self, PosDefR, SymMatC};
use rustfft::FftPlanner;
use std::io::{Read, Write};
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

pub const TAU: f64 = std::f64::consts::TAU;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("grid size {0} must be a power of two and at least 8")]
    BadGrid(usize),
    #[error("hessian fails positive definiteness at node {node} (y = {y:?})")]
    NotConvex { node: usize, y: [f64; 2] },
    #[error("field shape mismatch")]
    ShapeMismatch,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad field file: {0}")]
    BadFile(String),
}

pub type Result<T> = std::result::Result<T, FieldError>;

/// Uniform grid on the unit 2-torus with `N` nodes per axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TorusGrid {
    n_axis: usize,
}

impl TorusGrid {
    pub fn new(n_axis: usize) -> Result<Self> {
        if n_axis < 8 || !n_axis.is_power_of_two() {
            return Err(FieldError::BadGrid(n_axis));
        }
        Ok(TorusGrid { n_axis })
    }

    pub fn n_axis(&self) -> usize {
        self.n_axis
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n_axis as f64
    }

    pub fn nodes(&self) -> usize {
        self.n_axis * self.n_axis
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n_axis + j
    }

    pub fn y(&self, idx: usize) -> [f64; 2] {
        let h = self.spacing();
        [(idx / self.n_axis) as f64 * h, (idx % self.n_axis) as f64 * h]
    }

    /// Signed integer wavenumber of mode index `j` along one axis; the
    /// Nyquist index maps to +N/2.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let n = self.n_axis as i64;
        let j = j as i64;
        if j <= n / 2 {
            j
        } else {
            j - n
        }
    }

    fn is_nyquist(&self, j: usize) -> bool {
        j == self.n_axis / 2
    }
}

/// Real periodic scalar field.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub grid: TorusGrid,
    pub values: Vec<f64>,
}

/// Complex periodic scalar field.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    pub grid: TorusGrid,
    pub values: Vec<C64>,
}

/// Complex symmetric 2x2 matrix field, stored by components.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    pub grid: TorusGrid,
    pub m11: Vec<C64>,
    pub m12: Vec<C64>,
    pub m22: Vec<C64>,
}

/// Real symmetric 2x2 matrix field (Hessians).
#[derive(Clone, Debug, PartialEq)]
pub struct RealSymField {
    pub grid: TorusGrid,
    pub a11: Vec<f64>,
    pub a12: Vec<f64>,
    pub a22: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: TorusGrid) -> Self {
        ScalarField { grid, values: vec![0.0; grid.nodes()] }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = (0..grid.nodes()).map(|i| f(grid.y(i))).collect();
        ScalarField { grid, values }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, &v| m.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.values.len() as f64).sqrt()
    }

    /// Mean-over-nodes inner product (trapezoidal rule, exact for periodic
    /// trigonometric polynomials).
    pub fn inner(&self, other: &ScalarField) -> f64 {
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>()
            / self.values.len() as f64
    }

    pub fn axpy(&mut self, a: f64, x: &ScalarField) {
        for (s, v) in self.values.iter_mut().zip(&x.values) {
            *s += a * v;
        }
    }

    pub fn scaled(&self, a: f64) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|v| a * v).collect() }
    }

    pub fn project_zero_mean(&mut self) {
        let m = self.mean();
        for v in self.values.iter_mut() {
            *v -= m;
        }
    }

    pub fn to_complex(&self) -> ComplexField {
        ComplexField {
            grid: self.grid,
            values: self.values.iter().map(|&v| C64::new(v, 0.0)).collect(),
        }
    }
}

impl ComplexField {
    pub fn zeros(grid: TorusGrid) -> Self {
        ComplexField { grid, values: vec![C64::new(0.0, 0.0); grid.nodes()] }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 2]) -> C64) -> Self {
        let values = (0..grid.nodes()).map(|i| f(grid.y(i))).collect();
        ComplexField { grid, values }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.norm()))
    }

    pub fn imag_sup(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.im.abs()))
    }

    pub fn real_part(&self) -> ScalarField {
        ScalarField { grid: self.grid, values: self.values.iter().map(|v| v.re).collect() }
    }

    pub fn mean(&self) -> C64 {
        self.values.iter().sum::<C64>() / C64::new(self.values.len() as f64, 0.0)
    }
}

impl MatrixField {
    pub fn zeros(grid: TorusGrid) -> Self {
        let z = vec![C64::new(0.0, 0.0); grid.nodes()];
        MatrixField { grid, m11: z.clone(), m12: z.clone(), m22: z }
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 2]) -> SymMatC) -> Self {
        let mut out = MatrixField::zeros(grid);
        for i in 0..grid.nodes() {
            let m = f(grid.y(i));
            out.m11[i] = m[(0, 0)];
            out.m12[i] = m[(0, 1)];
            out.m22[i] = m[(1, 1)];
        }
        out
    }

    pub fn constant(grid: TorusGrid, m: &SymMatC) -> Self {
        MatrixField::from_fn(grid, |_| m.clone())
    }

    pub fn at(&self, idx: usize) -> SymMatC {
        SymMatC::sym2(self.m11[idx], self.m12[idx], self.m22[idx])
    }

    pub fn scaled(&self, s: C64) -> MatrixField {
        MatrixField {
            grid: self.grid,
            m11: self.m11.iter().map(|v| v * s).collect(),
            m12: self.m12.iter().map(|v| v * s).collect(),
            m22: self.m22.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &MatrixField) -> MatrixField {
        MatrixField {
            grid: self.grid,
            m11: self.m11.iter().zip(&other.m11).map(|(a, b)| a + b).collect(),
            m12: self.m12.iter().zip(&other.m12).map(|(a, b)| a + b).collect(),
            m22: self.m22.iter().zip(&other.m22).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        let mut m = 0.0_f64;
        for i in 0..self.grid.nodes() {
            m = m.max(self.m11[i].norm()).max(self.m12[i].norm()).max(self.m22[i].norm());
        }
        m
    }
}

impl RealSymField {
    pub fn zeros(grid: TorusGrid) -> Self {
        let z = vec![0.0; grid.nodes()];
        RealSymField { grid, a11: z.clone(), a12: z.clone(), a22: z }
    }

    pub fn at(&self, idx: usize) -> RMat {
        RMat::from_rows(2, &[self.a11[idx], self.a12[idx], self.a12[idx], self.a22[idx]])
    }

    pub fn to_matrix_field(&self) -> MatrixField {
        MatrixField {
            grid: self.grid,
            m11: self.a11.iter().map(|&v| C64::new(v, 0.0)).collect(),
            m12: self.a12.iter().map(|&v| C64::new(v, 0.0)).collect(),
            m22: self.a22.iter().map(|&v| C64::new(v, 0.0)).collect(),
        }
    }
}

/// Symplectic potential `u(y) = |y|^2/2 + phi(y)` with periodic, mean-zero
/// `phi`. The constructor removes the mean (the additive-constant gauge).
#[derive(Clone, Debug, PartialEq)]
pub struct SymplecticPotential {
    pub phi: ScalarField,
}

impl SymplecticPotential {
    pub fn new(mut phi: ScalarField) -> Self {
        phi.project_zero_mean();
        SymplecticPotential { phi }
    }

    pub fn flat(grid: TorusGrid) -> Self {
        SymplecticPotential { phi: ScalarField::zeros(grid) }
    }

    pub fn grid(&self) -> TorusGrid {
        self.phi.grid
    }
}

// ---------------------------------------------------------------------------
// FFT plumbing
// ---------------------------------------------------------------------------

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

fn plans(n: usize) -> (Arc<dyn rustfft::Fft<f64>>, Arc<dyn rustfft::Fft<f64>>) {
    let mut p = planner().lock().unwrap();
    (p.plan_fft_forward(n), p.plan_fft_inverse(n))
}

fn transpose(data: &mut [C64], n: usize) {
    for i in 0..n {
        for j in i + 1..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// In-place unnormalized 2D FFT over an N x N row-major buffer.
pub fn fft2_forward(data: &mut [C64], n: usize) {
    let (fwd, _) = plans(n);
    for row in data.chunks_exact_mut(n) {
        fwd.process(row);
    }
    transpose(data, n);
    for row in data.chunks_exact_mut(n) {
        fwd.process(row);
    }
    transpose(data, n);
}

/// In-place 2D inverse FFT, normalized so that forward followed by inverse is
/// the identity.
pub fn fft2_inverse(data: &mut [C64], n: usize) {
    let (_, inv) = plans(n);
    for row in data.chunks_exact_mut(n) {
        inv.process(row);
    }
    transpose(data, n);
    for row in data.chunks_exact_mut(n) {
        inv.process(row);
    }
    transpose(data, n);
    let scale = 1.0 / (n * n) as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// Derivative symbol along one axis for total order `order`: `(i 2 pi k)^order`
/// with the Nyquist mode zeroed when `order` is odd.
fn axis_symbol(grid: &TorusGrid, j: usize, order: u32) -> C64 {
    if order == 0 {
        return C64::new(1.0, 0.0);
    }
    if grid.is_nyquist(j) && order % 2 == 1 {
        return C64::new(0.0, 0.0);
    }
    let k = grid.wavenumber(j) as f64;
    C64::new(0.0, TAU * k).powu(order)
}

/// Multiply mode (i, j) by the derivative symbol for a multi-index with
/// `order1` derivatives along axis 1 and `order2` along axis 2.
fn apply_symbol(grid: &TorusGrid, modes: &mut [C64], order1: u32, order2: u32) {
    let n = grid.n_axis();
    for i in 0..n {
        let s1 = axis_symbol(grid, i, order1);
        for j in 0..n {
            let s2 = axis_symbol(grid, j, order2);
            modes[i * n + j] *= s1 * s2;
        }
    }
}

/// Zero every mode with `max(|k1|, |k2|) > N/3` (the 2/3 dealiasing rule).
pub fn dealias_modes(grid: &TorusGrid, modes: &mut [C64]) {
    let n = grid.n_axis();
    let cutoff = (n / 3) as i64;
    for i in 0..n {
        let k1 = grid.wavenumber(i).abs();
        for j in 0..n {
            let k2 = grid.wavenumber(j).abs();
            if k1.max(k2) > cutoff {
                modes[i * n + j] = C64::new(0.0, 0.0);
            }
        }
    }
}

/// Spectral partial derivative of a complex field for a multi-index given as
/// axis labels (0-based), e.g. `&[0, 0, 1, 1]` for `d^2/dy1^2 d^2/dy2^2`.
pub fn spectral_derivative_c(f: &ComplexField, axes: &[usize]) -> ComplexField {
    let grid = f.grid;
    let order1 = axes.iter().filter(|&&a| a == 0).count() as u32;
    let order2 = axes.iter().filter(|&&a| a == 1).count() as u32;
    assert_eq!(order1 as usize + order2 as usize, axes.len(), "axes must be 0 or 1");
    let mut buf = f.values.clone();
    fft2_forward(&mut buf, grid.n_axis());
    apply_symbol(&grid, &mut buf, order1, order2);
    fft2_inverse(&mut buf, grid.n_axis());
    ComplexField { grid, values: buf }
}

/// Spectral partial derivative of a real field; the (roundoff) imaginary part
/// is discarded.
pub fn spectral_derivative(f: &ScalarField, axes: &[usize]) -> ScalarField {
    spectral_derivative_c(&f.to_complex(), axes).real_part()
}

/// Double divergence `sum_{a,b} d_a d_b A^{ab}` of a complex symmetric matrix
/// field, returned as a complex field. Computed in a single mode-space pass;
/// with the Nyquist convention above, the zero mode of the result is exactly
/// zero.
pub fn double_divergence(a: &MatrixField) -> ComplexField {
    double_divergence_opt(a, false)
}

/// Double divergence with optional 2/3-rule dealiasing of the input modes.
pub fn double_divergence_opt(a: &MatrixField, dealias: bool) -> ComplexField {
    let grid = a.grid;
    let n = grid.n_axis();
    let mut b11 = a.m11.clone();
    let mut b12 = a.m12.clone();
    let mut b22 = a.m22.clone();
    fft2_forward(&mut b11, n);
    fft2_forward(&mut b12, n);
    fft2_forward(&mut b22, n);
    if dealias {
        dealias_modes(&grid, &mut b11);
        dealias_modes(&grid, &mut b12);
        dealias_modes(&grid, &mut b22);
    }
    let mut out = vec![C64::new(0.0, 0.0); grid.nodes()];
    for i in 0..n {
        let s1 = axis_symbol(&grid, i, 1);
        let s11 = axis_symbol(&grid, i, 2);
        for j in 0..n {
            let s2 = axis_symbol(&grid, j, 1);
            let s22 = axis_symbol(&grid, j, 2);
            let idx = i * n + j;
            out[idx] = s11 * b11[idx] + 2.0 * s1 * s2 * b12[idx] + s22 * b22[idx];
        }
    }
    fft2_inverse(&mut out, n);
    ComplexField { grid, values: out }
}

/// Hessian `G = 1 + D^2 phi` of a symplectic potential, with positive
/// definiteness verified at every node.
pub fn hessian(u: &SymplecticPotential) -> Result<RealSymField> {
    let g = hessian_unchecked(u);
    for idx in 0..g.grid.nodes() {
        let det = g.a11[idx] * g.a22[idx] - g.a12[idx] * g.a12[idx];
        if !(g.a11[idx] > 0.0 && det > 0.0) {
            return Err(FieldError::NotConvex { node: idx, y: g.grid.y(idx) });
        }
    }
    Ok(g)
}

/// Hessian without the convexity check (used by line searches that treat
/// failure as a rejected step).
pub fn hessian_unchecked(u: &SymplecticPotential) -> RealSymField {
    let mut out = hessian_of_field(&u.phi);
    for idx in 0..out.grid.nodes() {
        out.a11[idx] += 1.0;
        out.a22[idx] += 1.0;
    }
    out
}

/// Hessian `D^2 psi` of a plain periodic function (no identity added).
pub fn hessian_of_field(psi: &ScalarField) -> RealSymField {
    let grid = psi.grid;
    let n = grid.n_axis();
    let mut modes = psi.to_complex().values;
    fft2_forward(&mut modes, n);
    let mut d11 = modes.clone();
    let mut d12 = modes.clone();
    let mut d22 = modes;
    apply_symbol(&grid, &mut d11, 2, 0);
    apply_symbol(&grid, &mut d12, 1, 1);
    apply_symbol(&grid, &mut d22, 0, 2);
    fft2_inverse(&mut d11, n);
    fft2_inverse(&mut d12, n);
    fft2_inverse(&mut d22, n);
    let mut out = RealSymField::zeros(grid);
    for idx in 0..grid.nodes() {
        out.a11[idx] = d11[idx].re;
        out.a12[idx] = d12[idx].re;
        out.a22[idx] = d22[idx].re;
    }
    out
}

/// Admissibility survey of a pair `(u, xi)`.
#[derive(Clone, Copy, Debug)]
pub struct AdmissibilityReport {
    /// Max over nodes of the largest eigenvalue of `xi G xibar G`.
    pub spec_rad_max: f64,
    /// Max over nodes of `Tr(xi G xibar G)` (the squared pointwise norm).
    pub trace_norm_max: f64,
}

/// Max spectral radius and max trace norm of `xi G xibar G` over the grid.
pub fn spec_rad_max(u: &SymplecticPotential, xi: &MatrixField) -> Result<AdmissibilityReport> {
    let g = hessian(u)?;
    Ok(spec_rad_max_with_hessian(&g, xi))
}

pub fn spec_rad_max_with_hessian(g: &RealSymField, xi: &MatrixField) -> AdmissibilityReport {
    let mut rad = 0.0_f64;
    let mut tr = 0.0_f64;
    for idx in 0..g.grid.nodes() {
        let (lo, hi) = matfun::delta2(
            g.a11[idx],
            g.a12[idx],
            g.a22[idx],
            xi.m11[idx],
            xi.m12[idx],
            xi.m22[idx],
        );
        rad = rad.max(hi);
        tr = tr.max(lo + hi);
    }
    AdmissibilityReport { spec_rad_max: rad, trace_norm_max: tr }
}

/// Hessian of the potential at one node as a checked `PosDefR`.
pub fn node_metric(g: &RealSymField, idx: usize) -> matfun::Result<PosDefR> {
    PosDefR::sym2(g.a11[idx], g.a12[idx], g.a22[idx])
}

// ---------------------------------------------------------------------------
// File formats
// ---------------------------------------------------------------------------

pub const FILE_MAGIC: &[u8; 4] = b"HCSK";
pub const FILE_VERSION: u32 = 1;
pub const KIND_SCALAR_REAL: u32 = 0;
pub const KIND_MATRIX_COMPLEX: u32 = 1;

fn write_header(w: &mut impl Write, n_axis: u32, kind: u32) -> Result<()> {
    w.write_all(FILE_MAGIC)?;
    w.write_all(&FILE_VERSION.to_le_bytes())?;
    w.write_all(&n_axis.to_le_bytes())?;
    w.write_all(&2u32.to_le_bytes())?;
    w.write_all(&kind.to_le_bytes())?;
    Ok(())
}

fn read_header(r: &mut impl Read) -> Result<(u32, u32)> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != FILE_MAGIC {
        return Err(FieldError::BadFile("bad magic".into()));
    }
    let mut u32buf = [0u8; 4];
    let mut next = |r: &mut dyn Read| -> Result<u32> {
        r.read_exact(&mut u32buf)?;
        Ok(u32::from_le_bytes(u32buf))
    };
    let version = next(r)?;
    if version != FILE_VERSION {
        return Err(FieldError::BadFile(format!("unsupported version {version}")));
    }
    let n_axis = next(r)?;
    let dim = next(r)?;
    if dim != 2 {
        return Err(FieldError::BadFile(format!("unsupported dimension {dim}")));
    }
    let kind = next(r)?;
    Ok((n_axis, kind))
}

/// Write a real scalar field: header then float64 little-endian payload in
/// row-major node order.
pub fn write_scalar(w: &mut impl Write, f: &ScalarField) -> Result<()> {
    write_header(w, f.grid.n_axis() as u32, KIND_SCALAR_REAL)?;
    for v in &f.values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_scalar(r: &mut impl Read) -> Result<ScalarField> {
    let (n_axis, kind) = read_header(r)?;
    if kind != KIND_SCALAR_REAL {
        return Err(FieldError::BadFile(format!("expected scalar field, kind {kind}")));
    }
    let grid = TorusGrid::new(n_axis as usize)?;
    let mut values = vec![0.0; grid.nodes()];
    let mut buf = [0u8; 8];
    for v in values.iter_mut() {
        r.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    Ok(ScalarField { grid, values })
}

/// Write a complex symmetric matrix field: per node all four entries in
/// (a, b) lexicographic order, real before imaginary.
pub fn write_matrix(w: &mut impl Write, f: &MatrixField) -> Result<()> {
    write_header(w, f.grid.n_axis() as u32, KIND_MATRIX_COMPLEX)?;
    for idx in 0..f.grid.nodes() {
        for z in [f.m11[idx], f.m12[idx], f.m12[idx], f.m22[idx]] {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_matrix(r: &mut impl Read) -> Result<MatrixField> {
    let (n_axis, kind) = read_header(r)?;
    if kind != KIND_MATRIX_COMPLEX {
        return Err(FieldError::BadFile(format!("expected matrix field, kind {kind}")));
    }
    let grid = TorusGrid::new(n_axis as usize)?;
    let mut out = MatrixField::zeros(grid);
    let mut buf = [0u8; 8];
    let mut next = |r: &mut dyn Read| -> Result<f64> {
        r.read_exact(&mut buf)?;
        Ok(f64::from_le_bytes(buf))
    };
    for idx in 0..grid.nodes() {
        let m11 = C64::new(next(r)?, next(r)?);
        let m12 = C64::new(next(r)?, next(r)?);
        let m21 = C64::new(next(r)?, next(r)?);
        let m22 = C64::new(next(r)?, next(r)?);
        if (m12 - m21).norm() > 1e-12 * (m12.norm() + m21.norm()).max(1.0) {
            return Err(FieldError::BadFile("matrix payload not symmetric".into()));
        }
        out.m11[idx] = m11;
        out.m12[idx] = m12;
        out.m22[idx] = m22;
    }
    Ok(out)
}

/// CSV export: one row per node, `y1,y2` then the values.
pub fn scalar_to_csv(f: &ScalarField, out: &mut String) {
    for idx in 0..f.grid.nodes() {
        let y = f.grid.y(idx);
        out.push_str(&format!("{},{},{:.17e}\n", y[0], y[1], f.values[idx]));
    }
}

pub fn matrix_to_csv(f: &MatrixField, out: &mut String) {
    for idx in 0..f.grid.nodes() {
        let y = f.grid.y(idx);
        out.push_str(&format!(
            "{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
            y[0],
            y[1],
            f.m11[idx].re,
            f.m11[idx].im,
            f.m12[idx].re,
            f.m12[idx].im,
            f.m22[idx].re,
            f.m22[idx].im
        ));
    }
}
