//! Delzant polygon toolkit: Guillemin potentials, the boundary measure
//! `dsigma`, the stability functional `L_C` with uniform-stability probing,
//! the Higgs boundary-condition check, and interior residual evaluation for
//! the toric system.
//!
//! A polygon is `P = {y : l^r(y) >= 0}` with `l^r(y) = <nu_r, y> + lambda_r`
//! and primitive integer inward normals `nu_r`; the Delzant condition asks
//! the two normals at every vertex to form a lattice basis. `dsigma` is the
//! Lebesgue measure of each face scaled by `|nu_r|^{-2}`, and
//! `L_C(f) = ∫_dP f dsigma - C ∫_P f dmu` with `C = dsigma(dP)/area(P)`.
//! Uniform stability is probed on finitely many convex functions, never
//! certified: a negative ratio is an instability witness, a positive
//! minimum is evidence only.

use crate::linalg::C64;
use crate::matfun::{self, PosDefR, SymMatC};
use num_integer::Integer;
use num_rational::Ratio;
use thiserror::Error;

pub type Rat = Ratio<i64>;

#[derive(Debug, Error)]
pub enum ToricError {
    #[error("polygon is not strictly convex in counterclockwise order")]
    NotConvex,
    #[error("Delzant condition fails at vertex {vertex}: normal determinant {det}")]
    NotDelzant { vertex: usize, det: i64 },
    #[error("point lies on or outside the boundary")]
    BoundaryPoint,
    #[error("probe has vanishing boundary integral")]
    DegenerateProbe,
    #[error("spectral radius >= 1 at a sample point")]
    SpectralRadiusExceeded,
    #[error("finite-difference stencil leaves the polygon; increase the margin")]
    TooCloseToBoundary,
    #[error("bad input: {0}")]
    BadInput(String),
}

pub type Result<T> = std::result::Result<T, ToricError>;

/// Face data: `l(y) = <normal, y> + offset` with a primitive integer inward
/// normal.
#[derive(Clone, Debug)]
pub struct Face {
    pub normal: [i64; 2],
    pub offset: Rat,
}

impl Face {
    pub fn ell(&self, y: [f64; 2]) -> f64 {
        self.normal[0] as f64 * y[0] + self.normal[1] as f64 * y[1] + rat_f64(self.offset)
    }

    pub fn norm_sq(&self) -> f64 {
        (self.normal[0] * self.normal[0] + self.normal[1] * self.normal[1]) as f64
    }

    /// Distance of an interior point to the face line.
    pub fn distance(&self, y: [f64; 2]) -> f64 {
        self.ell(y) / self.norm_sq().sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct DelzantPolygon {
    vertices: Vec<[Rat; 2]>,
    faces: Vec<Face>,
}

pub fn rat_f64(r: Rat) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl DelzantPolygon {
    pub fn vertices(&self) -> &[[Rat; 2]] {
        &self.vertices
    }

    pub fn vertices_f64(&self) -> Vec<[f64; 2]> {
        self.vertices.iter().map(|v| [rat_f64(v[0]), rat_f64(v[1])]).collect()
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn contains_interior(&self, y: [f64; 2]) -> bool {
        self.faces.iter().all(|f| f.ell(y) > 0.0)
    }

    /// Distance to the boundary (minimum over faces).
    pub fn boundary_distance(&self, y: [f64; 2]) -> f64 {
        self.faces.iter().map(|f| f.distance(y)).fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        let v = self.vertices_f64();
        let mut d = 0.0_f64;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max(((v[i][0] - v[j][0]).powi(2) + (v[i][1] - v[j][1]).powi(2)).sqrt());
            }
        }
        d
    }

    pub fn centroid(&self) -> [f64; 2] {
        let v = self.vertices_f64();
        let n = v.len() as f64;
        [v.iter().map(|p| p[0]).sum::<f64>() / n, v.iter().map(|p| p[1]).sum::<f64>() / n]
    }

    pub fn area(&self) -> f64 {
        let v = self.vertices_f64();
        let mut a = 0.0;
        for i in 0..v.len() {
            let j = (i + 1) % v.len();
            a += v[i][0] * v[j][1] - v[j][0] * v[i][1];
        }
        0.5 * a
    }

    /// Total boundary measure `dsigma(dP) = sum_r len(S_r) / |nu_r|^2`.
    pub fn sigma_boundary(&self) -> f64 {
        let v = self.vertices_f64();
        let mut s = 0.0;
        for (i, face) in self.faces.iter().enumerate() {
            let j = (i + 1) % v.len();
            let len = ((v[j][0] - v[i][0]).powi(2) + (v[j][1] - v[i][1]).powi(2)).sqrt();
            s += len / face.norm_sq();
        }
        s
    }

    /// `C = dsigma(dP) / dmu(P)`, the constant making `L_C` vanish on
    /// constants.
    pub fn c_constant(&self) -> f64 {
        self.sigma_boundary() / self.area()
    }

    /// Unit square `[0,1]^2`.
    pub fn unit_square() -> DelzantPolygon {
        let r = |a: i64| Rat::from_integer(a);
        build_polygon(&[[r(0), r(0)], [r(1), r(0)], [r(1), r(1)], [r(0), r(1)]]).unwrap()
    }

    /// Standard simplex with vertices (0,0), (1,0), (0,1).
    pub fn standard_simplex() -> DelzantPolygon {
        let r = |a: i64| Rat::from_integer(a);
        build_polygon(&[[r(0), r(0)], [r(1), r(0)], [r(0), r(1)]]).unwrap()
    }
}

fn cross(a: [Rat; 2], b: [Rat; 2]) -> Rat {
    a[0] * b[1] - a[1] * b[0]
}

/// Build a Delzant polygon from counterclockwise vertices; convexity, the
/// primitive-normal construction, and the vertex lattice-basis condition are
/// all verified in exact rational arithmetic.
pub fn build_polygon(vertices: &[[Rat; 2]]) -> Result<DelzantPolygon> {
    let n = vertices.len();
    if n < 3 {
        return Err(ToricError::BadInput("need at least 3 vertices".into()));
    }
    // Strict convexity in CCW order.
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let c = vertices[(i + 2) % n];
        let e1 = [b[0] - a[0], b[1] - a[1]];
        let e2 = [c[0] - b[0], c[1] - b[1]];
        if cross(e1, e2) <= Rat::from_integer(0) {
            return Err(ToricError::NotConvex);
        }
    }
    // Primitive integer inward normals: rotate the edge direction by +90
    // degrees (CCW interior lies to the left of each edge).
    let mut faces = Vec::with_capacity(n);
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        let d = [b[0] - a[0], b[1] - a[1]];
        let scale = d[0].denom().lcm(d[1].denom());
        let dx = (d[0] * scale).to_integer();
        let dy = (d[1] * scale).to_integer();
        let g = dx.gcd(&dy);
        let (dx, dy) = (dx / g, dy / g);
        let normal = [-dy, dx];
        let offset = -(Rat::from_integer(normal[0]) * a[0] + Rat::from_integer(normal[1]) * a[1]);
        faces.push(Face { normal, offset });
    }
    // Delzant condition: the normals of the two edges meeting at each vertex
    // form a basis of Z^2.
    for i in 0..n {
        let prev = &faces[(i + n - 1) % n];
        let cur = &faces[i];
        let det = prev.normal[0] * cur.normal[1] - prev.normal[1] * cur.normal[0];
        if det.abs() != 1 {
            return Err(ToricError::NotDelzant { vertex: i, det: det.abs() });
        }
    }
    Ok(DelzantPolygon { vertices: vertices.to_vec(), faces })
}

/// Parse a polygon file: one vertex per line, two exact rationals `p/q` (or
/// integers), `#` comments allowed.
pub fn parse_polygon_text(text: &str) -> Result<Vec<[Rat; 2]>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 2 {
            return Err(ToricError::BadInput(format!(
                "line {}: expected two rationals",
                lineno + 1
            )));
        }
        let parse = |s: &str| -> Result<Rat> {
            let mut it = s.splitn(2, '/');
            let p: i64 = it
                .next()
                .unwrap()
                .parse()
                .map_err(|_| ToricError::BadInput(format!("bad rational {s}")))?;
            match it.next() {
                None => Ok(Rat::from_integer(p)),
                Some(q) => {
                    let q: i64 =
                        q.parse().map_err(|_| ToricError::BadInput(format!("bad rational {s}")))?;
                    if q == 0 {
                        return Err(ToricError::BadInput(format!("zero denominator in {s}")));
                    }
                    Ok(Rat::new(p, q))
                }
            }
        };
        out.push([parse(parts[0])?, parse(parts[1])?]);
    }
    Ok(out)
}

/// Guillemin potential `u_P = sum_r l^r log l^r` and its Hessian
/// `sum_r nu_r nu_r^T / l^r` at an interior point.
pub fn guillemin(p: &DelzantPolygon, y: [f64; 2]) -> Result<(f64, PosDefR)> {
    let mut u = 0.0;
    let mut h = [0.0_f64; 3];
    for face in p.faces() {
        let l = face.ell(y);
        if l <= 0.0 {
            return Err(ToricError::BoundaryPoint);
        }
        u += l * l.ln();
        let (n1, n2) = (face.normal[0] as f64, face.normal[1] as f64);
        h[0] += n1 * n1 / l;
        h[1] += n1 * n2 / l;
        h[2] += n2 * n2 / l;
    }
    let g = PosDefR::sym2(h[0], h[1], h[2])
        .map_err(|_| ToricError::BadInput("Guillemin Hessian not positive definite".into()))?;
    Ok((u, g))
}

/// Guillemin Hessian alone, as a plain symmetric triple.
pub fn guillemin_hessian(p: &DelzantPolygon, y: [f64; 2]) -> Result<[f64; 3]> {
    let (_, g) = guillemin(p, y)?;
    Ok([g.mat()[(0, 0)], g.mat()[(0, 1)], g.mat()[(1, 1)]])
}

// ---------------------------------------------------------------------------
// Probes and the stability functional
// ---------------------------------------------------------------------------

/// Affine function `a . y + b`.
#[derive(Clone, Debug)]
pub struct Affine {
    pub grad: [f64; 2],
    pub offset: f64,
}

impl Affine {
    pub fn eval(&self, y: [f64; 2]) -> f64 {
        self.grad[0] * y[0] + self.grad[1] * y[1] + self.offset
    }
}

/// Probe functions for the stability functional: affine, piecewise-linear
/// convex (max of affine pieces), or quadratic.
#[derive(Clone, Debug)]
pub enum ProbeFunction {
    Affine(Affine),
    PLConvex { pieces: Vec<Affine> },
    Quadratic { q: [f64; 3], grad: [f64; 2], offset: f64 },
}

impl ProbeFunction {
    pub fn eval(&self, y: [f64; 2]) -> f64 {
        match self {
            ProbeFunction::Affine(a) => a.eval(y),
            ProbeFunction::PLConvex { pieces } => {
                pieces.iter().map(|a| a.eval(y)).fold(f64::NEG_INFINITY, f64::max)
            }
            ProbeFunction::Quadratic { q, grad, offset } => {
                q[0] * y[0] * y[0]
                    + 2.0 * q[1] * y[0] * y[1]
                    + q[2] * y[1] * y[1]
                    + grad[0] * y[0]
                    + grad[1] * y[1]
                    + offset
            }
        }
    }

    /// Hessian where defined (almost everywhere for the PL family).
    pub fn hessian(&self) -> [f64; 3] {
        match self {
            ProbeFunction::Quadratic { q, .. } => [2.0 * q[0], 2.0 * q[1], 2.0 * q[2]],
            _ => [0.0; 3],
        }
    }

    /// Normalize to `f(p0) = 0`, `df(p0) = 0` for smooth probes; PL probes
    /// are shifted to vanish at `p0` (their subgradient contains 0 when the
    /// pieces bracket the point).
    pub fn normalized_at(&self, p0: [f64; 2]) -> ProbeFunction {
        match self {
            ProbeFunction::Affine(a) => {
                // Affine with f(p0) = 0, df(p0) = 0 is identically zero.
                let _ = a;
                ProbeFunction::Affine(Affine { grad: [0.0, 0.0], offset: 0.0 })
            }
            ProbeFunction::PLConvex { pieces } => {
                let v = self.eval(p0);
                ProbeFunction::PLConvex {
                    pieces: pieces
                        .iter()
                        .map(|a| Affine { grad: a.grad, offset: a.offset - v })
                        .collect(),
                }
            }
            ProbeFunction::Quadratic { q, grad, offset } => {
                // Subtract the tangent plane at p0.
                let g0 = [
                    2.0 * q[0] * p0[0] + 2.0 * q[1] * p0[1] + grad[0],
                    2.0 * q[1] * p0[0] + 2.0 * q[2] * p0[1] + grad[1],
                ];
                let v0 = self.eval(p0);
                let new_grad = [grad[0] - g0[0], grad[1] - g0[1]];
                let new_offset = offset - v0 + g0[0] * p0[0] + g0[1] * p0[1];
                ProbeFunction::Quadratic { q: *q, grad: new_grad, offset: new_offset }
            }
        }
    }
}

const GAUSS8_X: [f64; 8] = [
    -0.960289856497536,
    -0.796666477413627,
    -0.525532409916329,
    -0.183434642495650,
    0.183434642495650,
    0.525532409916329,
    0.796666477413627,
    0.960289856497536,
];
const GAUSS8_W: [f64; 8] = [
    0.101228536290376,
    0.222381034453374,
    0.313706645877887,
    0.362683783378362,
    0.362683783378362,
    0.313706645877887,
    0.222381034453374,
    0.101228536290376,
];

/// Degree-4 symmetric triangle rule (6 points, barycentric).
const TRI_PTS: [([f64; 3], f64); 6] = [
    ([0.108103018168070, 0.445948490915965, 0.445948490915965], 0.223381589678011),
    ([0.445948490915965, 0.108103018168070, 0.445948490915965], 0.223381589678011),
    ([0.445948490915965, 0.445948490915965, 0.108103018168070], 0.223381589678011),
    ([0.816847572980459, 0.091576213509771, 0.091576213509771], 0.109951743655322),
    ([0.091576213509771, 0.816847572980459, 0.091576213509771], 0.109951743655322),
    ([0.091576213509771, 0.091576213509771, 0.816847572980459], 0.109951743655322),
];

/// Boundary integral `∫_dP f dsigma` by 8-point Gauss quadrature per edge.
pub fn boundary_integral(p: &DelzantPolygon, f: &dyn Fn([f64; 2]) -> f64) -> f64 {
    let v = p.vertices_f64();
    let mut total = 0.0;
    for (i, face) in p.faces().iter().enumerate() {
        let a = v[i];
        let b = v[(i + 1) % v.len()];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        let w = 1.0 / face.norm_sq();
        let mut acc = 0.0;
        for (x, wq) in GAUSS8_X.iter().zip(GAUSS8_W.iter()) {
            let t = 0.5 * (x + 1.0);
            let pt = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            acc += wq * f(pt);
        }
        total += 0.5 * len * w * acc;
    }
    total
}

fn triangle_quadrature(tri: &[[f64; 2]; 3], f: &dyn Fn([f64; 2]) -> f64) -> f64 {
    let area = 0.5
        * ((tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1])
            - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]))
            .abs();
    let mut acc = 0.0;
    for (bary, w) in TRI_PTS.iter() {
        let pt = [
            bary[0] * tri[0][0] + bary[1] * tri[1][0] + bary[2] * tri[2][0],
            bary[0] * tri[0][1] + bary[1] * tri[1][1] + bary[2] * tri[2][1],
        ];
        acc += w * f(pt);
    }
    area * acc
}

/// Interior integral `∫_P f dmu` by fan triangulation with a degree-4 rule,
/// optionally refined (each triangle split 4-ways `refine` times).
pub fn interior_integral(p: &DelzantPolygon, f: &dyn Fn([f64; 2]) -> f64, refine: usize) -> f64 {
    let v = p.vertices_f64();
    let c = p.centroid();
    let mut total = 0.0;
    for i in 0..v.len() {
        let tri = [c, v[i], v[(i + 1) % v.len()]];
        total += refined_triangle(&tri, f, refine);
    }
    total
}

fn refined_triangle(tri: &[[f64; 2]; 3], f: &dyn Fn([f64; 2]) -> f64, refine: usize) -> f64 {
    if refine == 0 {
        return triangle_quadrature(tri, f);
    }
    let mid = |a: [f64; 2], b: [f64; 2]| [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
    let (m01, m12, m20) = (mid(tri[0], tri[1]), mid(tri[1], tri[2]), mid(tri[2], tri[0]));
    refined_triangle(&[tri[0], m01, m20], f, refine - 1)
        + refined_triangle(&[m01, tri[1], m12], f, refine - 1)
        + refined_triangle(&[m20, m12, tri[2]], f, refine - 1)
        + refined_triangle(&[m01, m12, m20], f, refine - 1)
}

/// The stability functional `L_C(f) = ∫_dP f dsigma - C ∫_P f dmu` with
/// `C = dsigma(dP)/dmu(P)`. Exact for affine and quadratic probes; the PL
/// family is resolved by the same fixed quadrature.
pub fn l_functional(p: &DelzantPolygon, f: &ProbeFunction) -> f64 {
    let c = p.c_constant();
    let bd = boundary_integral(p, &|y| f.eval(y));
    let refine = match f {
        ProbeFunction::PLConvex { .. } => 4,
        _ => 0,
    };
    let int = interior_integral(p, &|y| f.eval(y), refine);
    bd - c * int
}

#[derive(Clone, Debug)]
pub struct ProbeRow {
    pub l_c: f64,
    pub boundary: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug)]
pub struct StabilityReport {
    /// `min_f L_C(f) / ∫_dP f dsigma` over the probe set. Positive values
    /// are evidence of uniform stability (finitely many probes prove
    /// nothing); a negative value certifies instability.
    pub lambda_hat: f64,
    pub worst: usize,
    pub rows: Vec<ProbeRow>,
}

/// Probe the uniform stability constant on a finite family of normalized
/// convex functions.
pub fn stability_probe(p: &DelzantPolygon, probes: &[ProbeFunction]) -> Result<StabilityReport> {
    if probes.is_empty() {
        return Err(ToricError::BadInput("empty probe set".into()));
    }
    let mut rows = Vec::with_capacity(probes.len());
    let mut lambda_hat = f64::INFINITY;
    let mut worst = 0;
    for (i, f) in probes.iter().enumerate() {
        let l_c = l_functional(p, f);
        let boundary = boundary_integral(p, &|y| f.eval(y));
        if boundary.abs() <= 1e-14 {
            return Err(ToricError::DegenerateProbe);
        }
        let ratio = l_c / boundary;
        if ratio < lambda_hat {
            lambda_hat = ratio;
            worst = i;
        }
        rows.push(ProbeRow { l_c, boundary, ratio });
    }
    Ok(StabilityReport { lambda_hat, worst, rows })
}

// ---------------------------------------------------------------------------
// Higgs boundary condition
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct BoundaryCheckReport {
    pub pass: bool,
    /// Per margin: sup over the shell of the Frobenius norm of
    /// `G_P xi G_P`.
    pub shell_sups: Vec<f64>,
    pub growth_ratios: Vec<f64>,
    pub divergent_face: Option<usize>,
}

/// Check the Higgs boundary condition: `xi` extends to the toric manifold
/// iff `G_P xi G_P` stays bounded toward the boundary. Samples shells at
/// perpendicular distances `margins[i] * diam(P)` from each face and passes
/// iff successive shell sups grow by at most 10% as the margin shrinks.
pub fn xi_boundary_check(
    p: &DelzantPolygon,
    xi: &dyn Fn([f64; 2]) -> SymMatC,
    margins: &[f64],
) -> Result<BoundaryCheckReport> {
    if margins.len() < 2 || margins.windows(2).any(|w| w[1] >= w[0]) {
        return Err(ToricError::BadInput("margins must be a decreasing list".into()));
    }
    let diam = p.diameter();
    let v = p.vertices_f64();
    let nf = p.faces().len();
    let samples_per_face = 17;
    let mut shell_sups = Vec::with_capacity(margins.len());
    let mut face_sups: Vec<Vec<f64>> = Vec::with_capacity(margins.len());
    for &m in margins {
        let d = m * diam;
        let mut per_face = vec![0.0_f64; nf];
        for (i, face) in p.faces().iter().enumerate() {
            let a = v[i];
            let b = v[(i + 1) % v.len()];
            let nn = face.norm_sq().sqrt();
            let nu_hat = [face.normal[0] as f64 / nn, face.normal[1] as f64 / nn];
            for s in 0..samples_per_face {
                let t = (s as f64 + 0.5) / samples_per_face as f64;
                let pt = [
                    a[0] + t * (b[0] - a[0]) + d * nu_hat[0],
                    a[1] + t * (b[1] - a[1]) + d * nu_hat[1],
                ];
                // Keep only points genuinely on this face's shell.
                if p.boundary_distance(pt) < 0.999 * d {
                    continue;
                }
                let (_, gp) = guillemin(p, pt)?;
                let x = xi(pt);
                let gc = gp.mat().to_complex();
                let val = gc.matmul(x.mat()).matmul(&gc).frobenius();
                per_face[i] = per_face[i].max(val);
            }
        }
        shell_sups.push(per_face.iter().cloned().fold(0.0_f64, f64::max));
        face_sups.push(per_face);
    }
    let mut pass = true;
    let mut growth_ratios = Vec::new();
    let mut divergent_face = None;
    for w in 0..margins.len() - 1 {
        let prev = shell_sups[w];
        let next = shell_sups[w + 1];
        let ratio = if prev <= 1e-300 {
            if next <= 1e-12 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            next / prev
        };
        growth_ratios.push(ratio);
        if ratio > 1.1 && pass {
            pass = false;
            // Face with the largest growth on the first failing transition.
            let mut best = 0;
            let mut best_ratio = 0.0;
            for i in 0..nf {
                let r = if face_sups[w][i] <= 1e-300 {
                    0.0
                } else {
                    face_sups[w + 1][i] / face_sups[w][i]
                };
                if r > best_ratio {
                    best_ratio = r;
                    best = i;
                }
            }
            divergent_face = Some(best);
        }
    }
    Ok(BoundaryCheckReport { pass, shell_sups, growth_ratios, divergent_face })
}

// ---------------------------------------------------------------------------
// Interior residual
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SampledField {
    pub points: Vec<[f64; 2]>,
    pub values: Vec<f64>,
    pub imag_sup: f64,
}

fn flux_at(
    g_fn: &dyn Fn([f64; 2]) -> [f64; 3],
    xi_fn: &dyn Fn([f64; 2]) -> SymMatC,
    y: [f64; 2],
) -> Result<[C64; 3]> {
    let g = g_fn(y);
    let gp = PosDefR::sym2(g[0], g[1], g[2])
        .map_err(|_| ToricError::BadInput("potential Hessian not positive definite".into()))?;
    let xi = xi_fn(y);
    let s = matfun::sqrt_one_minus(&gp, &xi).map_err(|e| match e {
        matfun::MatFunError::SpectralRadiusExceeded(_) => ToricError::SpectralRadiusExceeded,
        _ => ToricError::BadInput("spectral factorization failed".into()),
    })?;
    let v = s.matmul(&gp.inverse().to_complex());
    Ok([v[(0, 0)], 0.5 * (v[(0, 1)] + v[(1, 0)]), v[(1, 1)]])
}

/// Evaluate the interior residual
/// `((1 - xi G xibar G)^{1/2} G^{-1})^{ab}_{,ab} + C` on a lattice of points
/// with boundary distance at least `margin`, by fourth-order centered finite
/// differences with step `margin / 8`.
pub fn toric_residual_interior(
    p: &DelzantPolygon,
    g_fn: &dyn Fn([f64; 2]) -> [f64; 3],
    xi_fn: &dyn Fn([f64; 2]) -> SymMatC,
    c_const: f64,
    margin: f64,
) -> Result<SampledField> {
    if margin <= 0.0 {
        return Err(ToricError::BadInput("margin must be positive".into()));
    }
    let h = margin / 8.0;
    let v = p.vertices_f64();
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for pt in &v {
        xmin = xmin.min(pt[0]);
        xmax = xmax.max(pt[0]);
        ymin = ymin.min(pt[1]);
        ymax = ymax.max(pt[1]);
    }
    let step = (margin * 0.5).max(1e-6);
    let mut points = Vec::new();
    let mut x = xmin + margin;
    while x <= xmax - margin + 1e-12 {
        let mut y = ymin + margin;
        while y <= ymax - margin + 1e-12 {
            if p.boundary_distance([x, y]) >= margin {
                points.push([x, y]);
            }
            y += step;
        }
        x += step;
    }
    if points.is_empty() {
        return Err(ToricError::TooCloseToBoundary);
    }

    // Fourth-order stencils: d^2 (one axis) and the tensor-product mixed
    // derivative from the five-point first-derivative weights.
    let w2 = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
    let w1 = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, 1.0 / 12.0];
    // w1 sign convention: f'(x) ~ (f(x-2h) - 8 f(x-h) + 8 f(x+h) - f(x+2h)) / 12h
    let w1 = [w1[0], w1[1], w1[2], -w1[1], -w1[0]];

    let mut values = Vec::with_capacity(points.len());
    let mut imag_sup = 0.0_f64;
    for &pt in &points {
        // Every stencil point must stay strictly inside the polygon.
        for di in -2i32..=2 {
            for dj in -2i32..=2 {
                let q = [pt[0] + di as f64 * h, pt[1] + dj as f64 * h];
                if !p.contains_interior(q) {
                    return Err(ToricError::TooCloseToBoundary);
                }
            }
        }
        let mut d11 = C64::new(0.0, 0.0);
        let mut d22 = C64::new(0.0, 0.0);
        let mut d12 = C64::new(0.0, 0.0);
        for (s, offs) in (-2i32..=2).enumerate() {
            let f1 = flux_at(g_fn, xi_fn, [pt[0] + offs as f64 * h, pt[1]])?;
            d11 += w2[s] * f1[0];
            let f2 = flux_at(g_fn, xi_fn, [pt[0], pt[1] + offs as f64 * h])?;
            d22 += w2[s] * f2[2];
            if w1[s] != 0.0 {
                for (t, offt) in (-2i32..=2).enumerate() {
                    if w1[t] == 0.0 {
                        continue;
                    }
                    let f12 = flux_at(
                        g_fn,
                        xi_fn,
                        [pt[0] + offs as f64 * h, pt[1] + offt as f64 * h],
                    )?;
                    d12 += w1[s] * w1[t] * f12[1];
                }
            }
        }
        let val = (d11 + d22) / (h * h) + 2.0 * d12 / (h * h);
        imag_sup = imag_sup.max(val.im.abs());
        values.push(val.re + c_const);
    }
    Ok(SampledField { points, values, imag_sup })
}

/// Hessian closure for the canonical potential `u_P` plus a quadratic
/// correction `h(y) = 1/2 y^T A y`.
pub fn guillemin_plus_quadratic(
    p: &DelzantPolygon,
    a: [f64; 3],
) -> impl Fn([f64; 2]) -> [f64; 3] + '_ {
    move |y| {
        let g = guillemin_hessian(p, y).expect("interior point");
        [g[0] + a[0], g[1] + a[1], g[2] + a[2]]
    }
}

/// Hessian closure of the flat potential `|y|^2 / 2`.
pub fn flat_hessian() -> impl Fn([f64; 2]) -> [f64; 3] {
    |_| [1.0, 0.0, 1.0]
}

// ---------------------------------------------------------------------------
// Integrability orthogonality
// ---------------------------------------------------------------------------

/// `| ∫_P xi^{ij} f_{,ij} dmu |` by interior quadrature over a slightly
/// shrunk polygon (margin `delta`) on a refined triangulation. For a Higgs
/// field solving the complex moment map this vanishes on every smooth probe.
pub fn toric_integrability_orthogonality(
    p: &DelzantPolygon,
    xi_fn: &dyn Fn([f64; 2]) -> SymMatC,
    probe: &ProbeFunction,
    delta: f64,
    refine: usize,
) -> Result<f64> {
    let hess = probe.hessian();
    if hess.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let shrunk = shrink_vertices(p, delta)?;
    let c = [
        shrunk.iter().map(|q| q[0]).sum::<f64>() / shrunk.len() as f64,
        shrunk.iter().map(|q| q[1]).sum::<f64>() / shrunk.len() as f64,
    ];
    let integrand_re = |y: [f64; 2]| -> f64 {
        let x = xi_fn(y);
        (x[(0, 0)] * hess[0] + x[(0, 1)] * 2.0 * hess[1] + x[(1, 1)] * hess[2]).re
    };
    let integrand_im = |y: [f64; 2]| -> f64 {
        let x = xi_fn(y);
        (x[(0, 0)] * hess[0] + x[(0, 1)] * 2.0 * hess[1] + x[(1, 1)] * hess[2]).im
    };
    let mut re = 0.0;
    let mut im = 0.0;
    for i in 0..shrunk.len() {
        let tri = [c, shrunk[i], shrunk[(i + 1) % shrunk.len()]];
        re += refined_triangle(&tri, &integrand_re, refine);
        im += refined_triangle(&tri, &integrand_im, refine);
    }
    Ok((re * re + im * im).sqrt())
}

/// Vertices of the polygon offset inward by `delta` (each face moved along
/// its unit normal).
fn shrink_vertices(p: &DelzantPolygon, delta: f64) -> Result<Vec<[f64; 2]>> {
    let faces = p.faces();
    let n = faces.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let f1 = &faces[(i + n - 1) % n];
        let f2 = &faces[i];
        // Solve <nu, y> + lambda - delta |nu| = 0 for both faces.
        let (a1, b1) = (f1.normal[0] as f64, f1.normal[1] as f64);
        let (a2, b2) = (f2.normal[0] as f64, f2.normal[1] as f64);
        let c1 = -(rat_f64(f1.offset) - delta * f1.norm_sq().sqrt());
        let c2 = -(rat_f64(f2.offset) - delta * f2.norm_sq().sqrt());
        let det = a1 * b2 - a2 * b1;
        if det.abs() < 1e-14 {
            return Err(ToricError::BadInput("degenerate shrink".into()));
        }
        out.push([(c1 * b2 - c2 * b1) / det, (a1 * c2 - a2 * c1) / det]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(a: i64) -> Rat {
        Rat::from_integer(a)
    }

    fn c64(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn square_faces() {
        let p = DelzantPolygon::unit_square();
        assert_eq!(p.faces().len(), 4);
        // l = y1, y2, 1 - y1, 1 - y2 in some order.
        let probe = [0.3, 0.7];
        let mut ells: Vec<f64> = p.faces().iter().map(|f| f.ell(probe)).collect();
        ells.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut expect = [0.3, 0.7, 1.0 - 0.3, 1.0 - 0.7];
        expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (a, b) in ells.iter().zip(expect.iter()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((p.area() - 1.0).abs() < 1e-15);
        assert!((p.sigma_boundary() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn simplex_accepted() {
        assert!(build_polygon(&[[rat(0), rat(0)], [rat(1), rat(0)], [rat(0), rat(1)]]).is_ok());
    }

    #[test]
    fn non_delzant_triangle() {
        match build_polygon(&[[rat(0), rat(0)], [rat(1), rat(0)], [rat(0), rat(2)]]) {
            Err(ToricError::NotDelzant { vertex, det }) => {
                assert_eq!(det, 2);
                // The failing vertex is (1, 0).
                assert_eq!(vertex, 1);
            }
            other => panic!("expected NotDelzant, got {other:?}"),
        }
    }

    #[test]
    fn clockwise_or_nonconvex_rejected() {
        assert!(matches!(
            build_polygon(&[[rat(0), rat(0)], [rat(0), rat(1)], [rat(1), rat(0)]]),
            Err(ToricError::NotConvex)
        ));
        assert!(matches!(
            build_polygon(&[
                [rat(0), rat(0)],
                [rat(1), rat(0)],
                [rat(2), rat(0)],
                [rat(0), rat(1)]
            ]),
            Err(ToricError::NotConvex)
        ));
    }

    #[test]
    fn polygon_text_roundtrip() {
        let text = "# unit square\n0 0\n1/1 0\n1 1\n0/1 1\n";
        let v = parse_polygon_text(text).unwrap();
        assert_eq!(v.len(), 4);
        assert!(build_polygon(&v).is_ok());
        assert!(parse_polygon_text("1/0 2").is_err());
    }

    #[test]
    fn guillemin_square_center() {
        let p = DelzantPolygon::unit_square();
        let (u, g) = guillemin(&p, [0.5, 0.5]).unwrap();
        assert!((u - (-2.0 * 2.0_f64.ln())).abs() < 1e-12);
        assert!((g.mat()[(0, 0)] - 4.0).abs() < 1e-12);
        assert!(g.mat()[(0, 1)].abs() < 1e-12);
        assert!((g.mat()[(1, 1)] - 4.0).abs() < 1e-12);
        assert!(matches!(guillemin(&p, [0.0, 0.5]), Err(ToricError::BoundaryPoint)));
    }

    #[test]
    fn guillemin_hessian_matches_finite_differences() {
        let p = DelzantPolygon::unit_square();
        let h = 1e-5;
        for &y in &[[0.3, 0.6], [0.5, 0.5], [0.15, 0.85]] {
            let g = guillemin_hessian(&p, y).unwrap();
            let up = |q: [f64; 2]| guillemin(&p, q).unwrap().0;
            let fd11 = (up([y[0] + h, y[1]]) - 2.0 * up(y) + up([y[0] - h, y[1]])) / (h * h);
            let fd22 = (up([y[0], y[1] + h]) - 2.0 * up(y) + up([y[0], y[1] - h])) / (h * h);
            let fd12 = (up([y[0] + h, y[1] + h]) - up([y[0] + h, y[1] - h])
                - up([y[0] - h, y[1] + h])
                + up([y[0] - h, y[1] - h]))
                / (4.0 * h * h);
            assert!((g[0] - fd11).abs() < 1e-5 * g[0].abs().max(1.0));
            assert!((g[1] - fd12).abs() < 1e-5);
            assert!((g[2] - fd22).abs() < 1e-5 * g[2].abs().max(1.0));
        }
    }

    #[test]
    fn l_functional_square_values() {
        let p = DelzantPolygon::unit_square();
        // f = 1: dsigma(dP) = 4 = C * area.
        let one = ProbeFunction::Affine(Affine { grad: [0.0, 0.0], offset: 1.0 });
        assert!(l_functional(&p, &one).abs() < 1e-12);
        // f = y1: boundary 2, interior 1/2, C = 4.
        let y1 = ProbeFunction::Affine(Affine { grad: [1.0, 0.0], offset: 0.0 });
        assert!(l_functional(&p, &y1).abs() < 1e-12);
        // f = (y1 - 1/2)^2: 2/3 - 4 * 1/12 = 1/3.
        let sq = ProbeFunction::Quadratic { q: [1.0, 0.0, 0.0], grad: [-1.0, 0.0], offset: 0.25 };
        let val = l_functional(&p, &sq);
        assert!((val - 1.0 / 3.0).abs() <= 1e-10, "L_C = {val}");
        let bd = boundary_integral(&p, &|y| sq.eval(y));
        assert!((bd - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn l_functional_linear_in_probe() {
        let p = DelzantPolygon::standard_simplex();
        let f = ProbeFunction::Quadratic { q: [1.0, 0.4, 0.7], grad: [0.2, -0.3], offset: 0.1 };
        let g = ProbeFunction::Quadratic { q: [-0.5, 0.1, 0.3], grad: [1.0, 0.0], offset: -0.2 };
        let (a, b) = (1.7, -0.6);
        let combo = ProbeFunction::Quadratic {
            q: [
                a * 1.0 + b * -0.5,
                a * 0.4 + b * 0.1,
                a * 0.7 + b * 0.3,
            ],
            grad: [a * 0.2 + b * 1.0, a * -0.3 + b * 0.0],
            offset: a * 0.1 + b * -0.2,
        };
        let lhs = l_functional(&p, &combo);
        let rhs = a * l_functional(&p, &f) + b * l_functional(&p, &g);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn l_vanishes_on_affine() {
        // With the |grad l|^{-2} face weights, affine functions are
        // annihilated on polygons whose normals are all unit vectors (for
        // the square and rectangles the weights coincide with the lattice
        // measure convention).
        let rect = build_polygon(&[
            [rat(0), rat(0)],
            [rat(1), rat(0)],
            [rat(1), rat(2)],
            [rat(0), rat(2)],
        ])
        .unwrap();
        for p in [DelzantPolygon::unit_square(), rect] {
            for f in [
                ProbeFunction::Affine(Affine { grad: [1.0, 0.0], offset: 0.3 }),
                ProbeFunction::Affine(Affine { grad: [-0.4, 2.0], offset: 0.0 }),
            ] {
                assert!(l_functional(&p, &f).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn stability_probe_square() {
        let p = DelzantPolygon::unit_square();
        let probes = vec![
            ProbeFunction::Quadratic { q: [1.0, 0.0, 0.0], grad: [-1.0, 0.0], offset: 0.25 },
            ProbeFunction::Quadratic { q: [0.0, 0.0, 1.0], grad: [0.0, -1.0], offset: 0.25 },
            // |y1 - y2| as a PL-convex max, normalized at the center.
            ProbeFunction::PLConvex {
                pieces: vec![
                    Affine { grad: [1.0, -1.0], offset: 0.0 },
                    Affine { grad: [-1.0, 1.0], offset: 0.0 },
                ],
            },
        ];
        let report = stability_probe(&p, &probes).unwrap();
        assert!(report.lambda_hat > 0.0, "lambda_hat = {}", report.lambda_hat);

        // Homogeneity: ratio invariant under f -> 2f.
        let doubled = ProbeFunction::Quadratic { q: [2.0, 0.0, 0.0], grad: [-2.0, 0.0], offset: 0.5 };
        let r1 = stability_probe(&p, &probes[..1].to_vec()).unwrap();
        let r2 = stability_probe(&p, &[doubled]).unwrap();
        assert!((r1.lambda_hat - r2.lambda_hat).abs() < 1e-12);

        // Normalized affine probes collapse to zero and are degenerate.
        let aff = ProbeFunction::Affine(Affine { grad: [1.0, 2.0], offset: 0.3 })
            .normalized_at([0.5, 0.5]);
        assert!(matches!(stability_probe(&p, &[aff]), Err(ToricError::DegenerateProbe)));
    }

    #[test]
    fn boundary_check_cases() {
        let p = DelzantPolygon::unit_square();
        let margins = [0.08, 0.04, 0.02, 0.01];

        // xi = G_P^{-1} Phi G_P^{-1} for constant Phi: G_P xi G_P = Phi.
        let phi = SymMatC::sym2(c64(0.5, 0.2), c64(-0.1, 0.3), c64(0.7, 0.0));
        let xi_good = |y: [f64; 2]| -> SymMatC {
            let g = guillemin_hessian(&p, y).unwrap();
            let gp = PosDefR::sym2(g[0], g[1], g[2]).unwrap();
            let gi = gp.inverse().to_complex();
            let m = gi.matmul(phi.mat()).matmul(&gi);
            SymMatC::sym2(m[(0, 0)], 0.5 * (m[(0, 1)] + m[(1, 0)]), m[(1, 1)])
        };
        let rep = xi_boundary_check(&p, &xi_good, &margins).unwrap();
        assert!(rep.pass, "smooth case should pass: {:?}", rep.growth_ratios);

        // Constant xi != 0: entries of G_P xi G_P grow like l^{-2}.
        let xi_const = |_: [f64; 2]| SymMatC::sym2(c64(0.1, 0.0), c64(0.0, 0.0), c64(0.1, 0.0));
        let rep = xi_boundary_check(&p, &xi_const, &margins).unwrap();
        assert!(!rep.pass, "constant case should fail");
        assert!(rep.divergent_face.is_some());

        // xi = 0 passes.
        let xi_zero = |_: [f64; 2]| SymMatC::zero(2);
        let rep = xi_boundary_check(&p, &xi_zero, &margins).unwrap();
        assert!(rep.pass);
    }

    #[test]
    fn interior_residual_square_guillemin() {
        // For the unit square with u = u_P and xi = 0:
        // G^{-1} = diag(y1(1-y1), y2(1-y2)), so the residual is C - 4.
        let p = DelzantPolygon::unit_square();
        let g_fn = guillemin_plus_quadratic(&p, [0.0; 3]);
        let xi_fn = |_: [f64; 2]| SymMatC::zero(2);
        let out = toric_residual_interior(&p, &g_fn, &xi_fn, 7.0, 0.1).unwrap();
        assert!(!out.points.is_empty());
        for v in &out.values {
            assert!((v - 3.0).abs() < 1e-8, "residual {v} should be C - 4 = 3");
        }
        assert!(out.imag_sup < 1e-12);
    }

    /// Second-order 2D jets for the polynomial oracle: exact value and
    /// derivatives through rational operations.
    #[derive(Clone, Copy, Debug)]
    struct Jet {
        v: f64,
        dx: f64,
        dy: f64,
        dxx: f64,
        dxy: f64,
        dyy: f64,
    }

    impl Jet {
        fn consts(v: f64) -> Jet {
            Jet { v, dx: 0.0, dy: 0.0, dxx: 0.0, dxy: 0.0, dyy: 0.0 }
        }
        fn coord_x(v: f64) -> Jet {
            Jet { v, dx: 1.0, dy: 0.0, dxx: 0.0, dxy: 0.0, dyy: 0.0 }
        }
        fn coord_y(v: f64) -> Jet {
            Jet { v, dx: 0.0, dy: 1.0, dxx: 0.0, dxy: 0.0, dyy: 0.0 }
        }
        fn add(self, o: Jet) -> Jet {
            Jet {
                v: self.v + o.v,
                dx: self.dx + o.dx,
                dy: self.dy + o.dy,
                dxx: self.dxx + o.dxx,
                dxy: self.dxy + o.dxy,
                dyy: self.dyy + o.dyy,
            }
        }
        fn scale(self, s: f64) -> Jet {
            Jet {
                v: s * self.v,
                dx: s * self.dx,
                dy: s * self.dy,
                dxx: s * self.dxx,
                dxy: s * self.dxy,
                dyy: s * self.dyy,
            }
        }
        fn mul(self, o: Jet) -> Jet {
            Jet {
                v: self.v * o.v,
                dx: self.dx * o.v + self.v * o.dx,
                dy: self.dy * o.v + self.v * o.dy,
                dxx: self.dxx * o.v + 2.0 * self.dx * o.dx + self.v * o.dxx,
                dxy: self.dxy * o.v + self.dx * o.dy + self.dy * o.dx + self.v * o.dxy,
                dyy: self.dyy * o.v + 2.0 * self.dy * o.dy + self.v * o.dyy,
            }
        }
        fn recip(self) -> Jet {
            let a = self.v;
            Jet {
                v: 1.0 / a,
                dx: -self.dx / (a * a),
                dy: -self.dy / (a * a),
                dxx: (2.0 * self.dx * self.dx - a * self.dxx) / (a * a * a),
                dxy: (2.0 * self.dx * self.dy - a * self.dxy) / (a * a * a),
                dyy: (2.0 * self.dy * self.dy - a * self.dyy) / (a * a * a),
            }
        }
    }

    #[test]
    fn interior_residual_matches_jet_oracle() {
        // xi = 0, u = u_P + quadratic on the square: the Abreu operator
        // (G^{-1})^{ab}_{,ab} evaluated exactly by jet arithmetic.
        let p = DelzantPolygon::unit_square();
        let quad = [0.8, 0.2, 0.5];
        let g_fn = guillemin_plus_quadratic(&p, quad);
        let xi_fn = |_: [f64; 2]| SymMatC::zero(2);
        let out = toric_residual_interior(&p, &g_fn, &xi_fn, 0.0, 0.12).unwrap();

        let oracle = |y: [f64; 2]| -> f64 {
            let jx = Jet::coord_x(y[0]);
            let jy = Jet::coord_y(y[1]);
            // Square faces: y1, 1 - y1, y2, 1 - y2 with normals e1, -e1, e2, -e2.
            let one = Jet::consts(1.0);
            let l1 = jx;
            let l2 = one.add(jx.scale(-1.0));
            let l3 = jy;
            let l4 = one.add(jy.scale(-1.0));
            // G = diag-ish Guillemin Hessian + quadratic correction.
            let g11 = l1.recip().add(l2.recip()).add(Jet::consts(quad[0]));
            let g12 = Jet::consts(quad[1]);
            let g22 = l3.recip().add(l4.recip()).add(Jet::consts(quad[2]));
            // G^{-1} via the adjugate.
            let det = g11.mul(g22).add(g12.mul(g12).scale(-1.0));
            let idet = det.recip();
            let v11 = g22.mul(idet);
            let v12 = g12.mul(idet).scale(-1.0);
            let v22 = g11.mul(idet);
            v11.dxx + 2.0 * v12.dxy + v22.dyy
        };

        let mut max_err = 0.0_f64;
        for (pt, val) in out.points.iter().zip(out.values.iter()) {
            max_err = max_err.max((val - oracle(*pt)).abs());
        }
        // Fourth-order finite differences at step margin/8 resolve the
        // rational flux to a few 1e-6 here.
        assert!(max_err <= 5e-6, "jet oracle disagreement {max_err}");
    }

    #[test]
    fn interior_residual_flat_matches_periodic() {
        // Non-toric test input: u = u0 restricted, constant admissible xi.
        // All fluxes are constant, so the residual equals C; the periodic
        // evaluator gives exactly zero for C = 0.
        let p = DelzantPolygon::unit_square();
        let g_fn = flat_hessian();
        let xi = SymMatC::sym2(c64(0.2, 0.1), c64(0.05, 0.0), c64(0.1, -0.1));
        let xi_fn = move |_: [f64; 2]| xi.clone();
        let out = toric_residual_interior(&p, &g_fn, &xi_fn, 0.0, 0.1).unwrap();
        for v in &out.values {
            assert!(v.abs() <= 1e-6);
        }

        let grid = crate::torusfield::TorusGrid::new(32).unwrap();
        let u0 = crate::torusfield::SymplecticPotential::flat(grid);
        let xi_field = crate::torusfield::MatrixField::constant(
            grid,
            &SymMatC::sym2(c64(0.2, 0.1), c64(0.05, 0.0), c64(0.1, -0.1)),
        );
        let res = crate::realmm::residual_real(&u0, &xi_field, 0.0).unwrap();
        assert!(res.sup_norm() <= 1e-6);
    }

    #[test]
    fn residual_margin_guard() {
        let p = DelzantPolygon::unit_square();
        let g_fn = flat_hessian();
        let xi_fn = |_: [f64; 2]| SymMatC::zero(2);
        assert!(matches!(
            toric_residual_interior(&p, &g_fn, &xi_fn, 0.0, -1.0),
            Err(ToricError::BadInput(_))
        ));
    }

    #[test]
    fn integrability_orthogonality_cases() {
        let p = DelzantPolygon::unit_square();
        let quad_probe =
            ProbeFunction::Quadratic { q: [1.0, 0.0, 0.0], grad: [0.0, 0.0], offset: 0.0 };

        // xi = 0.
        let xi_zero = |_: [f64; 2]| SymMatC::zero(2);
        assert_eq!(
            toric_integrability_orthogonality(&p, &xi_zero, &quad_probe, 1e-9, 3).unwrap(),
            0.0
        );

        // Affine probe: Hessian vanishes.
        let affine = ProbeFunction::Affine(Affine { grad: [1.0, 2.0], offset: 0.0 });
        let xi_any = |_: [f64; 2]| SymMatC::sym2(c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0));
        assert_eq!(
            toric_integrability_orthogonality(&p, &xi_any, &affine, 1e-9, 3).unwrap(),
            0.0
        );

        // xi from a T-tensor vanishing near the boundary:
        // xi11 = 2 d2 t, xi12 = -d1 t, xi22 = 0 with t = bump(y1) bump(y2).
        // The orthogonality integral against f = y1^2 is a pure boundary
        // flux of the bump и vanishes.
        let bump = |s: f64| (s * (1.0 - s)).powi(3);
        let dbump = |s: f64| 3.0 * (s * (1.0 - s)).powi(2) * (1.0 - 2.0 * s);
        let xi_t = move |y: [f64; 2]| -> SymMatC {
            SymMatC::sym2(
                c64(2.0 * bump(y[0]) * dbump(y[1]), 0.0),
                c64(-dbump(y[0]) * bump(y[1]), 0.0),
                c64(0.0, 0.0),
            )
        };
        let val = toric_integrability_orthogonality(&p, &xi_t, &quad_probe, 1e-9, 6).unwrap();
        assert!(val <= 1e-6, "orthogonality defect {val}");
    }

    #[test]
    fn positivity_certificate_and_det_bound() {
        // det(G_P) * prod l^r = 1 exactly for the square; check on shells.
        let p = DelzantPolygon::unit_square();
        for &m in &[0.2, 0.1, 0.05, 0.025] {
            for s in 0..8 {
                let t = (s as f64 + 0.5) / 8.0;
                let y = [t.clamp(m, 1.0 - m), m];
                let g = guillemin_hessian(&p, y).unwrap();
                let det = g[0] * g[2] - g[1] * g[1];
                let prod: f64 = p.faces().iter().map(|f| f.ell(y)).product();
                assert!((det * prod - 1.0).abs() < 1e-10);
            }
        }
    }
}
