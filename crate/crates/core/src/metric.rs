//! Stationary contravariant metrics g^{jk}(x) on a spatial domain, with the
//! algebra needed downstream: inversion, signature audits, characteristic
//! tests, the null-cone quadratic in ξ₀, time-like tests and gauge pullbacks.
//!
//! Index 0 is time; indices 1..=n are spatial. Every metric is independent of
//! x₀ because `eval` only sees spatial coordinates.

use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{negative_definite_by_minors, Matrix};

/// Tolerance band for calling an eigenvalue or minor "zero".
pub const SIGNATURE_TIE_TOL: f64 = 1e-12;
/// Determinant threshold below which the full metric is treated as singular.
pub const SINGULAR_DET: f64 = 1e-14;

/// A point (or spatial vector / covector) with 2 or 3 components.
#[derive(Clone, Copy, PartialEq)]
pub struct SpatialPoint {
    dim: usize,
    c: [f64; 3],
}

pub type SpatialCovector = SpatialPoint;

impl SpatialPoint {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if !(2..=3).contains(&coords.len()) {
            return Err(Error::InvalidInput(format!(
                "spatial dimension must be 2 or 3, got {}",
                coords.len()
            )));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite coordinates {coords:?}")));
        }
        let mut c = [0.0; 3];
        c[..coords.len()].copy_from_slice(coords);
        Ok(SpatialPoint { dim: coords.len(), c })
    }

    pub const fn xy(x: f64, y: f64) -> Self {
        SpatialPoint { dim: 2, c: [x, y, 0.0] }
    }

    pub const fn xyz(x: f64, y: f64, z: f64) -> Self {
        SpatialPoint { dim: 3, c: [x, y, z] }
    }

    /// Unchecked constructor for internal hot paths.
    #[inline]
    pub(crate) fn from_slice(coords: &[f64]) -> Self {
        let mut c = [0.0; 3];
        c[..coords.len()].copy_from_slice(coords);
        SpatialPoint { dim: coords.len(), c }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn norm(&self) -> f64 {
        crate::linalg::norm(self)
    }
}

impl Deref for SpatialPoint {
    type Target = [f64];
    #[inline]
    fn deref(&self) -> &[f64] {
        &self.c[..self.dim]
    }
}

impl fmt::Debug for SpatialPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &self.c[..self.dim])
    }
}

impl Serialize for SpatialPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        (**self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for SpatialPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        SpatialPoint::new(&v).map_err(serde::de::Error::custom)
    }
}

/// Full covector (ξ₀, ξ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Covector {
    pub xi0: f64,
    pub xi: SpatialCovector,
}

impl Covector {
    pub fn new(xi0: f64, xi: &[f64]) -> Result<Self> {
        Ok(Covector { xi0, xi: SpatialPoint::new(xi)? })
    }

    /// Components as (ξ₀, ξ₁, ..., ξₙ).
    pub fn full(&self) -> Vec<f64> {
        std::iter::once(self.xi0).chain(self.xi.iter().copied()).collect()
    }

    pub fn norm_sq(&self) -> f64 {
        self.xi0 * self.xi0 + crate::linalg::dot(&self.xi, &self.xi)
    }
}

/// Spatial region a metric is declared on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Domain {
    /// Planar annulus `r_inner ≤ |x − center| ≤ r_outer`.
    Annulus { center: [f64; 2], r_inner: f64, r_outer: f64 },
    /// Axis-aligned box in 2 or 3 dimensions.
    Box { min: Vec<f64>, max: Vec<f64> },
}

impl Domain {
    pub fn annulus(r_inner: f64, r_outer: f64) -> Self {
        Domain::Annulus { center: [0.0, 0.0], r_inner, r_outer }
    }

    pub fn square(half: f64) -> Self {
        Domain::Box { min: vec![-half; 2], max: vec![half; 2] }
    }

    pub fn cube(half: f64) -> Self {
        Domain::Box { min: vec![-half; 3], max: vec![half; 3] }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Annulus { .. } => 2,
            Domain::Box { min, .. } => min.len(),
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Annulus { r_outer, .. } => 2.0 * r_outer,
            Domain::Box { min, max } => {
                min.iter().zip(max).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
            }
        }
    }

    /// Membership with an absolute slack `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            Domain::Annulus { center, r_inner, r_outer } => {
                if x.len() != 2 {
                    return false;
                }
                let r = (x[0] - center[0]).hypot(x[1] - center[1]);
                r >= r_inner - tol && r <= r_outer + tol
            }
            Domain::Box { min, max } => {
                x.len() == min.len()
                    && x.iter().zip(min.iter().zip(max)).all(|(v, (a, b))| *v >= a - tol && *v <= b + tol)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Domain::Annulus { center, r_inner, r_outer } => {
                if !(center.iter().all(|c| c.is_finite())
                    && *r_inner >= 0.0
                    && r_outer.is_finite()
                    && r_outer > r_inner)
                {
                    return Err(Error::InvalidInput(format!(
                        "annulus needs 0 ≤ r_inner < r_outer, got [{r_inner}, {r_outer}]"
                    )));
                }
            }
            Domain::Box { min, max } => {
                if min.len() != max.len() || !(2..=3).contains(&min.len()) {
                    return Err(Error::InvalidInput("box bounds must both have 2 or 3 entries".into()));
                }
                if min.iter().zip(max).any(|(a, b)| !(a.is_finite() && b.is_finite() && b > a)) {
                    return Err(Error::InvalidInput("box needs min < max on every axis".into()));
                }
            }
        }
        Ok(())
    }

    /// Deterministic audit grid of roughly `k` points per axis, strictly
    /// inside the domain.
    pub fn sample_grid(&self, k: usize) -> Vec<SpatialPoint> {
        let k = k.max(2);
        let mut out = Vec::new();
        match self {
            Domain::Annulus { center, r_inner, r_outer } => {
                for i in 0..k {
                    let r = r_inner + (r_outer - r_inner) * (i as f64 + 0.5) / k as f64;
                    for j in 0..k {
                        let t = 2.0 * std::f64::consts::PI * j as f64 / k as f64;
                        out.push(SpatialPoint::xy(center[0] + r * t.cos(), center[1] + r * t.sin()));
                    }
                }
            }
            Domain::Box { min, max } => {
                let axis = |d: usize, i: usize| min[d] + (max[d] - min[d]) * (i as f64 + 0.5) / k as f64;
                if min.len() == 2 {
                    for i in 0..k {
                        for j in 0..k {
                            out.push(SpatialPoint::xy(axis(0, i), axis(1, j)));
                        }
                    }
                } else {
                    for i in 0..k {
                        for j in 0..k {
                            for l in 0..k {
                                out.push(SpatialPoint::xyz(axis(0, i), axis(1, j), axis(2, l)));
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

/// ∂g^{jk}/∂x_p for p = 0..n−1; unused slots are zero.
pub type MetricGradient = [Matrix; 3];

/// Stationary contravariant metric field.
pub trait MetricField: Send + Sync + fmt::Debug {
    /// Spatial dimension n.
    fn dim(&self) -> usize;
    fn domain(&self) -> &Domain;
    /// Contravariant components g^{jk}(x), an (n+1)×(n+1) symmetric matrix.
    fn eval(&self, x: &[f64]) -> Matrix;
    /// Spatial derivatives of `eval`. Defaults to central differences with
    /// step `1e-5 × diameter`.
    fn grad(&self, x: &[f64]) -> MetricGradient {
        fd_gradient(self, x, fd_step(self.domain()))
    }
}

impl<T: MetricField + ?Sized> MetricField for Arc<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn domain(&self) -> &Domain {
        (**self).domain()
    }
    fn eval(&self, x: &[f64]) -> Matrix {
        (**self).eval(x)
    }
    fn grad(&self, x: &[f64]) -> MetricGradient {
        (**self).grad(x)
    }
}

pub fn fd_step(domain: &Domain) -> f64 {
    1e-5 * domain.diameter()
}

/// Central-difference gradient of `m.eval` with step `h`.
pub fn fd_gradient<M: MetricField + ?Sized>(m: &M, x: &[f64], h: f64) -> MetricGradient {
    let n = m.dim();
    let mut g = [Matrix::zeros(n + 1); 3];
    let mut xp = SpatialPoint::from_slice(x);
    for p in 0..n {
        let orig = xp.c[p];
        xp.c[p] = orig + h;
        let up = m.eval(&xp);
        xp.c[p] = orig - h;
        let dn = m.eval(&xp);
        xp.c[p] = orig;
        g[p] = up.sub(&dn).scale(0.5 / h);
    }
    g
}

/// Flat Minkowski metric diag(1, −1, ..., −1).
#[derive(Clone, Debug)]
pub struct Minkowski {
    dim: usize,
    domain: Domain,
}

impl Minkowski {
    pub fn new(domain: Domain) -> Self {
        Minkowski { dim: domain.dim(), domain }
    }
}

impl MetricField for Minkowski {
    fn dim(&self) -> usize {
        self.dim
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn eval(&self, _x: &[f64]) -> Matrix {
        let mut d = vec![-1.0; self.dim + 1];
        d[0] = 1.0;
        Matrix::diag(&d)
    }
    fn grad(&self, _x: &[f64]) -> MetricGradient {
        [Matrix::zeros(self.dim + 1); 3]
    }
}

/// Signature audit of the metric at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignatureReport {
    pub g00_upper: f64,
    pub g00_lower: f64,
    pub delta: f64,
    /// Spatial block negative definite by the leading-minor test.
    pub spatial_negdef: bool,
    /// The minor test hit its tie band (the point is on, or numerically
    /// indistinguishable from, the ergosphere).
    pub degenerate: bool,
    pub cond_1_2: bool,
    pub full_eigenvalues: Vec<f64>,
    pub spatial_eigenvalues: Vec<f64>,
    /// `spatial_negdef ⇔ g00_lower > 0`, evaluated rather than assumed.
    /// Always true at degenerate points.
    pub negdef_matches_g00: bool,
}

fn check_dim(m: &dyn MetricField, x: &[f64]) -> Result<()> {
    if x.len() != m.dim() {
        return Err(Error::Dimension { expected: m.dim(), got: x.len() });
    }
    Ok(())
}

/// Covariant metric g_{jk}, the inverse of `eval`.
pub fn full_metric(m: &dyn MetricField, x: &[f64]) -> Result<Matrix> {
    check_dim(m, x)?;
    let g = m.eval(x);
    let det = g.det();
    if !(det.abs() > SINGULAR_DET) {
        return Err(Error::SingularMetric { point: x.to_vec(), det });
    }
    g.inverse().ok_or(Error::SingularMetric { point: x.to_vec(), det })
}

/// Δ(x): determinant of the spatial block.
pub fn spatial_delta(m: &dyn MetricField, x: &[f64]) -> f64 {
    m.eval(x).spatial_block().det()
}

/// g₀₀ from the cofactor formula Δ / det G.
pub fn lower_g00(m: &dyn MetricField, x: &[f64]) -> Result<f64> {
    check_dim(m, x)?;
    let g = m.eval(x);
    let det = g.det();
    if !(det.abs() > SINGULAR_DET) {
        return Err(Error::SingularMetric { point: x.to_vec(), det });
    }
    Ok(g.spatial_block().det() / det)
}

/// Eigenvalue signature check: exactly one positive and n negative.
pub fn is_hyperbolic_matrix(g: &Matrix) -> bool {
    let scale = g.max_abs().max(f64::MIN_POSITIVE);
    let ev = g.sym_eigenvalues();
    let pos = ev.iter().filter(|v| **v > SIGNATURE_TIE_TOL * scale).count();
    let neg = ev.iter().filter(|v| **v < -SIGNATURE_TIE_TOL * scale).count();
    pos == 1 && neg == g.dim() - 1
}

pub fn signature_report(m: &dyn MetricField, x: &[f64]) -> Result<SignatureReport> {
    check_dim(m, x)?;
    let g = m.eval(x);
    let full_eigenvalues = g.sym_eigenvalues();
    if !g.is_finite() || !is_hyperbolic_matrix(&g) {
        return Err(Error::NotHyperbolic { point: x.to_vec(), eigenvalues: full_eigenvalues });
    }
    let spatial = g.spatial_block();
    let delta = spatial.det();
    let g00_lower = delta / g.det();
    let minors = negative_definite_by_minors(&spatial, SIGNATURE_TIE_TOL);
    let spatial_negdef = minors.unwrap_or(false);
    let degenerate = minors.is_none();
    Ok(SignatureReport {
        g00_upper: g[(0, 0)],
        g00_lower,
        delta,
        spatial_negdef,
        degenerate,
        cond_1_2: g[(0, 0)] > 0.0,
        full_eigenvalues,
        spatial_eigenvalues: spatial.sym_eigenvalues(),
        negdef_matches_g00: degenerate || spatial_negdef == (g00_lower > 0.0),
    })
}

/// Σ_{j,k≥1} g^{jk} ν_j ν_k.
pub fn characteristic_residual(m: &dyn MetricField, x: &[f64], nu: &[f64]) -> f64 {
    m.eval(x).spatial_block().quad_form(nu)
}

/// Full symbol Σ_{j,k≥0} g^{jk} ξ_j ξ_k.
pub fn full_symbol(m: &dyn MetricField, x: &[f64], xi: &Covector) -> f64 {
    symbol_of(&m.eval(x), xi.xi0, &xi.xi)
}

#[inline]
pub(crate) fn symbol_of(g: &Matrix, xi0: f64, xi: &[f64]) -> f64 {
    let n = g.dim() - 1;
    let mut s = g[(0, 0)] * xi0 * xi0;
    for j in 0..n {
        s += 2.0 * g[(0, j + 1)] * xi0 * xi[j];
        for k in 0..n {
            s += g[(j + 1, k + 1)] * xi[j] * xi[k];
        }
    }
    s
}

/// Roots ξ₀ of the null-cone quadratic for a fixed spatial covector,
/// in descending order.
pub fn solve_xi0(m: &dyn MetricField, x: &[f64], xi: &[f64]) -> Result<(f64, f64)> {
    check_dim(m, x)?;
    if xi.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroCovector);
    }
    xi0_roots(&m.eval(x), xi)
}

pub(crate) fn xi0_roots(g: &Matrix, xi: &[f64]) -> Result<(f64, f64)> {
    let n = g.dim() - 1;
    let a = g[(0, 0)];
    let b: f64 = 2.0 * (0..n).map(|j| g[(0, j + 1)] * xi[j]).sum::<f64>();
    let c = g.spatial_block().quad_form(xi);
    let mut disc = b * b - 4.0 * a * c;
    let scale = b * b + (4.0 * a * c).abs();
    if disc < 0.0 {
        if disc >= -1e-14 * scale {
            disc = 0.0;
        } else {
            return Err(Error::ComplexRoots { discriminant: disc });
        }
    }
    if a == 0.0 {
        return Err(Error::ComplexRoots { discriminant: disc });
    }
    let sq = disc.sqrt();
    // Stable pairing: q carries the sign of b so neither root cancels.
    let q = if b >= 0.0 { -0.5 * (b + sq) } else { -0.5 * (b - sq) };
    let (r1, r2) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    Ok(if r1 >= r2 { (r1, r2) } else { (r2, r1) })
}

/// Forward time-like test for a velocity (ẋ₀, ẋ).
pub fn is_timelike(m: &dyn MetricField, x: &[f64], xdot: &[f64]) -> Result<bool> {
    if xdot.len() != m.dim() + 1 {
        return Err(Error::Dimension { expected: m.dim() + 1, got: xdot.len() });
    }
    let low = full_metric(m, x)?;
    Ok(low.quad_form(xdot) > 0.0 && xdot[0] > 0.0)
}

/// Change of variables y₀ = x₀ + a(x), y = φ(x).
pub trait GaugeTransform: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn time_shift(&self, x: &[f64]) -> f64;
    fn time_shift_grad(&self, x: &[f64]) -> [f64; 3];
    fn map(&self, x: &[f64]) -> SpatialPoint;
    /// ∂φ_i/∂x_j as an n×n matrix.
    fn jacobian(&self, x: &[f64]) -> Matrix;
    /// φ⁻¹(y). The default is a damped Newton iteration started at y.
    fn inverse(&self, y: &[f64]) -> Result<SpatialPoint> {
        newton_inverse(self, y)
    }
}

fn newton_inverse<T: GaugeTransform + ?Sized>(t: &T, y: &[f64]) -> Result<SpatialPoint> {
    let n = y.len();
    let mut x = SpatialPoint::from_slice(y);
    let scale = 1.0 + crate::linalg::norm(y);
    for _ in 0..60 {
        let fx = t.map(&x);
        let r: Vec<f64> = (0..n).map(|i| fx[i] - y[i]).collect();
        if crate::linalg::norm(&r) <= 1e-15 * scale {
            return Ok(x);
        }
        let step = t
            .jacobian(&x)
            .solve(&r)
            .ok_or_else(|| Error::SingularJacobian { point: x.to_vec() })?;
        for i in 0..n {
            x.c[i] -= step[i];
        }
    }
    let fx = t.map(&x);
    let res: f64 = (0..n).map(|i| (fx[i] - y[i]).powi(2)).sum::<f64>().sqrt();
    if res <= 1e-12 * scale {
        Ok(x)
    } else {
        Err(Error::GaugeInverse { point: y.to_vec() })
    }
}

/// The (n+1)×(n+1) Jacobian [[1, a_x], [0, Dφ]] of the full change of variables.
pub fn gauge_jacobian(t: &dyn GaugeTransform, x: &[f64]) -> Matrix {
    let n = x.len();
    let dphi = t.jacobian(x);
    let ax = t.time_shift_grad(x);
    let mut j = Matrix::zeros(n + 1);
    j[(0, 0)] = 1.0;
    for c in 0..n {
        j[(0, c + 1)] = ax[c];
        for r in 0..n {
            j[(r + 1, c + 1)] = dphi[(r, c)];
        }
    }
    j
}

/// Maps a covector at x to the pulled-back coordinates at φ(x): ξ̃ = J⁻ᵀ ξ.
pub fn transform_covector(t: &dyn GaugeTransform, x: &[f64], xi: &Covector) -> Result<Covector> {
    let j = gauge_jacobian(t, x);
    let full = xi.full();
    let out = j
        .transpose()
        .solve(&full)
        .ok_or_else(|| Error::SingularJacobian { point: x.to_vec() })?;
    Covector::new(out[0], &out[1..=x.len()])
}

#[derive(Clone, Copy, Debug)]
pub struct IdentityGauge {
    pub dim: usize,
}

impl GaugeTransform for IdentityGauge {
    fn dim(&self) -> usize {
        self.dim
    }
    fn time_shift(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn time_shift_grad(&self, _x: &[f64]) -> [f64; 3] {
        [0.0; 3]
    }
    fn map(&self, x: &[f64]) -> SpatialPoint {
        SpatialPoint::from_slice(x)
    }
    fn jacobian(&self, _x: &[f64]) -> Matrix {
        Matrix::identity(self.dim)
    }
    fn inverse(&self, y: &[f64]) -> Result<SpatialPoint> {
        Ok(SpatialPoint::from_slice(y))
    }
}

/// Planar rotation about `center`.
#[derive(Clone, Copy, Debug)]
pub struct RotationGauge {
    pub center: [f64; 2],
    pub angle: f64,
}

impl GaugeTransform for RotationGauge {
    fn dim(&self) -> usize {
        2
    }
    fn time_shift(&self, _x: &[f64]) -> f64 {
        0.0
    }
    fn time_shift_grad(&self, _x: &[f64]) -> [f64; 3] {
        [0.0; 3]
    }
    fn map(&self, x: &[f64]) -> SpatialPoint {
        let (s, c) = self.angle.sin_cos();
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        SpatialPoint::xy(self.center[0] + c * dx - s * dy, self.center[1] + s * dx + c * dy)
    }
    fn jacobian(&self, _x: &[f64]) -> Matrix {
        let (s, c) = self.angle.sin_cos();
        Matrix::from_rows(&[&[c, -s], &[s, c]])
    }
    fn inverse(&self, y: &[f64]) -> Result<SpatialPoint> {
        Ok(RotationGauge { center: self.center, angle: -self.angle }.map(y))
    }
}

/// Boundary-fixing planar diffeomorphism supported in the annulus
/// `r_a < |x − center| < r_b`:
/// φ(x) = center + R(twist·b(r)) (x − center) (r + radial_amp·b(r)) / r,
/// a(x) = time_amp·b(r), with b a C¹ bump vanishing outside (r_a, r_b).
#[derive(Clone, Copy, Debug)]
pub struct RadialBumpGauge {
    pub center: [f64; 2],
    pub r_a: f64,
    pub r_b: f64,
    pub radial_amp: f64,
    pub twist: f64,
    pub time_amp: f64,
}

impl RadialBumpGauge {
    /// Bump value and derivative at radius r.
    pub fn bump(&self, r: f64) -> (f64, f64) {
        if r <= self.r_a || r >= self.r_b {
            return (0.0, 0.0);
        }
        let w = self.r_b - self.r_a;
        let u = 4.0 * (r - self.r_a) * (self.r_b - r) / (w * w);
        let du = 4.0 * (self.r_a + self.r_b - 2.0 * r) / (w * w);
        (u * u, 2.0 * u * du)
    }

    /// Radial profile ρ(r) = r + radial_amp·b(r) and its derivative.
    pub fn radial_map(&self, r: f64) -> (f64, f64) {
        let (b, db) = self.bump(r);
        (r + self.radial_amp * b, 1.0 + self.radial_amp * db)
    }

    fn polar(&self, x: &[f64]) -> (f64, [f64; 2]) {
        let d = [x[0] - self.center[0], x[1] - self.center[1]];
        let r = d[0].hypot(d[1]);
        (r, [d[0] / r, d[1] / r])
    }
}

impl GaugeTransform for RadialBumpGauge {
    fn dim(&self) -> usize {
        2
    }
    fn time_shift(&self, x: &[f64]) -> f64 {
        self.time_amp * self.bump(self.polar(x).0).0
    }
    fn time_shift_grad(&self, x: &[f64]) -> [f64; 3] {
        let (r, e) = self.polar(x);
        let db = self.bump(r).1;
        [self.time_amp * db * e[0], self.time_amp * db * e[1], 0.0]
    }
    fn map(&self, x: &[f64]) -> SpatialPoint {
        let (r, e) = self.polar(x);
        if r == 0.0 {
            return SpatialPoint::from_slice(x);
        }
        let (rho, _) = self.radial_map(r);
        let (s, c) = (self.twist * self.bump(r).0).sin_cos();
        SpatialPoint::xy(
            self.center[0] + rho * (c * e[0] - s * e[1]),
            self.center[1] + rho * (s * e[0] + c * e[1]),
        )
    }
    fn jacobian(&self, x: &[f64]) -> Matrix {
        let (r, e) = self.polar(x);
        let (b, db) = self.bump(r);
        let (rho, drho) = self.radial_map(r);
        let dtau = self.twist * db;
        let t = [-e[1], e[0]];
        // D = ρ' e eᵀ + ρ τ' t eᵀ + (ρ/r)(I − e eᵀ), then rotate by R(τ).
        let mut d = Matrix::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                let delta = if i == j { 1.0 } else { 0.0 };
                d[(i, j)] = drho * e[i] * e[j] + rho * dtau * t[i] * e[j] + rho / r * (delta - e[i] * e[j]);
            }
        }
        let (s, c) = (self.twist * b).sin_cos();
        Matrix::from_rows(&[&[c, -s], &[s, c]]).mul(&d)
    }
    fn inverse(&self, y: &[f64]) -> Result<SpatialPoint> {
        let (rho_target, e) = self.polar(y);
        if rho_target <= self.r_a || rho_target >= self.r_b {
            return Ok(SpatialPoint::from_slice(y));
        }
        // ρ is strictly increasing on [r_a, r_b] with ρ(r_a)=r_a, ρ(r_b)=r_b.
        let (mut lo, mut hi) = (self.r_a, self.r_b);
        let mut r = rho_target;
        for _ in 0..100 {
            let (f, df) = self.radial_map(r);
            let f = f - rho_target;
            if f.abs() <= 1e-16 * rho_target {
                break;
            }
            if f > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let newton = r - f / df;
            r = if df > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if hi - lo <= 1e-16 * rho_target {
                break;
            }
        }
        let (s, c) = (-self.twist * self.bump(r).0).sin_cos();
        Ok(SpatialPoint::xy(
            self.center[0] + r * (c * e[0] - s * e[1]),
            self.center[1] + r * (s * e[0] + c * e[1]),
        ))
    }
}

/// Metric expressed in the new coordinates: g̃(y) = J(x) g(x) Jᵀ(x), x = φ⁻¹(y).
#[derive(Debug, Clone)]
pub struct PulledBackMetric {
    base: Arc<dyn MetricField>,
    transform: Arc<dyn GaugeTransform>,
    domain: Domain,
}

impl PulledBackMetric {
    pub fn base(&self) -> &Arc<dyn MetricField> {
        &self.base
    }
    pub fn transform(&self) -> &Arc<dyn GaugeTransform> {
        &self.transform
    }
}

/// Builds the pulled-back metric. The transform is assumed to fix the domain
/// boundary, so the new metric lives on the same domain. The Jacobian is
/// checked on an audit grid.
pub fn pullback_metric(
    m: Arc<dyn MetricField>,
    t: Arc<dyn GaugeTransform>,
) -> Result<PulledBackMetric> {
    if m.dim() != t.dim() {
        return Err(Error::Dimension { expected: m.dim(), got: t.dim() });
    }
    for x in m.domain().sample_grid(24) {
        let d = t.jacobian(&x).det();
        if !(d.abs() > 1e-12) || !d.is_finite() {
            return Err(Error::SingularJacobian { point: x.to_vec() });
        }
    }
    Ok(PulledBackMetric { domain: m.domain().clone(), base: m, transform: t })
}

impl MetricField for PulledBackMetric {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn eval(&self, y: &[f64]) -> Matrix {
        match self.transform.inverse(y) {
            Ok(x) => self.base.eval(&x).congruence(&gauge_jacobian(&*self.transform, &x)),
            Err(_) => Matrix::zeros(self.dim() + 1).scale(f64::NAN),
        }
    }
}
