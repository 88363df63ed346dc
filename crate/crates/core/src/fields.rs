//! The two characteristic direction fields f⁺, f⁻ on a planar ergoregion,
//! the kernel direction on the ergosphere, inner-boundary flux tests, closed
//! forms for swirling flows and the axisymmetric 3D → 2D reduction.
//!
//! With M the spatial block of g^{jk} and s = √(−Δ):
//!
//! f⁺ ∥ (g¹² + s, g²²) ∥ (g¹¹, g¹² − s),   f⁻ ∥ (g¹² − s, g²²) ∥ (g¹¹, g¹² + s).
//!
//! Equivalently M·(Jf) = ±s f with J the +90° rotation, so ν = Jf is a null
//! spatial covector and the integral curves of f± are characteristics.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Boundary, Error, Result};
use crate::linalg::{cross2, dot, normalize2, Matrix};
use crate::media::Profile;
use crate::metric::{Domain, MetricField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldChoice {
    Plus,
    Minus,
}

impl FieldChoice {
    pub const BOTH: [FieldChoice; 2] = [FieldChoice::Plus, FieldChoice::Minus];

    fn sign(self) -> f64 {
        match self {
            FieldChoice::Plus => 1.0,
            FieldChoice::Minus => -1.0,
        }
    }
}

/// Boundary point with its unit normal pointing away from the region center.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundarySample {
    pub theta: f64,
    pub point: [f64; 2],
    pub normal: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
enum CurveShape {
    Circle { radius: f64 },
    /// Radii at uniformly spaced angles 2πk/K.
    Sampled { radii: Vec<f64> },
}

/// Closed star-shaped curve around a center.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryCurve {
    center: [f64; 2],
    shape: CurveShape,
    samples: Vec<BoundarySample>,
}

fn unit_polar(theta: f64) -> [f64; 2] {
    [theta.cos(), theta.sin()]
}

impl BoundaryCurve {
    pub fn circle(center: [f64; 2], radius: f64, k: usize) -> Self {
        let samples = (0..k)
            .map(|i| {
                let theta = 2.0 * PI * i as f64 / k as f64;
                let e = unit_polar(theta);
                BoundarySample { theta, point: [center[0] + radius * e[0], center[1] + radius * e[1]], normal: e }
            })
            .collect();
        BoundaryCurve { center, shape: CurveShape::Circle { radius }, samples }
    }

    /// Star-shaped curve through `radii` at uniform angles. Normals default
    /// to the geometric normal of the interpolated curve.
    pub fn sampled(center: [f64; 2], radii: Vec<f64>, normals: Option<Vec<[f64; 2]>>) -> Self {
        let k = radii.len();
        let mut curve = BoundaryCurve { center, shape: CurveShape::Sampled { radii: radii.clone() }, samples: vec![] };
        curve.samples = (0..k)
            .map(|i| {
                let theta = 2.0 * PI * i as f64 / k as f64;
                let e = unit_polar(theta);
                let r = radii[i];
                let normal = match &normals {
                    Some(n) => n[i],
                    None => curve.geometric_normal(theta),
                };
                BoundarySample { theta, point: [center[0] + r * e[0], center[1] + r * e[1]], normal }
            })
            .collect();
        curve
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn samples(&self) -> &[BoundarySample] {
        &self.samples
    }

    pub fn is_circle(&self) -> Option<f64> {
        match self.shape {
            CurveShape::Circle { radius } => Some(radius),
            CurveShape::Sampled { .. } => None,
        }
    }

    /// Radius and dr/dθ at angle θ (periodic Catmull–Rom for sampled curves).
    pub fn radius_and_slope(&self, theta: f64) -> (f64, f64) {
        match &self.shape {
            CurveShape::Circle { radius } => (*radius, 0.0),
            CurveShape::Sampled { radii } => {
                let k = radii.len();
                let step = 2.0 * PI / k as f64;
                let u = theta.rem_euclid(2.0 * PI) / step;
                let i = (u.floor() as usize) % k;
                let t = u - u.floor();
                let p = |j: isize| radii[(i as isize + j).rem_euclid(k as isize) as usize];
                let (p0, p1, p2, p3) = (p(-1), p(0), p(1), p(2));
                let c1 = -p0 + p2;
                let c2 = 2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3;
                let c3 = -p0 + 3.0 * p1 - 3.0 * p2 + p3;
                let r = 0.5 * (2.0 * p1 + t * (c1 + t * (c2 + t * c3)));
                let dr = 0.5 * (c1 + t * (2.0 * c2 + 3.0 * t * c3)) / step;
                (r, dr)
            }
        }
    }

    pub fn radius_at(&self, theta: f64) -> f64 {
        self.radius_and_slope(theta).0
    }

    fn geometric_normal(&self, theta: f64) -> [f64; 2] {
        let (r, dr) = self.radius_and_slope(theta);
        let e = unit_polar(theta);
        let t = [-e[1], e[0]];
        normalize2([r * e[0] - dr * t[0], r * e[1] - dr * t[1]])
    }

    pub fn max_radius(&self) -> f64 {
        match &self.shape {
            CurveShape::Circle { radius } => *radius,
            CurveShape::Sampled { radii } => radii.iter().cloned().fold(0.0, f64::max),
        }
    }

    pub fn min_radius(&self) -> f64 {
        match &self.shape {
            CurveShape::Circle { radius } => *radius,
            CurveShape::Sampled { radii } => radii.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn polyline(&self) -> Vec<[f64; 2]> {
        self.samples.iter().map(|s| s.point).collect()
    }
}

/// Ergoregion Ω_e: the annular region between the inner boundary S1 and the
/// ergosphere S, both star-shaped about `center`.
#[derive(Clone, Debug, PartialEq)]
pub struct ErgoRegion {
    center: [f64; 2],
    outer: BoundaryCurve,
    inner: BoundaryCurve,
}

pub const DEFAULT_BOUNDARY_SAMPLES: usize = 256;

impl ErgoRegion {
    pub fn new(outer: BoundaryCurve, inner: BoundaryCurve) -> Result<Self> {
        if outer.center != inner.center {
            return Err(Error::InvalidRegion("boundary curves must share a center".into()));
        }
        let region = ErgoRegion { center: outer.center, outer, inner };
        for j in 0..720 {
            let th = 2.0 * PI * j as f64 / 720.0;
            if !(region.inner.radius_at(th) < region.outer.radius_at(th)) {
                return Err(Error::InvalidRegion(format!("boundaries touch or cross at angle {th:.4}")));
            }
        }
        if !(region.inner.min_radius() > 0.0) {
            return Err(Error::InvalidRegion("inner boundary must enclose the center".into()));
        }
        Ok(region)
    }

    /// Annulus with analytic circular boundaries.
    pub fn circular(center: [f64; 2], r_outer: f64, r_inner: f64) -> Result<Self> {
        Self::new(
            BoundaryCurve::circle(center, r_outer, DEFAULT_BOUNDARY_SAMPLES),
            BoundaryCurve::circle(center, r_inner, DEFAULT_BOUNDARY_SAMPLES),
        )
    }

    /// Locates the ergosphere by bisection of Δ along `k` rays from `center`,
    /// scanning inward from `r_search` for the first sign change (Δ < 0
    /// inside, Δ ≥ 0 outside). The inner boundary is the circle `r_inner`.
    /// Normals come from ∇Δ where it is nonzero.
    pub fn locate(m: &dyn MetricField, center: [f64; 2], r_inner: f64, r_search: f64, k: usize) -> Result<Self> {
        if m.dim() != 2 {
            return Err(Error::Dimension { expected: 2, got: m.dim() });
        }
        let radii = locate_radii(m, center, r_inner, r_search, k)?;
        let outer_geo = BoundaryCurve::sampled(center, radii.clone(), None);
        let normals: Vec<[f64; 2]> = outer_geo
            .samples
            .iter()
            .map(|s| {
                let g = delta_gradient(m, &s.point);
                let gn = g[0].hypot(g[1]);
                if gn > 1e-8 && dot(&g, &s.normal) > 0.0 {
                    [g[0] / gn, g[1] / gn]
                } else {
                    s.normal
                }
            })
            .collect();
        Self::new(
            BoundaryCurve::sampled(center, radii, Some(normals)),
            BoundaryCurve::circle(center, r_inner, DEFAULT_BOUNDARY_SAMPLES),
        )
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }
    pub fn outer(&self) -> &BoundaryCurve {
        &self.outer
    }
    pub fn inner(&self) -> &BoundaryCurve {
        &self.inner
    }

    pub fn diameter(&self) -> f64 {
        2.0 * self.outer.max_radius()
    }

    fn polar(&self, x: &[f64]) -> (f64, f64) {
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        (dx.hypot(dy), dy.atan2(dx))
    }

    /// Which boundary `x` lies beyond, if any, with absolute slack `tol`.
    pub fn exit_boundary(&self, x: &[f64], tol: f64) -> Option<Boundary> {
        let (r, th) = self.polar(x);
        if r > self.outer.radius_at(th) + tol {
            Some(Boundary::Outer)
        } else if r < self.inner.radius_at(th) - tol {
            Some(Boundary::Inner)
        } else {
            None
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.exit_boundary(x, tol).is_none()
    }

    /// Checks Δ < 0 strictly between the boundaries on a polar audit grid.
    pub fn validate(&self, m: &dyn MetricField) -> Result<()> {
        for j in 0..64 {
            let th = 2.0 * PI * j as f64 / 64.0;
            let (ri, ro) = (self.inner.radius_at(th), self.outer.radius_at(th));
            let e = unit_polar(th);
            for i in 1..32 {
                let r = ri + (ro - ri) * (i as f64 / 32.0);
                let x = [self.center[0] + r * e[0], self.center[1] + r * e[1]];
                let d = m.eval(&x).spatial_block().det();
                if !(d < 0.0) {
                    return Err(Error::InvalidRegion(format!("delta = {d:e} ≥ 0 inside the region at {x:?}")));
                }
            }
        }
        Ok(())
    }
}

/// ∇Δ for a planar metric from the analytic (or finite-difference) gradient.
pub fn delta_gradient(m: &dyn MetricField, x: &[f64]) -> [f64; 2] {
    let g = m.eval(x);
    let dg = m.grad(x);
    let (g11, g12, g22) = (g[(1, 1)], g[(1, 2)], g[(2, 2)]);
    let mut out = [0.0; 2];
    for (p, o) in out.iter_mut().enumerate() {
        let d = &dg[p];
        *o = d[(1, 1)] * g22 + g11 * d[(2, 2)] - 2.0 * g12 * d[(1, 2)];
    }
    out
}

fn locate_radii(m: &dyn MetricField, center: [f64; 2], r_inner: f64, r_search: f64, k: usize) -> Result<Vec<f64>> {
    let scale = m.eval(&[center[0] + r_search, center[1]]).spatial_block().max_abs().max(1e-300);
    let zero_band = 1e-12 * scale * scale;
    let mut radii = Vec::with_capacity(k);
    for i in 0..k {
        let e = unit_polar(2.0 * PI * i as f64 / k as f64);
        let delta = |r: f64| m.eval(&[center[0] + r * e[0], center[1] + r * e[1]]).spatial_block().det();
        let nscan = 400;
        let mut found = None;
        let mut hi = r_search;
        let mut d_hi = delta(hi);
        for j in 1..=nscan {
            let lo = r_search - (r_search - r_inner) * j as f64 / nscan as f64;
            let d_lo = delta(lo);
            if d_hi >= -zero_band && d_lo < -zero_band {
                found = Some((lo, hi));
                break;
            }
            hi = lo;
            d_hi = d_lo;
        }
        let Some((mut lo, mut hi)) = found else {
            return Err(if i == 0 {
                Error::NoErgoregion
            } else {
                Error::InvalidRegion(format!("no ergosphere crossing along ray {i}"))
            });
        };
        while hi - lo > 1e-13 * hi {
            let mid = 0.5 * (lo + hi);
            if delta(mid) < -zero_band {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        radii.push(0.5 * (lo + hi));
    }
    Ok(radii)
}

/// Radii along `k` rays where Δ changes sign, for audits without building a
/// full region. `None` when no ray has a crossing.
pub fn ergosphere_radii(m: &dyn MetricField, center: [f64; 2], r_inner: f64, r_search: f64, k: usize) -> Option<Vec<f64>> {
    locate_radii(m, center, r_inner, r_search, k).ok()
}

/// Which representation produced a field value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchTag {
    /// (g¹² ± s, g²²)
    SecondRow,
    /// (g¹¹, g¹² ∓ s)
    FirstRow,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSample {
    /// Unit direction with the representation's own sign.
    pub dir: [f64; 2],
    pub patch: PatchTag,
    /// √(−Δ) after clamping.
    pub root: f64,
}

/// Evaluates f± from a planar contravariant metric matrix.
pub fn field_from_matrix(g: &Matrix, which: FieldChoice) -> Option<FieldSample> {
    let (g11, g12, g22) = (g[(1, 1)], g[(1, 2)], g[(2, 2)]);
    let scale = g11.abs().max(g12.abs()).max(g22.abs());
    if !(scale > 0.0) {
        return None;
    }
    let delta = g11 * g22 - g12 * g12;
    let root = if delta >= -1e-14 * scale * scale { 0.0 } else { (-delta).sqrt() };
    let sg = which.sign();
    let second = [g12 + sg * root, g22];
    let first = [g11, g12 - sg * root];
    let (v, patch) = if second[0].hypot(second[1]) >= first[0].hypot(first[1]) {
        (second, PatchTag::SecondRow)
    } else {
        (first, PatchTag::FirstRow)
    };
    let n = v[0].hypot(v[1]);
    if !(n > 0.0) {
        return None;
    }
    Some(FieldSample { dir: [v[0] / n, v[1] / n], patch, root })
}

/// The pair f⁺, f⁻ on a planar ergoregion.
#[derive(Clone, Debug)]
pub struct CharFieldPair {
    metric: Arc<dyn MetricField>,
    region: ErgoRegion,
}

pub fn build_char_fields(m: Arc<dyn MetricField>, region: ErgoRegion) -> Result<CharFieldPair> {
    if m.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: m.dim() });
    }
    for s in region.outer.samples.iter().chain(&region.inner.samples) {
        let g = m.eval(&s.point);
        if field_from_matrix(&g, FieldChoice::Plus).is_none() {
            return Err(Error::RankCollapse { point: s.point.to_vec() });
        }
    }
    Ok(CharFieldPair { metric: m, region })
}

impl CharFieldPair {
    pub fn metric(&self) -> &Arc<dyn MetricField> {
        &self.metric
    }

    pub fn region(&self) -> &ErgoRegion {
        &self.region
    }

    /// f±(x) as a unit vector with its representation's sign.
    pub fn raw(&self, which: FieldChoice, x: &[f64]) -> Result<FieldSample> {
        field_from_matrix(&self.metric.eval(x), which).ok_or_else(|| Error::RankCollapse { point: x.to_vec() })
    }

    /// f±(x) oriented to have a positive component along `reference`.
    pub fn aligned(&self, which: FieldChoice, x: &[f64], reference: [f64; 2]) -> Result<[f64; 2]> {
        let d = self.raw(which, x)?.dir;
        Ok(if dot(&d, &reference) < 0.0 { [-d[0], -d[1]] } else { d })
    }

    /// |Q(ν)| / ‖M‖ for the normal ν = (−f₂, f₁).
    pub fn normal_residual(&self, which: FieldChoice, x: &[f64]) -> Result<f64> {
        let f = self.raw(which, x)?.dir;
        let m = self.metric.eval(x).spatial_block();
        Ok(m.quad_form(&[-f[1], f[0]]).abs() / m.max_abs())
    }

    /// Direction at a point of S pointing into Ω_e.
    pub fn inward_at_outer(&self, which: FieldChoice, sample: &BoundarySample) -> Result<[f64; 2]> {
        self.aligned(which, &sample.point, [-sample.normal[0], -sample.normal[1]])
    }

    /// Direction at a point of S1 pointing into Ω_e.
    pub fn inward_at_inner(&self, which: FieldChoice, sample: &BoundarySample) -> Result<[f64; 2]> {
        self.aligned(which, &sample.point, sample.normal)
    }

    pub fn cursor(&self, which: FieldChoice, initial: [f64; 2]) -> FieldCursor<'_> {
        FieldCursor { fields: self, which, last: initial }
    }
}

/// Per-trajectory orientation context: keeps the last accepted direction and
/// flips each evaluation to agree with it.
#[derive(Clone, Debug)]
pub struct FieldCursor<'a> {
    fields: &'a CharFieldPair,
    which: FieldChoice,
    last: [f64; 2],
}

impl FieldCursor<'_> {
    pub fn which(&self) -> FieldChoice {
        self.which
    }

    pub fn last(&self) -> [f64; 2] {
        self.last
    }

    /// Oriented direction at x without updating the context.
    pub fn peek(&self, x: &[f64]) -> Result<[f64; 2]> {
        self.fields.aligned(self.which, x, self.last)
    }

    /// Oriented direction at x, recorded as the new reference.
    pub fn advance(&mut self, x: &[f64]) -> Result<[f64; 2]> {
        let d = self.peek(x)?;
        self.last = d;
        Ok(d)
    }

    pub fn reverse(&mut self) {
        self.last = [-self.last[0], -self.last[1]];
    }
}

/// Unit null vector b(y) of the rank-one spatial block on S, oriented so
/// that Σ g^{0j} b_j > 0.
pub fn kernel_direction(m: &dyn MetricField, y: &[f64]) -> Result<[f64; 2]> {
    if m.dim() != 2 || y.len() != 2 {
        return Err(Error::Dimension { expected: 2, got: y.len() });
    }
    let g = m.eval(y);
    let (g11, g12, g22) = (g[(1, 1)], g[(1, 2)], g[(2, 2)]);
    let scale = g11.abs().max(g12.abs()).max(g22.abs());
    let delta = g11 * g22 - g12 * g12;
    if !(delta.abs() <= 1e-8 * scale * scale) || scale == 0.0 {
        return Err(Error::NotOnErgosphere { point: y.to_vec(), delta });
    }
    let a = [-g12, g11];
    let c = [g22, -g12];
    let v = if a[0].hypot(a[1]) >= c[0].hypot(c[1]) { a } else { c };
    let b = normalize2(v);
    let tau = g[(0, 1)] * b[0] + g[(0, 2)] * b[1];
    if tau.abs() < 1e-12 {
        return Err(Error::ZeroTimeCoupling { point: y.to_vec() });
    }
    Ok(if tau > 0.0 { b } else { [-b[0], -b[1]] })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxVerdict {
    /// Every forward null direction leaving S1 points into Ω_e.
    AllOutward,
    /// Every forward null direction at S1 points out of Ω_e.
    AllInward,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FluxReport {
    pub verdict: FluxVerdict,
    /// Smallest and largest N·ẋ/|ẋ| over samples and branches.
    pub min_flux: f64,
    pub max_flux: f64,
    /// Sample indices on S1 whose branches disagree with the majority sign.
    pub offending: Vec<usize>,
    pub samples: usize,
}

/// Sign test of N·ẋ on S1 for both forward-oriented null branches with
/// ξ₀ = 0, where ẋ = 2Mξ and N points from S1 into Ω_e.
pub fn s1_flux_test(m: &dyn MetricField, region: &ErgoRegion) -> Result<FluxReport> {
    let mut per_sample = Vec::with_capacity(region.inner.samples.len());
    for s in &region.inner.samples {
        let g = m.eval(&s.point);
        let sp = g.spatial_block();
        let qn = sp.quad_form(&s.normal);
        if qn.abs() <= 1e-10 * sp.max_abs() {
            return Err(Error::CharacteristicS1 { point: s.point.to_vec() });
        }
        let mut fluxes = [0.0; 2];
        for (slot, which) in FieldChoice::BOTH.iter().enumerate() {
            let f = field_from_matrix(&g, *which).ok_or_else(|| Error::RankCollapse { point: s.point.to_vec() })?;
            let mut nu = [-f.dir[1], f.dir[0]];
            let tau = g[(0, 1)] * nu[0] + g[(0, 2)] * nu[1];
            if tau < 0.0 {
                nu = [-nu[0], -nu[1]];
            }
            let v = sp.mat_vec(&nu);
            let vel = [2.0 * v[0], 2.0 * v[1]];
            let speed = vel[0].hypot(vel[1]);
            fluxes[slot] = if tau == 0.0 || speed == 0.0 { 0.0 } else { dot(&vel, &s.normal) / speed };
        }
        per_sample.push(fluxes);
    }
    let all: Vec<f64> = per_sample.iter().flatten().copied().collect();
    let min_flux = all.iter().cloned().fold(f64::INFINITY, f64::min);
    let max_flux = all.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let pos = all.iter().filter(|v| **v > 0.0).count();
    let majority_positive = pos * 2 >= all.len();
    let offending: Vec<usize> = per_sample
        .iter()
        .enumerate()
        .filter(|(_, f)| f.iter().any(|v| (*v > 0.0) != majority_positive || *v == 0.0))
        .map(|(i, _)| i)
        .collect();
    let verdict = if min_flux > 0.0 {
        FluxVerdict::AllOutward
    } else if max_flux < 0.0 {
        FluxVerdict::AllInward
    } else {
        FluxVerdict::Mixed
    };
    Ok(FluxReport { verdict, min_flux, max_flux, offending, samples: per_sample.len() })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignCase {
    APos,
    ANeg,
}

/// Closed-form characteristic fields of the vortex w = (A/r) r̂ + (B/r) θ̂
/// (c = ρ = 1) as (dr/ds, dθ/ds), with the removable singularities divided
/// out. Labels follow the polar factorization: `plus` takes +√ and equals the
/// Cartesian [`FieldChoice::Minus`] family; `minus` equals
/// [`FieldChoice::Plus`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarVortexFields {
    pub a: f64,
    pub b: f64,
    pub case: SignCase,
}

pub fn polar_vortex_fields(a: f64, b: f64, case: SignCase) -> PolarVortexFields {
    PolarVortexFields { a, b, case }
}

impl PolarVortexFields {
    fn root(&self, r: f64) -> f64 {
        (self.a * self.a + self.b * self.b - r * r).sqrt()
    }

    pub fn plus(&self, r: f64) -> (f64, f64) {
        let (a, b) = (self.a, self.b);
        match self.case {
            SignCase::APos => (a * a - r * r, a * b / r + self.root(r)),
            SignCase::ANeg => (-1.0, (1.0 - b * b / (r * r)) / (a * b / r - self.root(r))),
        }
    }

    pub fn minus(&self, r: f64) -> (f64, f64) {
        let (a, b) = (self.a, self.b);
        match self.case {
            SignCase::APos => (-1.0, (1.0 - b * b / (r * r)) / (a * b / r + self.root(r))),
            SignCase::ANeg => (a * a - r * r, a * b / r - self.root(r)),
        }
    }

    /// Cartesian direction dr r̂ + r dθ θ̂ at a planar point (origin-centered).
    pub fn cartesian(&self, plus: bool, x: &[f64]) -> [f64; 2] {
        let r = x[0].hypot(x[1]);
        let (dr, dth) = if plus { self.plus(r) } else { self.minus(r) };
        let e = [x[0] / r, x[1] / r];
        [dr * e[0] - r * dth * e[1], dr * e[1] + r * dth * e[0]]
    }
}

/// Closed-form fields for w = A(r) r̂ + B(r) θ̂ (c = ρ = 1):
/// `plus`: (A − 1, (AB + √(A²+B²−1)) / (r(A+1))),
/// `minus`: (A + 1, (AB − √(A²+B²−1)) / (r(A−1))).
/// Circles where A = 1 are invariant for `plus`, where A = −1 for `minus`.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfileFields {
    pub a: Profile,
    pub b: Profile,
    pub r1: f64,
    pub r0: f64,
}

fn hypothesis(clause: impl Into<String>) -> Error {
    Error::HypothesisViolation { clause: clause.into() }
}

const PROFILE_SLACK: f64 = 1e-8;

pub fn radial_profile_fields(a: Profile, b: Profile, r1: f64, r0: f64) -> Result<RadialProfileFields> {
    a.validate()?;
    b.validate()?;
    if !(r1 > 0.0 && r0 > r1) {
        return Err(hypothesis(format!("need 0 < r1 < r0, got r1 = {r1}, r0 = {r0}")));
    }
    let edge = a.value(r0).powi(2) + b.value(r0).powi(2) - 1.0;
    if edge.abs() > PROFILE_SLACK {
        return Err(hypothesis(format!("A²(r0)+B²(r0) = {} ≠ 1 (ergosphere at r0)", edge + 1.0)));
    }
    let n = 2000;
    for i in 0..=n {
        let r = r1 + (r0 - r1) * i as f64 / n as f64;
        let (av, bv) = (a.value(r), b.value(r));
        if i < n && av * av + bv * bv - 1.0 <= -PROFILE_SLACK {
            return Err(hypothesis(format!("A²+B² ≤ 1 at r = {r:.6} (must exceed 1 on [r1, r0))")));
        }
        if !(bv > 0.0) {
            return Err(hypothesis(format!("B(r) ≤ 0 at r = {r:.6} (B > 0 required on [r1, r0])")));
        }
    }
    let a1 = a.value(r1);
    if a1.abs() <= 1.0 + PROFILE_SLACK {
        return Err(hypothesis(format!("|A(r1)| = {} ≤ 1", a1.abs())));
    }
    let fields = RadialProfileFields { a, b, r1, r0 };
    for target in [1.0, -1.0] {
        fields.simple_zeros(target)?;
    }
    Ok(fields)
}

impl RadialProfileFields {
    fn parts(&self, r: f64) -> (f64, f64, f64) {
        let (a, b) = (self.a.value(r), self.b.value(r));
        (a, b, (a * a + b * b - 1.0).max(0.0).sqrt())
    }

    pub fn plus(&self, r: f64) -> (f64, f64) {
        let (a, b, q) = self.parts(r);
        // (AB + q)/(A + 1) = (A − 1)(B² − 1)/(AB − q); use whichever side
        // avoids cancellation.
        let dth = if a >= 0.0 { (a * b + q) / (a + 1.0) } else { (a - 1.0) * (b * b - 1.0) / (a * b - q) };
        (a - 1.0, dth / r)
    }

    pub fn minus(&self, r: f64) -> (f64, f64) {
        let (a, b, q) = self.parts(r);
        let dth = if a <= 0.0 { (a * b - q) / (a - 1.0) } else { (a + 1.0) * (b * b - 1.0) / (a * b + q) };
        (a + 1.0, dth / r)
    }

    pub fn cartesian(&self, plus: bool, x: &[f64]) -> [f64; 2] {
        let r = x[0].hypot(x[1]);
        let (dr, dth) = if plus { self.plus(r) } else { self.minus(r) };
        let e = [x[0] / r, x[1] / r];
        [dr * e[0] - r * dth * e[1], dr * e[1] + r * dth * e[0]]
    }

    /// Zeros of A(r) − target in (r1, r0), each checked to be simple.
    pub fn simple_zeros(&self, target: f64) -> Result<Vec<f64>> {
        let f = |r: f64| self.a.value(r) - target;
        let n = 4000;
        let mut out = Vec::new();
        let mut prev_r = self.r1;
        let mut prev = f(prev_r);
        for i in 1..=n {
            let r = self.r1 + (self.r0 - self.r1) * i as f64 / n as f64;
            let cur = f(r);
            if prev == 0.0 && prev_r > self.r1 {
                out.push(prev_r);
            } else if prev * cur < 0.0 {
                let (mut lo, mut hi) = (prev_r, r);
                while hi - lo > 1e-15 * hi {
                    let mid = 0.5 * (lo + hi);
                    if f(mid) * f(lo) <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                out.push(0.5 * (lo + hi));
            } else if cur.abs() < PROFILE_SLACK && prev.abs() > cur.abs() && i < n {
                let next = f(self.r1 + (self.r0 - self.r1) * (i + 1) as f64 / n as f64);
                if next * cur > 0.0 && next.abs() > cur.abs() {
                    return Err(hypothesis(format!("A(r) − ({target}) has a non-simple zero near r = {r:.6}")));
                }
            }
            prev_r = r;
            prev = cur;
        }
        for z in &out {
            if self.a.value_and_slope(*z).1.abs() <= PROFILE_SLACK {
                return Err(hypothesis(format!("A(r) − ({target}) has a non-simple zero at r = {z:.6}")));
            }
        }
        Ok(out)
    }
}

/// Planar metric on the (r, θ) strip obtained from an azimuth-independent
/// 3D metric through x = (r sinθ cosφ, r sinθ sinφ, r cosθ) at φ = 0.
#[derive(Clone, Debug)]
pub struct AxisymmetricReduction {
    base: Arc<dyn MetricField>,
    domain: Domain,
}

/// r and θ ranges of the reduced strip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisymmetricStrip {
    pub r_min: f64,
    pub r_max: f64,
    pub theta_min: f64,
    pub theta_max: f64,
}

fn spherical_rows(r: f64, th: f64, ph: f64) -> ([f64; 3], [f64; 3], [f64; 3]) {
    let (st, ct) = th.sin_cos();
    let (sp, cp) = ph.sin_cos();
    let x = [r * st * cp, r * st * sp, r * ct];
    let grad_r = [st * cp, st * sp, ct];
    let grad_th = [ct * cp / r, ct * sp / r, -st / r];
    (x, grad_r, grad_th)
}

fn reduce_at(base: &dyn MetricField, r: f64, th: f64, ph: f64) -> Matrix {
    let (x, gr, gt) = spherical_rows(r, th, ph);
    let g = base.eval(&x);
    let mut j = Matrix::zeros(4);
    j[(0, 0)] = 1.0;
    for c in 0..3 {
        j[(1, c + 1)] = gr[c];
        j[(2, c + 1)] = gt[c];
    }
    let full = g.congruence(&j);
    let mut out = Matrix::zeros(3);
    for a in 0..3 {
        for b in 0..3 {
            out[(a, b)] = full[(a, b)];
        }
    }
    out
}

pub fn reduce_axisymmetric(m: Arc<dyn MetricField>, strip: AxisymmetricStrip) -> Result<AxisymmetricReduction> {
    if m.dim() != 3 {
        return Err(Error::Dimension { expected: 3, got: m.dim() });
    }
    if !(strip.r_min > 0.0 && strip.r_max > strip.r_min && strip.theta_min > 0.0 && strip.theta_max < PI && strip.theta_max > strip.theta_min) {
        return Err(Error::InvalidInput("axisymmetric strip needs 0 < r_min < r_max, 0 < θ_min < θ_max < π".into()));
    }
    let mut mismatch: f64 = 0.0;
    for i in 0..6 {
        let r = strip.r_min + (strip.r_max - strip.r_min) * (i as f64 + 0.5) / 6.0;
        for j in 0..6 {
            let th = strip.theta_min + (strip.theta_max - strip.theta_min) * (j as f64 + 0.5) / 6.0;
            let reference = reduce_at(&*m, r, th, 0.0);
            let scale = reference.max_abs().max(1e-300);
            for ph in [0.7, 2.1, 4.0] {
                let other = reduce_at(&*m, r, th, ph);
                mismatch = mismatch.max(other.sub(&reference).max_abs() / scale);
            }
        }
    }
    if mismatch > 1e-10 {
        return Err(Error::NotAxisymmetric { mismatch });
    }
    let domain = Domain::Box { min: vec![strip.r_min, strip.theta_min], max: vec![strip.r_max, strip.theta_max] };
    Ok(AxisymmetricReduction { base: m, domain })
}

impl MetricField for AxisymmetricReduction {
    fn dim(&self) -> usize {
        2
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn eval(&self, x: &[f64]) -> Matrix {
        reduce_at(&*self.base, x[0], x[1], 0.0)
    }
}

/// Unit vector perpendicular to `v`, rotated +90°.
pub fn perp(v: [f64; 2]) -> [f64; 2] {
    [-v[1], v[0]]
}

/// Cross product of two directions after normalization.
pub fn direction_cross(a: [f64; 2], b: [f64; 2]) -> f64 {
    cross2(normalize2(a), normalize2(b)).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::media::{acoustic_metric, MediumFlow, VortexFlow};
    use crate::metric::Minkowski;

    fn vortex_metric(a: f64, b: f64) -> Arc<dyn MetricField> {
        let f = MediumFlow::acoustic(Arc::new(VortexFlow::new(a, b)), 1.0, 1.0, Domain::annulus(0.3, 1.25));
        Arc::new(acoustic_metric(&f).unwrap())
    }

    #[test]
    fn fields_match_polar_forms() {
        let m = vortex_metric(0.6, 0.8);
        let region = ErgoRegion::circular([0.0, 0.0], 1.0, 0.3).unwrap();
        let fp = build_char_fields(m, region).unwrap();
        let polar = polar_vortex_fields(0.6, 0.8, SignCase::APos);
        let x = [0.8, 0.0];
        let minus = fp.raw(FieldChoice::Minus, &x).unwrap().dir;
        let plus = fp.raw(FieldChoice::Plus, &x).unwrap().dir;
        assert!(direction_cross(minus, polar.cartesian(true, &x)) < 1e-10);
        assert!(direction_cross(plus, polar.cartesian(false, &x)) < 1e-10);
    }

    #[test]
    fn polar_examples() {
        let p = polar_vortex_fields(0.6, 0.8, SignCase::APos);
        assert_eq!(p.plus(0.6).0, 0.0);
        assert!((p.plus(0.8).0 + 0.28).abs() < 1e-15);
        assert!(p.minus(0.8).1.abs() < 1e-15);
    }

    #[test]
    fn kernel_direction_on_vortex_ergosphere() {
        let m = vortex_metric(0.6, 0.8);
        let b = kernel_direction(&*m, &[1.0, 0.0]).unwrap();
        assert!((b[0] - 0.6).abs() < 1e-12 && (b[1] - 0.8).abs() < 1e-12);
        let flat = Minkowski::new(Domain::square(1.0));
        assert!(matches!(kernel_direction(&flat, &[0.0, 0.0]), Err(Error::NotOnErgosphere { .. })));
    }

    #[test]
    fn flux_verdicts() {
        for (a, want) in [(0.6, FluxVerdict::AllOutward), (-0.6, FluxVerdict::AllInward), (0.2, FluxVerdict::Mixed)] {
            let m = vortex_metric(a, 0.8);
            let r0 = (a * a + 0.64f64).sqrt();
            let region = ErgoRegion::circular([0.0, 0.0], r0, 0.3).unwrap();
            let rep = s1_flux_test(&*m, &region).unwrap();
            assert_eq!(rep.verdict, want, "A = {a}: {rep:?}");
            if want == FluxVerdict::Mixed {
                assert!(!rep.offending.is_empty());
            }
        }
    }

    #[test]
    fn located_region_matches_circle() {
        let m = vortex_metric(0.6, 0.8);
        let region = ErgoRegion::locate(&*m, [0.0, 0.0], 0.3, 1.25, 128).unwrap();
        for s in region.outer().samples() {
            assert!((s.point[0].hypot(s.point[1]) - 1.0).abs() < 1e-10);
            assert!((s.normal[0] - s.point[0]).abs() < 1e-8);
        }
        region.validate(&*m).unwrap();
        assert!((region.outer().radius_at(0.123) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn profile_hypotheses() {
        let ok = radial_profile_fields(Profile::Polynomial(vec![2.0, -2.0]), Profile::Polynomial(vec![1.0]), 0.25, 1.0)
            .unwrap();
        assert_eq!(ok.simple_zeros(1.0).unwrap().len(), 1);
        assert!((ok.simple_zeros(1.0).unwrap()[0] - 0.5).abs() < 1e-12);
        assert!(ok.simple_zeros(-1.0).unwrap().is_empty());
        let bad = radial_profile_fields(Profile::Polynomial(vec![2.0, -2.0]), Profile::Polynomial(vec![1.0]), 0.6, 1.0);
        assert!(matches!(bad, Err(Error::HypothesisViolation { .. })));
    }

    #[test]
    fn minkowski_reduces_to_spherical() {
        let m: Arc<dyn MetricField> = Arc::new(Minkowski::new(Domain::cube(3.0)));
        let strip = AxisymmetricStrip { r_min: 0.5, r_max: 1.5, theta_min: 0.2, theta_max: 2.9 };
        let red = reduce_axisymmetric(m, strip).unwrap();
        let g = red.eval(&[1.3, 0.8]);
        assert!((g[(1, 1)] + 1.0).abs() < 1e-14);
        assert!((g[(2, 2)] + 1.0 / 1.69).abs() < 1e-14);
        assert!(g[(1, 2)].abs() < 1e-14);
    }
}
