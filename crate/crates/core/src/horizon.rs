//! Horizons as closed characteristic curves: limit cycles of f± found on a
//! radial Poincaré section, their enumeration, and black/white
//! classification by the tilt of the light cones across the curve.

use std::cell::Cell;
use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{field_from_matrix, CharFieldPair, ErgoRegion, FieldChoice};
use crate::media::MediumFlow;
use crate::metric::MetricField;
use crate::ode::{Dopri45, OdeSettings};
use crate::rays::TimeOrientation;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LimitCycleOptions {
    /// Angle of the radial section ray, measured at the region center.
    pub section_angle: f64,
    /// Fixed-point tolerance |R(r) − r| on the return map.
    pub tol_fixed: f64,
    pub max_windings: usize,
    /// Points on the resampled orbit.
    pub samples: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Seeds per boundary curve in [`enumerate_cycles`].
    pub seed_count: usize,
    pub max_steps: usize,
}

impl Default for LimitCycleOptions {
    fn default() -> Self {
        LimitCycleOptions {
            section_angle: 0.0,
            tol_fixed: 1e-10,
            max_windings: 200,
            samples: 512,
            rel_tol: 1e-12,
            abs_tol: 1e-12,
            seed_count: 8,
            max_steps: 2_000_000,
        }
    }
}

/// Starting point and initial heading for a field trajectory.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleSeed {
    pub point: [f64; 2],
    pub heading: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedOrbit {
    pub points: Vec<[f64; 2]>,
    /// Arc length of one revolution (the fields are unit speed).
    pub period: f64,
    pub closure_residual: f64,
    /// Area centroid of the polyline, the reference for radii.
    pub center: [f64; 2],
    pub mean_radius: f64,
    /// max |r − mean_radius| over the samples.
    pub radius_deviation: f64,
    pub field_used: FieldChoice,
    /// +1 counterclockwise, −1 clockwise.
    pub winding: i32,
    /// Fixed point of the return map along the section ray.
    pub section_radius: f64,
    /// Direction of x₀ along the null bicharacteristics riding the
    /// approaching spiral.
    pub approach: TimeOrientation,
    pub windings_used: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Black,
    White,
    Undetermined,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DetectionMethod {
    ErgosphereCharacteristic,
    LimitCycle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FlowVerdict {
    Incoming,
    Outgoing,
    Mixed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HoleReport {
    pub method: DetectionMethod,
    pub classification: Classification,
    /// Closed polyline of the horizon (the orbit, or the ergosphere).
    pub curve: Vec<[f64; 2]>,
    pub mean_radius: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field_used: Option<FieldChoice>,
    pub beta_samples: Vec<f64>,
    pub beta_min: f64,
    pub beta_max: f64,
    /// Largest |Σ g^{jk} ν_j ν_k| / ‖g^{jk}‖ over the curve normals.
    pub max_characteristic_residual: f64,
    /// Every |β| below the sign threshold: the cones are tangent to the curve.
    pub tangential_cone: bool,
    pub flow_check: Option<FlowVerdict>,
}

impl HoleReport {
    /// A `LimitCycle` report on the ergosphere itself means the ergosphere
    /// was not characteristic and the search moved to the interior.
    pub fn is_deferral(&self) -> bool {
        self.method == DetectionMethod::LimitCycle && self.max_characteristic_residual > CHARACTERISTIC_TOL
    }
}

const BETA_SIGN_TOL: f64 = 1e-10;
const CHARACTERISTIC_TOL: f64 = 1e-6;

fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w == -PI {
        PI
    } else {
        w
    }
}

struct Node {
    sigma: f64,
    y: [f64; 2],
    heading: [f64; 2],
}

struct Crossing {
    sigma: f64,
    point: [f64; 2],
    heading: [f64; 2],
    sense: i8,
    forward_votes: usize,
    backward_votes: usize,
}

struct Tracer<'a> {
    fields: &'a CharFieldPair,
    which: FieldChoice,
    opts: &'a LimitCycleOptions,
    center: [f64; 2],
    diam: f64,
}

impl<'a> Tracer<'a> {
    fn new(fields: &'a CharFieldPair, which: FieldChoice, opts: &'a LimitCycleOptions) -> Self {
        let region = fields.region();
        Tracer { fields, which, opts, center: region.center(), diam: region.diameter() }
    }

    fn offset(&self, x: &[f64]) -> f64 {
        wrap_angle((x[1] - self.center[1]).atan2(x[0] - self.center[0]) - self.opts.section_angle)
    }

    fn section_point(&self, r: f64) -> [f64; 2] {
        let (s, c) = self.opts.section_angle.sin_cos();
        [self.center[0] + r * c, self.center[1] + r * s]
    }

    fn section_bounds(&self) -> (f64, f64) {
        let region = self.fields.region();
        let th = self.opts.section_angle;
        (region.inner().radius_at(th), region.outer().radius_at(th))
    }

    fn settings(&self) -> OdeSettings {
        OdeSettings::default()
            .tolerances(self.opts.rel_tol, self.opts.abs_tol)
            .h_max(0.02 * self.diam)
            .max_steps(self.opts.max_steps)
    }

    fn orientation_sign(&self, x: &[f64], d: [f64; 2]) -> f64 {
        let g = self.fields.metric().eval(x);
        let beta = -g[(0, 1)] * d[1] + g[(0, 2)] * d[0];
        match self.which {
            FieldChoice::Plus => beta,
            FieldChoice::Minus => -beta,
        }
    }

    /// Integrates from `start` until the next section crossing (in `sense`,
    /// if given). Optionally records accepted states.
    fn run(
        &self,
        start: [f64; 2],
        heading: [f64; 2],
        sense: Option<i8>,
        windings: usize,
        mut path: Option<&mut Vec<Node>>,
    ) -> Result<Crossing> {
        let fields = self.fields;
        let which = self.which;
        let region = fields.region();
        let reference = Cell::new(fields.aligned(which, &start, heading)?);
        let mut rhs = |_s: f64, y: &[f64], dy: &mut [f64]| match fields.aligned(which, y, reference.get()) {
            Ok(d) => {
                dy[0] = d[0];
                dy[1] = d[1];
            }
            Err(_) => {
                dy[0] = f64::NAN;
                dy[1] = f64::NAN;
            }
        };
        let mut ode = Dopri45::new(self.settings(), &mut rhs, 0.0, &start, Some(1e-3 * self.diam));
        let budget = 10.0 * PI * self.diam;
        let guard = 1e-3 * self.diam;
        let escape_tol = 1e-9 * self.diam;
        let (mut fwd, mut bwd) = (0usize, 0usize);
        if let Some(p) = path.as_deref_mut() {
            p.push(Node { sigma: 0.0, y: start, heading: reference.get() });
        }
        loop {
            if ode.s() > budget || ode.steps() >= self.opts.max_steps {
                return Err(Error::NoConvergence { windings });
            }
            let psi_prev = self.offset(ode.y());
            ode.step(&mut rhs)?;
            let y = [ode.y()[0], ode.y()[1]];
            if !(y[0].is_finite() && y[1].is_finite()) {
                return Err(Error::StepFailure { s: ode.s(), h_min: ode.settings().h_min });
            }
            if let Some(b) = region.exit_boundary(&y, escape_tol) {
                return Err(Error::EscapedRegion(b));
            }
            let d = fields.aligned(which, &y, reference.get())?;
            reference.set(d);
            let o = self.orientation_sign(&y, d);
            if o > 1e-12 {
                fwd += 1;
            } else if o < -1e-12 {
                bwd += 1;
            }
            if let Some(p) = path.as_deref_mut() {
                p.push(Node { sigma: ode.s(), y, heading: d });
            }
            let psi = self.offset(&y);
            if ode.s() <= guard || psi_prev.abs() >= FRAC_PI_2 || psi.abs() >= FRAC_PI_2 {
                continue;
            }
            let crossed: i8 = if psi_prev < 0.0 && psi >= 0.0 {
                1
            } else if psi_prev > 0.0 && psi <= 0.0 {
                -1
            } else {
                0
            };
            if crossed == 0 || sense.is_some_and(|s| s != crossed) {
                continue;
            }
            let (sigma, yc) = ode.locate(
                &mut rhs,
                |y| {
                    let p = self.offset(y);
                    if crossed > 0 {
                        p >= 0.0
                    } else {
                        p <= 0.0
                    }
                },
                1e-12,
            );
            let point = [yc[0], yc[1]];
            let heading = fields.aligned(which, &point, reference.get())?;
            if let Some(p) = path {
                p.retain(|n| n.sigma < sigma);
                p.push(Node { sigma, y: point, heading });
            }
            return Ok(Crossing { sigma, point, heading, sense: crossed, forward_votes: fwd, backward_votes: bwd });
        }
    }

    fn return_map(&self, r: f64, heading: [f64; 2], sense: i8, windings: usize) -> Result<Crossing> {
        self.run(self.section_point(r), heading, Some(sense), windings, None)
    }

    fn radius_of(&self, p: [f64; 2]) -> f64 {
        (p[0] - self.center[0]).hypot(p[1] - self.center[1])
    }

    /// Uniform-σ resampling of a recorded revolution.
    fn resample(&self, path: &[Node], period: f64) -> Vec<[f64; 2]> {
        let fields = self.fields;
        let which = self.which;
        let reference = Cell::new(path[0].heading);
        let mut rhs = |_s: f64, y: &[f64], dy: &mut [f64]| match fields.aligned(which, y, reference.get()) {
            Ok(d) => {
                dy[0] = d[0];
                dy[1] = d[1];
            }
            Err(_) => {
                dy[0] = f64::NAN;
                dy[1] = f64::NAN;
            }
        };
        let mut ode = Dopri45::new(self.settings(), &mut rhs, 0.0, &path[0].y, Some(1e-3));
        let m = self.opts.samples;
        let mut out = Vec::with_capacity(m);
        let mut i = 0;
        for j in 0..m {
            let sigma = period * j as f64 / m as f64;
            while i + 1 < path.len() && path[i + 1].sigma <= sigma {
                i += 1;
            }
            let node = &path[i];
            if sigma == node.sigma {
                out.push(node.y);
            } else {
                reference.set(node.heading);
                let y = ode.trial_step(&mut rhs, node.sigma, &node.y, sigma - node.sigma);
                out.push([y[0], y[1]]);
            }
        }
        out
    }

    fn find(&self, seed: &CycleSeed) -> Result<ClosedOrbit> {
        let region = self.fields.region();
        if !region.contains(&seed.point, 1e-9 * self.diam) {
            return Err(Error::OutsideDomain { point: seed.point.to_vec() });
        }
        let first = self.run(seed.point, seed.heading, None, 0, None)?;
        let approach = if first.forward_votes > first.backward_votes {
            TimeOrientation::Forward
        } else if first.backward_votes > first.forward_votes {
            TimeOrientation::Backward
        } else {
            TimeOrientation::Stalled
        };
        let sense = first.sense;
        let (r_lo, r_hi) = self.section_bounds();

        let mut windings = 1;
        let mut x = self.radius_of(first.point);
        let mut cx = self.return_map(x, first.heading, sense, windings)?;
        windings += 1;
        let mut fx = self.radius_of(cx.point) - x;
        let mut prev: Option<(f64, f64)> = None;
        while fx.abs() > self.opts.tol_fixed {
            if windings >= self.opts.max_windings {
                return Err(Error::NoConvergence { windings });
            }
            let plain = self.radius_of(cx.point);
            let secant = prev.and_then(|(xp, fp)| {
                let xs = x - fx * (x - xp) / (fx - fp);
                (fx != fp && xs.is_finite() && xs > r_lo && xs < r_hi).then_some(xs)
            });
            let mut next = secant.unwrap_or(plain);
            let mut cn = self.return_map(next, cx.heading, sense, windings)?;
            windings += 1;
            let mut fnext = self.radius_of(cn.point) - next;
            if secant.is_some() && fnext.abs() >= fx.abs() {
                next = plain;
                cn = self.return_map(next, cx.heading, sense, windings)?;
                windings += 1;
                fnext = self.radius_of(cn.point) - next;
            }
            prev = Some((x, fx));
            x = next;
            cx = cn;
            fx = fnext;
        }

        let start = self.section_point(x);
        let mut path = Vec::new();
        let last = self.run(start, cx.heading, Some(sense), windings, Some(&mut path))?;
        let period = last.sigma;
        let closure_residual = (last.point[0] - start[0]).hypot(last.point[1] - start[1]);
        if closure_residual > 1e-8 * self.diam {
            return Err(Error::NoConvergence { windings });
        }
        let points = self.resample(&path, period);
        let winding = winding_number(&points);
        if winding.abs() != 1 || !is_simple(&points) {
            return Err(Error::NonSimpleOrbit { winding });
        }
        let center = area_centroid(&points);
        let radii: Vec<f64> = points.iter().map(|p| (p[0] - center[0]).hypot(p[1] - center[1])).collect();
        let mean_radius = radii.iter().sum::<f64>() / radii.len() as f64;
        let radius_deviation = radii.iter().map(|r| (r - mean_radius).abs()).fold(0.0, f64::max);
        Ok(ClosedOrbit {
            points,
            period,
            closure_residual,
            center,
            mean_radius,
            radius_deviation,
            field_used: self.which,
            winding,
            section_radius: x,
            approach,
            windings_used: windings,
        })
    }
}

/// Follows `which` from each seed in turn and returns the first limit cycle
/// reached. The error of the last seed is returned when none converges.
pub fn find_limit_cycle(
    fields: &CharFieldPair,
    which: FieldChoice,
    seeds: &[CycleSeed],
    opts: &LimitCycleOptions,
) -> Result<ClosedOrbit> {
    let tracer = Tracer::new(fields, which, opts);
    let mut last = Error::InvalidInput("no seeds given".into());
    for seed in seeds {
        match tracer.find(seed) {
            Ok(orbit) => return Ok(orbit),
            Err(e) => last = e,
        }
    }
    Err(last)
}

/// Seeds on S headed into Ω_e and on S1 headed into Ω_e, `k` per curve.
pub fn boundary_seeds(fields: &CharFieldPair, which: FieldChoice, k: usize) -> Vec<CycleSeed> {
    let region = fields.region();
    let mut seeds = Vec::new();
    for (curve, inward) in [(region.outer(), -1.0), (region.inner(), 1.0)] {
        let samples = curve.samples();
        for j in 0..k {
            let s = &samples[j * samples.len() / k];
            let n = [inward * s.normal[0], inward * s.normal[1]];
            if let Ok(h) = fields.aligned(which, &s.point, n) {
                seeds.push(CycleSeed { point: s.point, heading: h });
            }
        }
    }
    seeds
}

/// Symmetric Hausdorff distance between two closed polylines, measured from
/// each vertex to the nearest segment of the other curve.
pub fn hausdorff(a: &[[f64; 2]], b: &[[f64; 2]]) -> f64 {
    directed_hausdorff(a, b).max(directed_hausdorff(b, a))
}

fn directed_hausdorff(p: &[[f64; 2]], q: &[[f64; 2]]) -> f64 {
    if q.len() < 2 {
        return p
            .iter()
            .map(|x| q.iter().map(|y| (x[0] - y[0]).hypot(x[1] - y[1])).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
    }
    p.iter()
        .map(|x| {
            (0..q.len())
                .map(|k| segment_distance(*x, q[k], q[(k + 1) % q.len()]))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

fn segment_distance(x: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 { (((x[0] - a[0]) * d[0] + (x[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (x[0] - a[0] - t * d[0]).hypot(x[1] - a[1] - t * d[1])
}

fn run_seeds(fields: &CharFieldPair, jobs: &[(FieldChoice, CycleSeed)], opts: &LimitCycleOptions) -> Vec<ClosedOrbit> {
    jobs.par_iter()
        .map(|(which, seed)| Tracer::new(fields, *which, opts).find(seed).ok())
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

fn merge(found: &mut Vec<ClosedOrbit>, new: Vec<ClosedOrbit>, tol: f64) -> bool {
    let mut added = false;
    for orbit in new {
        if !found.iter().any(|o| hausdorff(&o.points, &orbit.points) < tol) {
            found.push(orbit);
            added = true;
        }
    }
    added
}

/// All limit cycles of both fields reachable from boundary seed fans and,
/// recursively, from the gaps between cycles already found. Repelling
/// cycles are reached by integrating against the field from a gap.
pub fn enumerate_cycles(fields: &CharFieldPair, opts: &LimitCycleOptions) -> Vec<ClosedOrbit> {
    let region = fields.region();
    let tol = 1e-4 * region.diameter();
    let mut jobs = Vec::new();
    for which in FieldChoice::BOTH {
        for seed in boundary_seeds(fields, which, opts.seed_count) {
            jobs.push((which, seed));
        }
    }
    let mut found = Vec::new();
    merge(&mut found, run_seeds(fields, &jobs, opts), tol);

    let th = opts.section_angle;
    let (r_lo, r_hi) = (region.inner().radius_at(th), region.outer().radius_at(th));
    let mut probed: Vec<(FieldChoice, f64, f64)> = Vec::new();
    for _round in 0..6 {
        let mut jobs = Vec::new();
        for which in FieldChoice::BOTH {
            let mut radii: Vec<f64> =
                found.iter().filter(|o| o.field_used == which).map(|o| o.section_radius).collect();
            radii.push(r_lo);
            radii.push(r_hi);
            radii.sort_by(f64::total_cmp);
            for w in radii.windows(2) {
                let (a, b) = (w[0], w[1]);
                if b - a < 2.0 * tol || probed.iter().any(|p| p.0 == which && (p.1 - a).abs() < tol && (p.2 - b).abs() < tol)
                {
                    continue;
                }
                probed.push((which, a, b));
                let p = Tracer::new(fields, which, opts).section_point(0.5 * (a + b));
                if let Ok(d) = fields.raw(which, &p) {
                    for sgn in [1.0, -1.0] {
                        jobs.push((which, CycleSeed { point: p, heading: [sgn * d.dir[0], sgn * d.dir[1]] }));
                    }
                }
            }
        }
        if jobs.is_empty() || !merge(&mut found, run_seeds(fields, &jobs, opts), tol) {
            break;
        }
    }
    found.sort_by(|a, b| {
        (a.field_used as u8).cmp(&(b.field_used as u8)).then(a.section_radius.total_cmp(&b.section_radius))
    });
    found
}

/// Periodic eighth-order central differences: unit outward normals of a
/// closed polyline with roughly uniform spacing.
pub fn curve_normals(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    const C: [f64; 4] = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
    let n = points.len();
    let ccw = signed_area(points) > 0.0;
    (0..n)
        .map(|i| {
            let mut t = [0.0; 2];
            for (k, c) in C.iter().enumerate() {
                let a = points[(i + k + 1) % n];
                let b = points[(i + n - (k + 1) % n) % n];
                t[0] += c * (a[0] - b[0]);
                t[1] += c * (a[1] - b[1]);
            }
            let nrm = if ccw { [t[1], -t[0]] } else { [-t[1], t[0]] };
            let l = nrm[0].hypot(nrm[1]);
            [nrm[0] / l, nrm[1] / l]
        })
        .collect()
}

pub fn signed_area(points: &[[f64; 2]]) -> f64 {
    let n = points.len();
    (0..n)
        .map(|i| {
            let (a, b) = (points[i], points[(i + 1) % n]);
            a[0] * b[1] - b[0] * a[1]
        })
        .sum::<f64>()
        * 0.5
}

pub fn area_centroid(points: &[[f64; 2]]) -> [f64; 2] {
    let n = points.len();
    let area = signed_area(points);
    let mut c = [0.0; 2];
    for i in 0..n {
        let (a, b) = (points[i], points[(i + 1) % n]);
        let w = a[0] * b[1] - b[0] * a[1];
        c[0] += (a[0] + b[0]) * w;
        c[1] += (a[1] + b[1]) * w;
    }
    [c[0] / (6.0 * area), c[1] / (6.0 * area)]
}

/// Winding number of the closed polyline around its vertex mean.
pub fn winding_number(points: &[[f64; 2]]) -> i32 {
    let n = points.len() as f64;
    let m = [points.iter().map(|p| p[0]).sum::<f64>() / n, points.iter().map(|p| p[1]).sum::<f64>() / n];
    let mut total = 0.0;
    for i in 0..points.len() {
        let (a, b) = (points[i], points[(i + 1) % points.len()]);
        let ta = (a[1] - m[1]).atan2(a[0] - m[0]);
        let tb = (b[1] - m[1]).atan2(b[0] - m[0]);
        total += wrap_angle(tb - ta);
    }
    (total / (2.0 * PI)).round() as i32
}

/// No two non-adjacent segments of the closed polyline intersect.
pub fn is_simple(points: &[[f64; 2]]) -> bool {
    let n = points.len();
    let orient = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    for i in 0..n {
        let (a, b) = (points[i], points[(i + 1) % n]);
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (points[j], points[(j + 1) % n]);
            let (d1, d2) = (orient(a, b, c), orient(a, b, d));
            let (d3, d4) = (orient(c, d, a), orient(c, d, b));
            if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                return false;
            }
        }
    }
    true
}

fn classify_betas(betas: &[f64]) -> (Classification, f64, f64, bool) {
    let bmin = betas.iter().cloned().fold(f64::INFINITY, f64::min);
    let bmax = betas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let class = if bmin > BETA_SIGN_TOL {
        Classification::White
    } else if bmax < -BETA_SIGN_TOL {
        Classification::Black
    } else {
        Classification::Undetermined
    };
    let tangential = bmin.abs().max(bmax.abs()) < BETA_SIGN_TOL;
    (class, bmin, bmax, tangential)
}

fn normal_scan(m: &dyn MetricField, points: &[[f64; 2]], normals: &[[f64; 2]]) -> (Vec<f64>, f64) {
    let mut betas = Vec::with_capacity(points.len());
    let mut worst: f64 = 0.0;
    for (p, nu) in points.iter().zip(normals) {
        let g = m.eval(p);
        let sp = g.spatial_block();
        worst = worst.max(sp.quad_form(nu).abs() / sp.max_abs().max(1e-300));
        betas.push(g[(0, 1)] * nu[0] + g[(0, 2)] * nu[1]);
    }
    (betas, worst)
}

/// White when Σ g^{0j}ν_j > 0 along the whole curve for the outward normal
/// ν (forward cones lean outward), Black when it is negative throughout.
/// The curve must be characteristic.
pub fn classify_curve(m: &dyn MetricField, points: &[[f64; 2]]) -> Result<HoleReport> {
    check_curve(m, points)?;
    classify_with_normals(m, points, &curve_normals(points))
}

fn check_curve(m: &dyn MetricField, points: &[[f64; 2]]) -> Result<()> {
    if m.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: m.dim() });
    }
    if points.len() < 9 {
        return Err(Error::InvalidInput("a closed curve needs at least 9 samples".into()));
    }
    Ok(())
}

fn classify_with_normals(m: &dyn MetricField, points: &[[f64; 2]], normals: &[[f64; 2]]) -> Result<HoleReport> {
    let (betas, worst) = normal_scan(m, points, normals);
    if worst > CHARACTERISTIC_TOL {
        return Err(Error::NotCharacteristic { residual: worst });
    }
    let (classification, beta_min, beta_max, tangential_cone) = classify_betas(&betas);
    let c = area_centroid(points);
    let mean_radius = points.iter().map(|p| (p[0] - c[0]).hypot(p[1] - c[1])).sum::<f64>() / points.len() as f64;
    Ok(HoleReport {
        method: DetectionMethod::LimitCycle,
        classification,
        curve: points.to_vec(),
        mean_radius,
        field_used: None,
        beta_samples: betas,
        beta_min,
        beta_max,
        max_characteristic_residual: worst,
        tangential_cone,
        flow_check: None,
    })
}

/// Largest angle (as a sine) allowed between the polyline normal and the
/// field normal before an orbit is judged not to follow its field.
const TRACKING_TOL: f64 = 1e-3;

/// Classifies a limit cycle using the normals of the field it is an integral
/// curve of, oriented outward by the polyline. Polyline differences lose
/// accuracy where the metric is only piecewise smooth (gridded data), the
/// field direction does not.
pub fn classify_closed_characteristic(m: &dyn MetricField, orbit: &ClosedOrbit) -> Result<HoleReport> {
    check_curve(m, &orbit.points)?;
    let outward = curve_normals(&orbit.points);
    let mut normals = Vec::with_capacity(outward.len());
    for (p, out) in orbit.points.iter().zip(&outward) {
        let f = field_from_matrix(&m.eval(p), orbit.field_used)
            .ok_or(Error::NotCharacteristic { residual: f64::INFINITY })?
            .dir;
        let nu = [-f[1], f[0]];
        let cross = nu[0] * out[1] - nu[1] * out[0];
        if cross.abs() > TRACKING_TOL {
            return Err(Error::NotCharacteristic { residual: cross.abs() });
        }
        let sign = if nu[0] * out[0] + nu[1] * out[1] >= 0.0 { 1.0 } else { -1.0 };
        normals.push([sign * nu[0], sign * nu[1]]);
    }
    let mut rep = classify_with_normals(m, &orbit.points, &normals)?;
    rep.mean_radius = orbit.mean_radius;
    rep.field_used = Some(orbit.field_used);
    Ok(rep)
}

/// Classifies S directly when it is a characteristic curve; otherwise
/// returns an undetermined `LimitCycle` deferral carrying the residual.
pub fn classify_ergosphere(m: &dyn MetricField, region: &ErgoRegion) -> HoleReport {
    let samples = region.outer().samples();
    let points: Vec<[f64; 2]> = samples.iter().map(|s| s.point).collect();
    let normals: Vec<[f64; 2]> = samples.iter().map(|s| s.normal).collect();
    let (betas, worst) = normal_scan(m, &points, &normals);
    let centroid = area_centroid(&points);
    let mean_radius =
        points.iter().map(|p| (p[0] - centroid[0]).hypot(p[1] - centroid[1])).sum::<f64>() / points.len() as f64;
    let characteristic = worst <= CHARACTERISTIC_TOL;
    let (classification, beta_min, beta_max, tangential_cone) = if characteristic {
        classify_betas(&betas)
    } else {
        let (_, lo, hi, t) = classify_betas(&betas);
        (Classification::Undetermined, lo, hi, t)
    };
    HoleReport {
        method: if characteristic { DetectionMethod::ErgosphereCharacteristic } else { DetectionMethod::LimitCycle },
        classification,
        curve: points,
        mean_radius,
        field_used: None,
        beta_samples: betas,
        beta_min,
        beta_max,
        max_characteristic_residual: worst,
        tangential_cone,
        flow_check: None,
    }
}

/// Sign of w·ν_in over a closed curve. Incoming when no sample points
/// outward and at least one points inward; Outgoing symmetrically.
pub fn gordon_flow_crosscheck(f: &MediumFlow, curve: &[[f64; 2]]) -> FlowVerdict {
    let normals = curve_normals(curve);
    let flux: Vec<f64> = curve
        .iter()
        .zip(&normals)
        .map(|(p, n)| {
            let w = f.w(p);
            -(w[0] * n[0] + w[1] * n[1])
        })
        .collect();
    let scale = curve
        .iter()
        .map(|p| {
            let w = f.w(p);
            w[0].hypot(w[1])
        })
        .fold(0.0, f64::max);
    let tol = 1e-10 * scale.max(1e-300);
    let any_in = flux.iter().any(|v| *v > tol);
    let any_out = flux.iter().any(|v| *v < -tol);
    match (any_in, any_out) {
        (true, false) => FlowVerdict::Incoming,
        (false, true) => FlowVerdict::Outgoing,
        _ => FlowVerdict::Mixed,
    }
}

/// Whether a flow verdict agrees with a classification: Incoming ⇔ Black,
/// Outgoing ⇔ White.
pub fn verdict_agrees(class: Classification, verdict: FlowVerdict) -> bool {
    matches!(
        (class, verdict),
        (Classification::Black, FlowVerdict::Incoming) | (Classification::White, FlowVerdict::Outgoing)
    )
}
