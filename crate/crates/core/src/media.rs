//! Moving media: flow fields, the Gordon and acoustic metrics built from
//! them, the ergosphere function and flow-line tracing.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::metric::{Domain, MetricField, MetricGradient, SpatialPoint};
use crate::ode::{Dopri45, OdeSettings};

/// Smooth scalar field with gradient (refraction index, density).
pub trait ScalarField: Send + Sync + fmt::Debug {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> [f64; 3];
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Uniform(pub f64);

impl ScalarField for Uniform {
    fn value(&self, _x: &[f64]) -> f64 {
        self.0
    }
    fn gradient(&self, _x: &[f64]) -> [f64; 3] {
        [0.0; 3]
    }
}

/// Spatial velocity field w(x) with Jacobian `jac[i][p] = ∂w_i/∂x_p`.
pub trait VelocityField: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> [f64; 3];
    fn jacobian(&self, x: &[f64]) -> [[f64; 3]; 3] {
        fd_velocity_jacobian(self, x, 1e-6)
    }
}

pub fn fd_velocity_jacobian<V: VelocityField + ?Sized>(v: &V, x: &[f64], h: f64) -> [[f64; 3]; 3] {
    let n = v.dim();
    let mut jac = [[0.0; 3]; 3];
    for c in 0..n {
        let mut a = x.to_vec();
        a[c] += h;
        let mut b = x.to_vec();
        b[c] -= h;
        let (wa, wb) = (v.eval(&a), v.eval(&b));
        for i in 0..n {
            jac[i][c] = (wa[i] - wb[i]) / (2.0 * h);
        }
    }
    jac
}

/// Constant velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformFlow {
    pub w: Vec<f64>,
}

impl VelocityField for UniformFlow {
    fn dim(&self) -> usize {
        self.w.len()
    }
    fn eval(&self, _x: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        out[..self.w.len()].copy_from_slice(&self.w);
        out
    }
    fn jacobian(&self, _x: &[f64]) -> [[f64; 3]; 3] {
        [[0.0; 3]; 3]
    }
}

/// Planar vortex w = (A/r) r̂ + (B/r) θ̂ around `center`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VortexFlow {
    pub a: f64,
    pub b: f64,
    pub center: [f64; 2],
}

impl VortexFlow {
    pub fn new(a: f64, b: f64) -> Self {
        VortexFlow { a, b, center: [0.0, 0.0] }
    }
}

impl VelocityField for VortexFlow {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, x: &[f64]) -> [f64; 3] {
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        let r2 = dx * dx + dy * dy;
        [(self.a * dx - self.b * dy) / r2, (self.a * dy + self.b * dx) / r2, 0.0]
    }
    fn jacobian(&self, x: &[f64]) -> [[f64; 3]; 3] {
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        let r2 = dx * dx + dy * dy;
        let r4 = r2 * r2;
        let (a, b) = (self.a, self.b);
        // w1 = (a dx − b dy)/r², w2 = (a dy + b dx)/r²
        let n1 = a * dx - b * dy;
        let n2 = a * dy + b * dx;
        [
            [a / r2 - 2.0 * n1 * dx / r4, -b / r2 - 2.0 * n1 * dy / r4, 0.0],
            [b / r2 - 2.0 * n2 * dx / r4, a / r2 - 2.0 * n2 * dy / r4, 0.0],
            [0.0; 3],
        ]
    }
}

/// One-dimensional radial profile.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    /// Coefficients in ascending degree.
    Polynomial(Vec<f64>),
    /// Piecewise-linear interpolation through `(r, value)` nodes sorted by r.
    Tabulated { r: Vec<f64>, values: Vec<f64> },
}

impl Profile {
    pub fn value(&self, r: f64) -> f64 {
        self.value_and_slope(r).0
    }

    pub fn value_and_slope(&self, r: f64) -> (f64, f64) {
        match self {
            Profile::Polynomial(c) => {
                let mut v = 0.0;
                let mut d = 0.0;
                for coef in c.iter().rev() {
                    d = d * r + v;
                    v = v * r + coef;
                }
                (v, d)
            }
            Profile::Tabulated { r: nodes, values } => {
                let n = nodes.len();
                let i = match nodes.iter().position(|&t| t > r) {
                    Some(0) => 0,
                    Some(i) => i - 1,
                    None => n - 2,
                }
                .min(n - 2);
                let slope = (values[i + 1] - values[i]) / (nodes[i + 1] - nodes[i]);
                (values[i] + slope * (r - nodes[i]), slope)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Profile::Polynomial(c) if c.is_empty() => {
                Err(Error::InvalidInput("polynomial profile needs at least one coefficient".into()))
            }
            Profile::Polynomial(c) if c.iter().any(|v| !v.is_finite()) => {
                Err(Error::InvalidInput("polynomial profile has non-finite coefficients".into()))
            }
            Profile::Tabulated { r, values } => {
                if r.len() < 2 || r.len() != values.len() {
                    return Err(Error::InvalidInput("tabulated profile needs ≥2 matching nodes".into()));
                }
                if r.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::InvalidInput("tabulated profile nodes must increase".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Swirling flow w = A(r) r̂ + B(r) θ̂ with radial profiles.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialProfileFlow {
    pub a: Profile,
    pub b: Profile,
    pub center: [f64; 2],
}

impl VelocityField for RadialProfileFlow {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, x: &[f64]) -> [f64; 3] {
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        let r = dx.hypot(dy);
        let (a, b) = (self.a.value(r), self.b.value(r));
        [(a * dx - b * dy) / r, (a * dy + b * dx) / r, 0.0]
    }
    fn jacobian(&self, x: &[f64]) -> [[f64; 3]; 3] {
        let (dx, dy) = (x[0] - self.center[0], x[1] - self.center[1]);
        let r = dx.hypot(dy);
        let e = [dx / r, dy / r];
        let t = [-e[1], e[0]];
        let (a, da) = self.a.value_and_slope(r);
        let (b, db) = self.b.value_and_slope(r);
        // ∂e/∂x = (I − e eᵀ)/r, ∂t/∂x = J(I − e eᵀ)/r with J the +90° rotation.
        let mut jac = [[0.0; 3]; 3];
        for i in 0..2 {
            for p in 0..2 {
                let delta = if i == p { 1.0 } else { 0.0 };
                let de = (delta - e[i] * e[p]) / r;
                let dt = match i {
                    0 => -((if p == 1 { 1.0 } else { 0.0 }) - e[1] * e[p]) / r,
                    _ => ((if p == 0 { 1.0 } else { 0.0 }) - e[0] * e[p]) / r,
                };
                jac[i][p] = da * e[p] * e[i] + a * de + db * e[p] * t[i] + b * dt;
            }
        }
        jac
    }
}

/// Velocity given by closures; the Jacobian falls back to finite differences.
pub struct ClosureFlow {
    dim: usize,
    f: Box<dyn Fn(&[f64]) -> [f64; 3] + Send + Sync>,
}

impl ClosureFlow {
    pub fn new(dim: usize, f: impl Fn(&[f64]) -> [f64; 3] + Send + Sync + 'static) -> Self {
        ClosureFlow { dim, f: Box::new(f) }
    }
}

impl fmt::Debug for ClosureFlow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ClosureFlow").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl VelocityField for ClosureFlow {
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64]) -> [f64; 3] {
        (self.f)(x)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MediumKind {
    Gordon,
    Acoustic,
}

/// Source data for a Gordon or acoustic metric.
#[derive(Clone, Debug)]
pub struct MediumFlow {
    pub kind: MediumKind,
    pub velocity: Arc<dyn VelocityField>,
    /// Light speed (Gordon) or sound speed (acoustic).
    pub c: f64,
    /// Refraction index n(x); ignored for acoustic media.
    pub n_refr: Arc<dyn ScalarField>,
    /// Density ρ(x); ignored for Gordon media.
    pub rho: Arc<dyn ScalarField>,
    pub domain: Domain,
}

impl MediumFlow {
    pub fn gordon(velocity: Arc<dyn VelocityField>, c: f64, n_refr: f64, domain: Domain) -> Self {
        MediumFlow {
            kind: MediumKind::Gordon,
            velocity,
            c,
            n_refr: Arc::new(Uniform(n_refr)),
            rho: Arc::new(Uniform(1.0)),
            domain,
        }
    }

    pub fn acoustic(velocity: Arc<dyn VelocityField>, c: f64, rho: f64, domain: Domain) -> Self {
        MediumFlow {
            kind: MediumKind::Acoustic,
            velocity,
            c,
            n_refr: Arc::new(Uniform(1.0)),
            rho: Arc::new(Uniform(rho)),
            domain,
        }
    }

    pub fn dim(&self) -> usize {
        self.velocity.dim()
    }

    pub fn w(&self, x: &[f64]) -> [f64; 3] {
        self.velocity.eval(x)
    }
}

/// Flow four-velocity (v⁰, v) with v⁰ = (1 − |w|²/c²)^{-1/2}, v = v⁰ w / c.
pub fn four_velocity(f: &MediumFlow, x: &[f64]) -> Result<(f64, [f64; 3])> {
    let w = f.w(x);
    let n = f.dim();
    let speed2 = dot(&w[..n], &w[..n]);
    let beta2 = speed2 / (f.c * f.c);
    if !(beta2 < 1.0) {
        return Err(Error::SuperluminalFlow { point: x.to_vec(), speed: speed2.sqrt(), c: f.c });
    }
    let v0 = 1.0 / (1.0 - beta2).sqrt();
    let mut v = [0.0; 3];
    for i in 0..n {
        v[i] = v0 * w[i] / f.c;
    }
    Ok((v0, v))
}

/// |w|² − c²/n² (Gordon) or |w|² − c² (acoustic): negative outside the
/// ergosphere, positive inside.
pub fn ergo_function(f: &MediumFlow, x: &[f64]) -> f64 {
    let w = f.w(x);
    let n = f.dim();
    let speed2 = dot(&w[..n], &w[..n]);
    match f.kind {
        MediumKind::Gordon => {
            let nr = f.n_refr.value(x);
            speed2 - f.c * f.c / (nr * nr)
        }
        MediumKind::Acoustic => speed2 - f.c * f.c,
    }
}

/// Gordon metric g^{jk} = η^{jk} + (n² − 1) v^j v^k.
#[derive(Clone, Debug)]
pub struct GordonMetric {
    flow: MediumFlow,
}

impl GordonMetric {
    pub fn flow(&self) -> &MediumFlow {
        &self.flow
    }

    /// Covariant form g_{jk} = η_{jk} + (n⁻² − 1) v_j v_k with v_0 = v⁰,
    /// v_j = −v^j, computed directly rather than by inversion.
    pub fn covariant(&self, x: &[f64]) -> Result<Matrix> {
        let n = self.flow.dim();
        let (v0, v) = four_velocity(&self.flow, x)?;
        let nr = self.flow.n_refr.value(x);
        let k = 1.0 / (nr * nr) - 1.0;
        let mut low = [0.0; 4];
        low[0] = v0;
        for i in 0..n {
            low[i + 1] = -v[i];
        }
        let mut g = eta(n);
        for a in 0..=n {
            for b in 0..=n {
                g[(a, b)] += k * low[a] * low[b];
            }
        }
        Ok(g)
    }
}

fn eta(n: usize) -> Matrix {
    let mut d = vec![-1.0; n + 1];
    d[0] = 1.0;
    Matrix::diag(&d)
}

/// Largest |w|/c over an audit grid of the flow's domain.
fn max_speed_ratio(f: &MediumFlow) -> (f64, SpatialPoint) {
    let mut worst = (0.0, SpatialPoint::xy(0.0, 0.0));
    for x in f.domain.sample_grid(48).into_iter().chain(boundary_samples(&f.domain)) {
        let w = f.w(&x);
        let r = dot(&w[..f.dim()], &w[..f.dim()]).sqrt() / f.c;
        if r > worst.0 || !r.is_finite() {
            worst = (r, x);
            if !r.is_finite() {
                break;
            }
        }
    }
    worst
}

fn boundary_samples(d: &Domain) -> Vec<SpatialPoint> {
    match d {
        Domain::Annulus { center, r_inner, r_outer } => (0..256)
            .flat_map(|j| {
                let t = 2.0 * std::f64::consts::PI * j as f64 / 256.0;
                [*r_inner, *r_outer]
                    .map(|r| SpatialPoint::xy(center[0] + r * t.cos(), center[1] + r * t.sin()))
            })
            .collect(),
        Domain::Box { .. } => Vec::new(),
    }
}

pub fn gordon_metric(f: &MediumFlow) -> Result<GordonMetric> {
    if f.kind != MediumKind::Gordon {
        return Err(Error::WrongMediumKind { expected: "gordon" });
    }
    if !(f.c > 0.0) {
        return Err(Error::InvalidInput(format!("wave speed must be positive, got {}", f.c)));
    }
    let (ratio, at) = max_speed_ratio(f);
    if !(ratio < 1.0) {
        return Err(Error::SuperluminalFlow { point: at.to_vec(), speed: ratio * f.c, c: f.c });
    }
    Ok(GordonMetric { flow: f.clone() })
}

impl MetricField for GordonMetric {
    fn dim(&self) -> usize {
        self.flow.dim()
    }
    fn domain(&self) -> &Domain {
        &self.flow.domain
    }
    fn eval(&self, x: &[f64]) -> Matrix {
        let n = self.dim();
        let Ok((v0, v)) = four_velocity(&self.flow, x) else {
            return Matrix::zeros(n + 1).scale(f64::NAN);
        };
        let nr = self.flow.n_refr.value(x);
        let k = nr * nr - 1.0;
        let mut up = [0.0; 4];
        up[0] = v0;
        up[1..=n].copy_from_slice(&v[..n]);
        let mut g = eta(n);
        for a in 0..=n {
            for b in 0..=n {
                g[(a, b)] += k * up[a] * up[b];
            }
        }
        g
    }
    fn grad(&self, x: &[f64]) -> MetricGradient {
        let n = self.dim();
        let f = &self.flow;
        let mut out = [Matrix::zeros(n + 1); 3];
        let Ok((v0, v)) = four_velocity(f, x) else {
            return out.map(|m| m.scale(f64::NAN));
        };
        let w = f.w(x);
        let jw = f.velocity.jacobian(x);
        let nr = f.n_refr.value(x);
        let dn = f.n_refr.gradient(x);
        let k = nr * nr - 1.0;
        let c2 = f.c * f.c;
        let mut up = [0.0; 4];
        up[0] = v0;
        up[1..=n].copy_from_slice(&v[..n]);
        for p in 0..n {
            // ∂v⁰ = v⁰³ (w·∂w)/c², ∂v^i = (∂v⁰ w_i + v⁰ ∂w_i)/c
            let w_dw: f64 = (0..n).map(|i| w[i] * jw[i][p]).sum();
            let dv0 = v0 * v0 * v0 * w_dw / c2;
            let mut dup = [0.0; 4];
            dup[0] = dv0;
            for i in 0..n {
                dup[i + 1] = (dv0 * w[i] + v0 * jw[i][p]) / f.c;
            }
            let dk = 2.0 * nr * dn[p];
            for a in 0..=n {
                for b in 0..=n {
                    out[p][(a, b)] = dk * up[a] * up[b] + k * (dup[a] * up[b] + up[a] * dup[b]);
                }
            }
        }
        out
    }
}

/// Acoustic metric (1/(ρc)) [[1, vᵀ], [v, −c² I + v vᵀ]].
#[derive(Clone, Debug)]
pub struct AcousticMetric {
    flow: MediumFlow,
}

impl AcousticMetric {
    pub fn flow(&self) -> &MediumFlow {
        &self.flow
    }
}

pub fn acoustic_metric(f: &MediumFlow) -> Result<AcousticMetric> {
    if f.kind != MediumKind::Acoustic {
        return Err(Error::WrongMediumKind { expected: "acoustic" });
    }
    if !(f.c > 0.0) {
        return Err(Error::InvalidInput(format!("sound speed must be positive, got {}", f.c)));
    }
    Ok(AcousticMetric { flow: f.clone() })
}

fn acoustic_unscaled(n: usize, c: f64, v: &[f64; 3]) -> Matrix {
    let mut g = Matrix::zeros(n + 1);
    g[(0, 0)] = 1.0;
    for i in 0..n {
        g[(0, i + 1)] = v[i];
        g[(i + 1, 0)] = v[i];
        for j in 0..n {
            g[(i + 1, j + 1)] = v[i] * v[j] - if i == j { c * c } else { 0.0 };
        }
    }
    g
}

impl MetricField for AcousticMetric {
    fn dim(&self) -> usize {
        self.flow.dim()
    }
    fn domain(&self) -> &Domain {
        &self.flow.domain
    }
    fn eval(&self, x: &[f64]) -> Matrix {
        let f = &self.flow;
        let scale = 1.0 / (f.rho.value(x) * f.c);
        acoustic_unscaled(self.dim(), f.c, &f.w(x)).scale(scale)
    }
    fn grad(&self, x: &[f64]) -> MetricGradient {
        let n = self.dim();
        let f = &self.flow;
        let v = f.w(x);
        let jv = f.velocity.jacobian(x);
        let rho = f.rho.value(x);
        let drho = f.rho.gradient(x);
        let scale = 1.0 / (rho * f.c);
        let base = acoustic_unscaled(n, f.c, &v);
        let mut out = [Matrix::zeros(n + 1); 3];
        for p in 0..n {
            let mut d = Matrix::zeros(n + 1);
            for i in 0..n {
                d[(0, i + 1)] = jv[i][p];
                d[(i + 1, 0)] = jv[i][p];
                for j in 0..n {
                    d[(i + 1, j + 1)] = jv[i][p] * v[j] + v[i] * jv[j][p];
                }
            }
            // ∂(1/(ρc)) = −∂ρ/(ρ² c)
            out[p] = d.scale(scale).add(&base.scale(-drho[p] / (rho * rho * f.c)));
        }
        out
    }
}

/// Build the metric matching the medium's kind.
pub fn medium_metric(f: &MediumFlow) -> Result<Arc<dyn MetricField>> {
    Ok(match f.kind {
        MediumKind::Gordon => Arc::new(gordon_metric(f)?),
        MediumKind::Acoustic => Arc::new(acoustic_metric(f)?),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowOutcome {
    ExitsDomain,
    ClosesUp,
    Undecided,
}

#[derive(Clone, Debug)]
pub struct FlowTrajectory {
    /// `(s, x)` samples at accepted steps.
    pub samples: Vec<(f64, SpatialPoint)>,
    pub outcome: FlowOutcome,
}

/// Integrates dx/ds = w(x) from `start` until the trajectory leaves the
/// domain, returns to its start point with matching direction, or s_max.
pub fn trace_flow(f: &MediumFlow, start: &[f64], s_max: f64) -> Result<FlowTrajectory> {
    let n = f.dim();
    if start.len() != n {
        return Err(Error::Dimension { expected: n, got: start.len() });
    }
    if !f.domain.contains(start, 0.0) {
        return Err(Error::OutsideDomain { point: start.to_vec() });
    }
    let w0 = f.w(start);
    let w0n = dot(&w0[..n], &w0[..n]).sqrt();
    if w0n < 1e-12 {
        return Err(Error::StagnationPoint { point: start.to_vec() });
    }
    let dir0: Vec<f64> = w0[..n].iter().map(|v| v / w0n).collect();
    let diam = f.domain.diameter();
    let mut stagnant: Option<Vec<f64>> = None;
    let mut rhs = |_s: f64, y: &[f64], dy: &mut [f64]| {
        let w = f.w(y);
        dy.copy_from_slice(&w[..n]);
    };
    let settings = OdeSettings::default().tolerances(1e-10, 1e-12).h_max(0.05 * diam / w0n);
    let mut ode = Dopri45::new(settings, &mut rhs, 0.0, start, None);
    let mut samples = vec![(0.0, SpatialPoint::from_slice(start))];
    let section = |y: &[f64]| -> f64 { (0..n).map(|i| (y[i] - start[i]) * dir0[i]).sum() };
    let mut left_start = false;
    while ode.s() < s_max {
        if ode.steps() >= settings.max_steps {
            break;
        }
        ode.step_until(&mut rhs, s_max)?;
        let y = ode.y().to_vec();
        if !f.domain.contains(&y, 0.0) {
            let domain = &f.domain;
            let (s, yb) = ode.locate(&mut rhs, |p| !domain.contains(p, 0.0), 1e-10);
            samples.push((s, SpatialPoint::from_slice(&yb)));
            return Ok(FlowTrajectory { samples, outcome: FlowOutcome::ExitsDomain });
        }
        let w = f.w(&y);
        if dot(&w[..n], &w[..n]).sqrt() < 1e-12 {
            stagnant = Some(y.clone());
        }
        samples.push((ode.s(), SpatialPoint::from_slice(&y)));
        if let Some(p) = stagnant {
            return Err(Error::StagnationPoint { point: p });
        }
        let dist = (0..n).map(|i| (y[i] - start[i]).powi(2)).sum::<f64>().sqrt();
        if dist > 1e-3 * diam {
            left_start = true;
        }
        let (g_prev, g_now) = (section(ode.y_prev()), section(&y));
        if left_start && g_prev < 0.0 && g_now >= 0.0 {
            let (s, yc) = ode.locate(&mut rhs, |p| section(p) >= 0.0, 1e-12);
            let d = (0..n).map(|i| (yc[i] - start[i]).powi(2)).sum::<f64>().sqrt();
            let wc = f.w(&yc);
            let cos = dot(&wc[..n], &dir0) / dot(&wc[..n], &wc[..n]).sqrt();
            if d <= 1e-6 && cos > 0.999 {
                samples.push((s, SpatialPoint::from_slice(&yc)));
                return Ok(FlowTrajectory { samples, outcome: FlowOutcome::ClosesUp });
            }
        }
    }
    Ok(FlowTrajectory { samples, outcome: FlowOutcome::Undecided })
}

/// Heuristic sampling of the flow-line density condition: the fraction of
/// seeds on a k×k grid whose flow line exits the domain or closes up.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FlowCoverage {
    pub seeds: usize,
    pub exits: usize,
    pub closed: usize,
    pub undecided: usize,
    pub stagnant: usize,
    pub fraction: f64,
}

pub fn flow_coverage(f: &MediumFlow, k: usize, s_max: f64) -> FlowCoverage {
    use rayon::prelude::*;
    let seeds = f.domain.sample_grid(k);
    let outcomes: Vec<Option<FlowOutcome>> =
        seeds.par_iter().map(|x| trace_flow(f, x, s_max).ok().map(|t| t.outcome)).collect();
    let count = |o: Option<FlowOutcome>| outcomes.iter().filter(|v| **v == o).count();
    let exits = count(Some(FlowOutcome::ExitsDomain));
    let closed = count(Some(FlowOutcome::ClosesUp));
    let total = seeds.len();
    FlowCoverage {
        seeds: total,
        exits,
        closed,
        undecided: count(Some(FlowOutcome::Undecided)),
        stagnant: count(None),
        fraction: (exits + closed) as f64 / total.max(1) as f64,
    }
}
