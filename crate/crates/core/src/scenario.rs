//! Scenario documents (JSON), validation, presets, model construction and
//! gridded flow ingestion.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation};
use crate::fields::{radial_profile_fields, ErgoRegion, RadialProfileFields, DEFAULT_BOUNDARY_SAMPLES};
use crate::media::{
    medium_metric, MediumFlow, MediumKind, Profile, RadialProfileFlow, ScalarField, Uniform, UniformFlow,
    VelocityField, VortexFlow,
};
use crate::metric::{Domain, MetricField, Minkowski};

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn vortex_r_inner() -> f64 {
    0.3
}
fn profile_r1() -> f64 {
    0.25
}
fn gordon_r_inner() -> f64 {
    0.6
}
fn gordon_r_outer() -> f64 {
    1.5
}
fn two_dims() -> usize {
    2
}

/// Radial profile as polynomial coefficients (ascending degree) or as
/// piecewise-linear nodes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSpec {
    Polynomial(Vec<f64>),
    Tabulated { r: Vec<f64>, values: Vec<f64> },
}

impl ProfileSpec {
    pub fn to_profile(&self) -> Profile {
        match self {
            ProfileSpec::Polynomial(c) => Profile::Polynomial(c.clone()),
            ProfileSpec::Tabulated { r, values } => Profile::Tabulated { r: r.clone(), values: values.clone() },
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Bilinear,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMediumKind {
    #[default]
    Acoustic,
    Gordon,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricSpec {
    /// Acoustic vortex w = (A r̂ + B θ̂)/r.
    Vortex {
        #[serde(rename = "A")]
        a: f64,
        #[serde(rename = "B")]
        b: f64,
        #[serde(default = "one")]
        c: f64,
        #[serde(default = "one")]
        rho: f64,
        #[serde(default = "vortex_r_inner")]
        r_inner: f64,
        /// Domain extends this far beyond the ergosphere.
        #[serde(default)]
        r_outer_margin: f64,
    },
    /// Acoustic swirl w = A(r) r̂ + B(r) θ̂ with c = ρ = 1 on r1 ≤ r ≤ r0.
    RadialProfile {
        #[serde(rename = "A")]
        a: ProfileSpec,
        #[serde(rename = "B")]
        b: ProfileSpec,
        #[serde(default = "profile_r1")]
        r1: f64,
        #[serde(default = "one")]
        r0: f64,
    },
    GordonUniform {
        w: Vec<f64>,
        #[serde(default = "one")]
        n_refr: f64,
        #[serde(default = "one")]
        c: f64,
    },
    /// Moving dielectric with w = (A/r) r̂.
    RadialGordon {
        #[serde(rename = "A")]
        a: f64,
        #[serde(default = "two")]
        n_refr: f64,
        #[serde(default = "two")]
        c: f64,
        #[serde(default = "gordon_r_inner")]
        r_inner: f64,
        #[serde(default = "gordon_r_outer")]
        r_outer: f64,
    },
    Gridded {
        path: String,
        #[serde(default)]
        interpolation: Interpolation,
        #[serde(default)]
        medium: GridMediumKind,
        #[serde(default = "one")]
        c: f64,
        #[serde(default = "one")]
        rho: f64,
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "vortex_r_inner")]
        r_inner: f64,
    },
    Minkowski {
        #[serde(default = "two_dims")]
        dim: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub s_max: f64,
    pub section_angle: f64,
    pub seed_count: usize,
    /// Points per axis of the signature audit grid.
    pub coverage_grid: usize,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics { rel_tol: 1e-9, abs_tol: 1e-10, s_max: 50.0, section_angle: 0.0, seed_count: 8, coverage_grid: 32 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub metric: MetricSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
    #[serde(default)]
    pub numerics: Numerics,
    /// Ergosphere radius for the radially symmetric presets.
    #[serde(skip)]
    pub r_ergosphere: Option<f64>,
    /// Directory that relative grid paths resolve against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn violation(field: &str, hypothesis: &str, message: impl Into<String>) -> Violation {
    Violation { field: field.into(), hypothesis: hypothesis.into(), message: message.into() }
}

impl Scenario {
    pub fn new(name: &str, metric: MetricSpec) -> Self {
        let mut s = Scenario {
            name: name.into(),
            metric,
            domain: None,
            numerics: Numerics::default(),
            r_ergosphere: None,
            base_dir: None,
        };
        s.r_ergosphere = s.analytic_ergosphere();
        s
    }

    pub fn dim(&self) -> usize {
        match &self.metric {
            MetricSpec::GordonUniform { w, .. } => w.len(),
            MetricSpec::Minkowski { dim } => *dim,
            _ => 2,
        }
    }

    fn analytic_ergosphere(&self) -> Option<f64> {
        match &self.metric {
            MetricSpec::Vortex { a, b, c, .. } => Some(a.hypot(*b) / c),
            MetricSpec::RadialProfile { r0, .. } => Some(*r0),
            MetricSpec::RadialGordon { a, n_refr, c, .. } => Some(a.abs() * n_refr / c),
            _ => None,
        }
    }

    /// Every violated precondition, empty when the scenario is usable.
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = Vec::new();
        let finite = |x: f64| x.is_finite();
        match &self.metric {
            MetricSpec::Vortex { a, b, c, rho, r_inner, r_outer_margin } => {
                if !(finite(*a) && finite(*b)) {
                    v.push(violation("metric.A", "finite-input", "A and B must be finite"));
                }
                if !(*c > 0.0 && finite(*c)) {
                    v.push(violation("metric.c", "positive-wave-speed", "c must be positive"));
                }
                if !(*rho > 0.0 && finite(*rho)) {
                    v.push(violation("metric.rho", "positive-density", "rho must be positive"));
                }
                if !(*r_inner > 0.0) {
                    v.push(violation("metric.r_inner", "inner-boundary", "r_inner must be positive"));
                }
                if !(*r_outer_margin >= 0.0) {
                    v.push(violation("metric.r_outer_margin", "domain", "r_outer_margin must be non-negative"));
                }
                let r0 = a.hypot(*b) / c;
                if !(r0 > 0.0) {
                    v.push(violation("metric", "ergoregion-exists", "A = B = 0 has no ergoregion"));
                } else if !(r0 > *r_inner) {
                    v.push(violation(
                        "metric.r_inner",
                        "inner-boundary-inside-ergosphere",
                        format!("r_inner = {r_inner} must be below the ergosphere radius {r0}"),
                    ));
                }
            }
            MetricSpec::RadialProfile { a, b, r1, r0 } => {
                if let Err(e) = radial_profile_fields(a.to_profile(), b.to_profile(), *r1, *r0) {
                    let message = match e {
                        Error::HypothesisViolation { clause } => clause,
                        other => other.to_string(),
                    };
                    v.push(violation("metric", "swirl-profile", message));
                }
            }
            MetricSpec::GordonUniform { w, n_refr, c } => {
                if !(2..=3).contains(&w.len()) {
                    v.push(violation("metric.w", "dimension", "w must have 2 or 3 components"));
                }
                if !(*c > 0.0 && finite(*c)) {
                    v.push(violation("metric.c", "positive-wave-speed", "c must be positive"));
                }
                if !(*n_refr > 0.0 && finite(*n_refr)) {
                    v.push(violation("metric.n_refr", "positive-index", "n_refr must be positive"));
                }
                let speed = w.iter().map(|x| x * x).sum::<f64>().sqrt();
                if !(speed < *c) {
                    v.push(violation("metric.w", "flow-subluminal", format!("|w| = {speed} must stay below c = {c}")));
                }
            }
            MetricSpec::RadialGordon { a, n_refr, c, r_inner, r_outer } => {
                if !(*c > 0.0 && finite(*c)) {
                    v.push(violation("metric.c", "positive-wave-speed", "c must be positive"));
                }
                if !(*n_refr > 1.0 && finite(*n_refr)) {
                    v.push(violation("metric.n_refr", "ergoregion-exists", "n_refr must exceed 1"));
                }
                if !(*r_inner > 0.0 && r_outer > r_inner) {
                    v.push(violation("metric.r_inner", "domain", "need 0 < r_inner < r_outer"));
                }
                let r0 = a.abs() * n_refr / c;
                if !(r0 > *r_inner && r0 < *r_outer) {
                    v.push(violation(
                        "metric.A",
                        "ergosphere-inside-domain",
                        format!("ergosphere radius {r0} must lie in ({r_inner}, {r_outer})"),
                    ));
                }
                if !(a.abs() / r_inner < *c) {
                    v.push(violation("metric.A", "flow-subluminal", format!("|w| = {} at r_inner reaches c", a.abs() / r_inner)));
                }
            }
            MetricSpec::Gridded { path, c, rho, r_inner, .. } => {
                if path.trim().is_empty() {
                    v.push(violation("metric.path", "grid-file", "path must not be empty"));
                }
                if !(*c > 0.0) {
                    v.push(violation("metric.c", "positive-wave-speed", "c must be positive"));
                }
                if !(*rho > 0.0) {
                    v.push(violation("metric.rho", "positive-density", "rho must be positive"));
                }
                if !(*r_inner > 0.0) {
                    v.push(violation("metric.r_inner", "inner-boundary", "r_inner must be positive"));
                }
            }
            MetricSpec::Minkowski { dim } => {
                if !(2..=3).contains(dim) {
                    v.push(violation("metric.dim", "dimension", "dim must be 2 or 3"));
                }
            }
        }
        if let Some(d) = &self.domain {
            if let Err(e) = d.validate() {
                v.push(violation("domain", "domain", e.to_string()));
            } else if d.dim() != self.dim() {
                v.push(violation("domain", "dimension", format!("domain is {}D, metric is {}D", d.dim(), self.dim())));
            }
        }
        let n = &self.numerics;
        if !(n.rel_tol > 0.0 && n.abs_tol > 0.0) {
            v.push(violation("numerics.rel_tol", "tolerances", "tolerances must be positive"));
        }
        if !(n.s_max > 0.0 && n.s_max.is_finite()) {
            v.push(violation("numerics.s_max", "tolerances", "s_max must be positive"));
        }
        if !n.section_angle.is_finite() {
            v.push(violation("numerics.section_angle", "tolerances", "section_angle must be finite"));
        }
        if n.seed_count == 0 {
            v.push(violation("numerics.seed_count", "tolerances", "seed_count must be at least 1"));
        }
        if n.coverage_grid < 2 {
            v.push(violation("numerics.coverage_grid", "tolerances", "coverage_grid must be at least 2"));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(v))
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Domain the metric lives on: the override, or the preset's natural one.
    pub fn effective_domain(&self) -> Domain {
        if let Some(d) = &self.domain {
            return d.clone();
        }
        match &self.metric {
            MetricSpec::Vortex { r_inner, r_outer_margin, .. } => {
                Domain::annulus(*r_inner, self.r_ergosphere.unwrap_or(1.0) + r_outer_margin)
            }
            MetricSpec::RadialProfile { r1, r0, .. } => Domain::annulus(*r1, *r0),
            MetricSpec::RadialGordon { r_inner, r_outer, .. } => Domain::annulus(*r_inner, *r_outer),
            MetricSpec::GordonUniform { w, .. } if w.len() == 3 => Domain::cube(1.0),
            MetricSpec::Minkowski { dim: 3 } => Domain::cube(1.0),
            _ => Domain::square(1.0),
        }
    }
}

fn json_error(e: serde_json::Error) -> Error {
    Error::Parse { line: e.line(), column: e.column(), message: e.to_string() }
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let mut s: Scenario = serde_json::from_str(text).map_err(json_error)?;
    s.validate()?;
    s.r_ergosphere = s.analytic_ergosphere();
    Ok(s)
}

/// Reads a scenario file; relative grid paths resolve against its directory.
pub fn load_scenario(path: &Path) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let mut s = parse_scenario(&text)?;
    s.base_dir = path.parent().map(Path::to_path_buf);
    Ok(s)
}

pub const PRESETS: [&str; 10] = [
    "vortex-white",
    "vortex-black",
    "swirl-linear",
    "swirl-three",
    "radial-acoustic-white",
    "radial-acoustic-black",
    "radial-gordon-white",
    "radial-gordon-black",
    "gordon-uniform",
    "minkowski",
];

/// Built-in scenarios by name.
pub fn preset(name: &str) -> Option<Scenario> {
    let vortex = |a: f64, b: f64| MetricSpec::Vortex { a, b, c: 1.0, rho: 1.0, r_inner: 0.3, r_outer_margin: 0.0 };
    let radial_gordon =
        |a: f64| MetricSpec::RadialGordon { a, n_refr: 2.0, c: 2.0, r_inner: 0.6, r_outer: 1.5 };
    let metric = match name {
        "vortex-white" => vortex(0.6, 0.8),
        "vortex-black" => vortex(-0.6, 0.8),
        "swirl-linear" => MetricSpec::RadialProfile {
            a: ProfileSpec::Polynomial(vec![2.0, -2.0]),
            b: ProfileSpec::Polynomial(vec![1.0]),
            r1: 0.25,
            r0: 1.0,
        },
        "swirl-three" => {
            // A − 1 = −k (r − 0.4)(r − 0.55)(r − 0.7) with A(1) = 0.
            let k = 1.0 / 0.081;
            MetricSpec::RadialProfile {
                a: ProfileSpec::Polynomial(vec![1.0 + 0.154 * k, -0.885 * k, 1.65 * k, -k]),
                b: ProfileSpec::Polynomial(vec![1.0]),
                r1: 0.25,
                r0: 1.0,
            }
        }
        "radial-acoustic-white" => vortex(1.0, 0.0),
        "radial-acoustic-black" => vortex(-1.0, 0.0),
        "radial-gordon-white" => radial_gordon(1.0),
        "radial-gordon-black" => radial_gordon(-1.0),
        "gordon-uniform" => MetricSpec::GordonUniform { w: vec![0.9, 0.0], n_refr: 1.0, c: 1.0 },
        "minkowski" => MetricSpec::Minkowski { dim: 2 },
        _ => return None,
    };
    Some(Scenario::new(name, metric))
}

/// Everything the analyses need, built from a validated scenario.
#[derive(Clone, Debug)]
pub struct Model {
    pub metric: Arc<dyn MetricField>,
    pub flow: Option<MediumFlow>,
    /// `None` when the scenario has no ergoregion.
    pub region: Option<ErgoRegion>,
    pub domain: Domain,
    /// Closed forms for swirl-profile scenarios.
    pub swirl: Option<RadialProfileFields>,
}

pub fn build_model(s: &Scenario) -> Result<Model> {
    s.validate()?;
    let domain = s.effective_domain();
    let origin = [0.0, 0.0];
    let mut swirl = None;
    let (flow, region) = match &s.metric {
        MetricSpec::Vortex { a, b, c, rho, r_inner, .. } => {
            let flow = MediumFlow::acoustic(Arc::new(VortexFlow::new(*a, *b)), *c, *rho, domain.clone());
            let r0 = a.hypot(*b) / c;
            (Some(flow), Some(ErgoRegion::circular(origin, r0, *r_inner)?))
        }
        MetricSpec::RadialProfile { a, b, r1, r0 } => {
            swirl = Some(radial_profile_fields(a.to_profile(), b.to_profile(), *r1, *r0)?);
            let vel = RadialProfileFlow { a: a.to_profile(), b: b.to_profile(), center: origin };
            let flow = MediumFlow::acoustic(Arc::new(vel), 1.0, 1.0, domain.clone());
            (Some(flow), Some(ErgoRegion::circular(origin, *r0, *r1)?))
        }
        MetricSpec::GordonUniform { w, n_refr, c } => {
            let flow = MediumFlow::gordon(Arc::new(UniformFlow { w: w.clone() }), *c, *n_refr, domain.clone());
            (Some(flow), None)
        }
        MetricSpec::RadialGordon { a, n_refr, c, r_inner, .. } => {
            let flow = MediumFlow::gordon(Arc::new(VortexFlow::new(*a, 0.0)), *c, *n_refr, domain.clone());
            let r0 = a.abs() * n_refr / c;
            (Some(flow), Some(ErgoRegion::circular(origin, r0, *r_inner)?))
        }
        MetricSpec::Gridded { path, medium, c, rho, center, r_inner, .. } => {
            let p = match &s.base_dir {
                Some(dir) if Path::new(path).is_relative() => dir.join(path),
                _ => PathBuf::from(path),
            };
            let grid = GriddedMedium { kind: *medium, c: *c, rho: *rho };
            let mut flow = load_gridded_flow(&p, grid)?;
            if let Some(d) = &s.domain {
                flow.domain = d.clone();
            }
            let metric = medium_metric(&flow)?;
            let r_search = search_radius(&flow.domain, *center);
            let region = if r_search > *r_inner {
                match ErgoRegion::locate(metric.as_ref(), *center, *r_inner, r_search, DEFAULT_BOUNDARY_SAMPLES) {
                    Ok(r) => Some(r),
                    Err(Error::NoErgoregion) => None,
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            return Ok(Model { metric, domain: flow.domain.clone(), flow: Some(flow), region, swirl });
        }
        MetricSpec::Minkowski { .. } => {
            let m: Arc<dyn MetricField> = Arc::new(Minkowski::new(domain.clone()));
            return Ok(Model { metric: m, flow: None, region: None, domain, swirl });
        }
    };
    let metric = match &flow {
        Some(f) => medium_metric(f)?,
        None => Arc::new(Minkowski::new(domain.clone())),
    };
    Ok(Model { metric, flow, region, domain, swirl })
}

fn search_radius(domain: &Domain, center: [f64; 2]) -> f64 {
    match domain {
        Domain::Annulus { center: c, r_outer, .. } => r_outer - (center[0] - c[0]).hypot(center[1] - c[1]),
        Domain::Box { min, max } => (center[0] - min[0]).min(max[0] - center[0]).min(center[1] - min[1]).min(max[1] - center[1]),
    }
}

/// Medium parameters applied to a gridded velocity field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GriddedMedium {
    pub kind: GridMediumKind,
    pub c: f64,
    pub rho: f64,
}

impl Default for GriddedMedium {
    fn default() -> Self {
        GriddedMedium { kind: GridMediumKind::Acoustic, c: 1.0, rho: 1.0 }
    }
}

/// Node values on a uniform planar grid, bilinearly interpolated, with
/// central-difference node gradients interpolated the same way.
#[derive(Clone, Debug, PartialEq)]
pub struct UniformGrid {
    pub origin: [f64; 2],
    pub spacing: [f64; 2],
    pub shape: [usize; 2],
    values: Vec<f64>,
    grads: Vec<[f64; 2]>,
}

impl UniformGrid {
    pub fn new(origin: [f64; 2], spacing: [f64; 2], shape: [usize; 2], values: Vec<f64>) -> Self {
        let [nx, ny] = shape;
        let at = |i: usize, j: usize| values[j * nx + i];
        let mut grads = Vec::with_capacity(values.len());
        for j in 0..ny {
            for i in 0..nx {
                let (il, ir) = (i.saturating_sub(1), (i + 1).min(nx - 1));
                let (jl, jr) = (j.saturating_sub(1), (j + 1).min(ny - 1));
                grads.push([
                    (at(ir, j) - at(il, j)) / ((ir - il) as f64 * spacing[0]),
                    (at(i, jr) - at(i, jl)) / ((jr - jl) as f64 * spacing[1]),
                ]);
            }
        }
        UniformGrid { origin, spacing, shape, values, grads }
    }

    fn cell(&self, x: &[f64]) -> (usize, usize, f64, f64) {
        let mut out = [(0usize, 0.0f64); 2];
        for d in 0..2 {
            let u = ((x[d] - self.origin[d]) / self.spacing[d]).clamp(0.0, (self.shape[d] - 1) as f64);
            let i = (u.floor() as usize).min(self.shape[d] - 2);
            out[d] = (i, u - i as f64);
        }
        (out[0].0, out[1].0, out[0].1, out[1].1)
    }

    fn blend<T: Copy>(&self, data: &[T], x: &[f64], f: impl Fn(T) -> [f64; 2], width: usize) -> [f64; 2] {
        let (i, j, tx, ty) = self.cell(x);
        let nx = self.shape[0];
        let w = [(1.0 - tx) * (1.0 - ty), tx * (1.0 - ty), (1.0 - tx) * ty, tx * ty];
        let idx = [j * nx + i, j * nx + i + 1, (j + 1) * nx + i, (j + 1) * nx + i + 1];
        let mut out = [0.0; 2];
        for (wk, k) in w.iter().zip(idx) {
            let v = f(data[k]);
            for c in 0..width {
                out[c] += wk * v[c];
            }
        }
        out
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.blend(&self.values, x, |v| [v, 0.0], 1)[0]
    }

    pub fn gradient(&self, x: &[f64]) -> [f64; 2] {
        self.blend(&self.grads, x, |g| g, 2)
    }

    /// Grid bounding box inset by one cell.
    pub fn inset_domain(&self) -> Domain {
        let max = |d: usize| self.origin[d] + (self.shape[d] - 1) as f64 * self.spacing[d];
        Domain::Box {
            min: vec![self.origin[0] + self.spacing[0], self.origin[1] + self.spacing[1]],
            max: vec![max(0) - self.spacing[0], max(1) - self.spacing[1]],
        }
    }
}

#[derive(Clone, Debug)]
pub struct GridVelocity {
    pub w1: UniformGrid,
    pub w2: UniformGrid,
}

impl VelocityField for GridVelocity {
    fn dim(&self) -> usize {
        2
    }
    fn eval(&self, x: &[f64]) -> [f64; 3] {
        [self.w1.value(x), self.w2.value(x), 0.0]
    }
    fn jacobian(&self, x: &[f64]) -> [[f64; 3]; 3] {
        let (g1, g2) = (self.w1.gradient(x), self.w2.gradient(x));
        [[g1[0], g1[1], 0.0], [g2[0], g2[1], 0.0], [0.0; 3]]
    }
}

#[derive(Clone, Debug)]
pub struct GridScalar(pub UniformGrid);

impl ScalarField for GridScalar {
    fn value(&self, x: &[f64]) -> f64 {
        self.0.value(x)
    }
    fn gradient(&self, x: &[f64]) -> [f64; 3] {
        let g = self.0.gradient(x);
        [g[0], g[1], 0.0]
    }
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Schema(msg.into())
}

/// Reads a gridded planar flow from CSV with header `x1,x2,w1,w2[,n_refr]`,
/// rows ordered with x1 varying fastest. Spacing must be uniform to a
/// relative 1e-9.
pub fn load_gridded_flow(path: &Path, medium: GriddedMedium) -> Result<MediumFlow> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => schema(format!("{other:?}")),
    })?;
    let headers = rdr.headers().map_err(|e| schema(e.to_string()))?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let has_n = match names.as_slice() {
        ["x1", "x2", "w1", "w2"] => false,
        ["x1", "x2", "w1", "w2", "n_refr"] => true,
        _ => return Err(schema(format!("header must be x1,x2,w1,w2[,n_refr], got {}", names.join(",")))),
    };
    let width = if has_n { 5 } else { 4 };
    let mut rows: Vec<[f64; 5]> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| schema(format!("line {line}: {e}")))?;
        if rec.len() != width {
            return Err(schema(format!("line {line}: expected {width} columns, found {}", rec.len())));
        }
        let mut row = [1.0; 5];
        for (c, field) in rec.iter().enumerate() {
            row[c] = field.parse::<f64>().map_err(|_| schema(format!("line {line}: '{field}' is not a number")))?;
            if !row[c].is_finite() {
                return Err(Error::NonFiniteData { row: line });
            }
        }
        rows.push(row);
    }
    let nx = rows.iter().position(|r| r[1] != rows[0][1]).unwrap_or(rows.len());
    if nx < 2 || rows.len() < 2 * nx || rows.len() % nx != 0 {
        return Err(schema("grid needs at least two distinct x1 and x2 values in a full rectangle"));
    }
    let ny = rows.len() / nx;
    let origin = [rows[0][0], rows[0][1]];
    let spacing = [rows[1][0] - rows[0][0], rows[nx][1] - rows[0][1]];
    if !(spacing[0] > 0.0 && spacing[1] > 0.0) {
        return Err(schema("grid coordinates must increase"));
    }
    let span = [spacing[0] * (nx - 1) as f64, spacing[1] * (ny - 1) as f64];
    for (k, r) in rows.iter().enumerate() {
        let (i, j) = (k % nx, k / nx);
        let ex = origin[0] + i as f64 * spacing[0];
        let ey = origin[1] + j as f64 * spacing[1];
        if (r[0] - ex).abs() > 1e-9 * span[0] || (r[1] - ey).abs() > 1e-9 * span[1] {
            return Err(schema(format!("line {}: grid is not uniform and row-major in x1", k + 2)));
        }
    }
    let column = |c: usize| UniformGrid::new(origin, spacing, [nx, ny], rows.iter().map(|r| r[c]).collect());
    let velocity = GridVelocity { w1: column(2), w2: column(3) };
    let domain = velocity.w1.inset_domain();
    let velocity: Arc<dyn VelocityField> = Arc::new(velocity);
    let mut flow = match medium.kind {
        GridMediumKind::Acoustic => MediumFlow::acoustic(velocity, medium.c, medium.rho, domain),
        GridMediumKind::Gordon => MediumFlow::gordon(velocity, medium.c, 1.0, domain),
    };
    if has_n {
        if medium.kind == GridMediumKind::Acoustic {
            return Err(schema("n_refr column requires a gordon medium"));
        }
        flow.n_refr = Arc::new(GridScalar(column(4)));
    } else if medium.kind == GridMediumKind::Gordon {
        flow.n_refr = Arc::new(Uniform(1.0));
    }
    debug_assert!(matches!(flow.kind, MediumKind::Gordon | MediumKind::Acoustic));
    Ok(flow)
}

/// Writes `w` sampled on an nx × ny grid over [lo, hi]² as gridded CSV.
pub fn write_gridded_csv(
    out: &mut impl std::io::Write,
    w: &dyn VelocityField,
    lo: [f64; 2],
    hi: [f64; 2],
    shape: [usize; 2],
) -> Result<()> {
    writeln!(out, "x1,x2,w1,w2")?;
    for j in 0..shape[1] {
        let y = lo[1] + (hi[1] - lo[1]) * j as f64 / (shape[1] - 1) as f64;
        for i in 0..shape[0] {
            let x = lo[0] + (hi[0] - lo[0]) * i as f64 / (shape[0] - 1) as f64;
            let v = w.eval(&[x, y]);
            writeln!(out, "{x:.17e},{y:.17e},{:.17e},{:.17e}", v[0], v[1])?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vortex_preset_text() {
        let s = parse_scenario(r#"{"name": "v", "metric": {"type": "vortex", "A": 0.6, "B": 0.8}}"#).unwrap();
        assert!((s.r_ergosphere.unwrap() - 1.0).abs() < 1e-15);
        let again = parse_scenario(&s.to_json()).unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn empty_vortex_is_rejected() {
        let e = parse_scenario(r#"{"name": "v", "metric": {"type": "vortex", "A": 0, "B": 0}}"#).unwrap_err();
        match e {
            Error::Validation(v) => assert!(v.iter().any(|x| x.hypothesis == "ergoregion-exists")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_position() {
        let e = parse_scenario("{\n  \"name\": \"v\",\n  \"metric\": {\"type\": \"spiral\"}\n}").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e:?}");
        let e = parse_scenario(r#"{"name": "v", "metric": {"type": "vortex", "A": 1, "B": 0, "Q": 2}}"#).unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
    }

    #[test]
    fn swirl_profile_hypotheses() {
        let ok = r#"{"name": "s", "metric": {"type": "radial_profile", "A": [2, -2], "B": [1], "r1": 0.25, "r0": 1}}"#;
        parse_scenario(ok).unwrap();
        let bad = r#"{"name": "s", "metric": {"type": "radial_profile", "A": [2, -2], "B": [1], "r1": 0.6, "r0": 1}}"#;
        match parse_scenario(bad).unwrap_err() {
            Error::Validation(v) => assert!(v[0].message.contains("|A(r1)|"), "{v:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn presets_build() {
        for name in PRESETS {
            let s = preset(name).unwrap();
            s.validate().unwrap();
            let m = build_model(&s).unwrap();
            assert_eq!(m.region.is_some(), !matches!(name, "gordon-uniform" | "minkowski"), "{name}");
        }
    }

    #[test]
    fn grid_interpolation_is_exact_for_bilinear_data() {
        let f = |x: f64, y: f64| 1.0 + 2.0 * x - y + 0.5 * x * y;
        let (nx, ny) = (5, 4);
        let vals = (0..nx * ny).map(|k| f((k % nx) as f64 * 0.5, (k / nx) as f64 * 0.25)).collect();
        let g = UniformGrid::new([0.0, 0.0], [0.5, 0.25], [nx, ny], vals);
        assert!((g.value(&[0.7, 0.3]) - f(0.7, 0.3)).abs() < 1e-14);
    }
}
