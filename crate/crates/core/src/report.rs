//! Run reports: command implementations, JSON (17 significant digits),
//! ray CSV and SVG figures.

use std::fmt::Write as _;
use std::io;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{build_char_fields, ergosphere_radii, s1_flux_test, FluxReport, FluxVerdict};
use crate::horizon::{
    classify_closed_characteristic, classify_ergosphere, enumerate_cycles, gordon_flow_crosscheck, Classification,
    HoleReport, LimitCycleOptions,
};
use crate::media::ergo_function;
use crate::metric::{full_symbol, signature_report, Domain, MetricField};
use crate::rays::{make_null_initial, trace_ray, Branch, RayResult, Termination, TimeOrientation, TraceOptions};
use crate::scenario::{Model, Scenario};

pub const SCHEMA_VERSION: &str = "analog-horizon/report/1";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
/// JSON Schema for [`RunReport`].
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignatureSummary {
    pub points: usize,
    pub hyperbolic_points: usize,
    pub ergoregion_points: usize,
    pub degenerate_points: usize,
    /// Points where negative definiteness of the spatial block and g₀₀ > 0
    /// disagree (expected 0).
    pub equivalence_failures: usize,
    pub g00_lower_min: f64,
    pub g00_lower_max: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    /// Flow speed below the wave speed everywhere on the grid (media only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subluminal: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErgosphereSummary {
    pub center: [f64; 2],
    pub radius_mean: f64,
    pub radius_min: f64,
    pub radius_max: f64,
    pub polyline: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RayRecord {
    pub launch: Vec<f64>,
    pub branch: Branch,
    pub termination: Termination,
    pub orientation: TimeOrientation,
    pub h_drift_max: f64,
    pub samples: usize,
    /// Spatial projection (first two coordinates).
    pub path: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Timings {
    pub check_ms: f64,
    pub horizon_ms: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema_version: &'static str,
    pub tool_version: &'static str,
    pub scenario: Scenario,
    pub domain: Domain,
    pub signature: SignatureSummary,
    pub ergoregion: bool,
    pub ergosphere: Option<ErgosphereSummary>,
    pub flux: Option<FluxReport>,
    pub holes: Vec<HoleReport>,
    pub rays: Vec<RayRecord>,
    /// The construction guarantees at least one horizon.
    pub horizon_expected: bool,
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Timings>,
}

impl RunReport {
    fn new(scenario: &Scenario, model: &Model, signature: SignatureSummary) -> Self {
        RunReport {
            schema_version: SCHEMA_VERSION,
            tool_version: TOOL_VERSION,
            scenario: scenario.clone(),
            domain: model.domain.clone(),
            signature,
            ergoregion: model.region.is_some(),
            ergosphere: None,
            flux: None,
            holes: Vec::new(),
            rays: Vec::new(),
            horizon_expected: false,
            warnings: Vec::new(),
            timings: None,
        }
    }

    /// Zero horizons where the hypotheses promise one.
    pub fn missing_expected_horizon(&self) -> bool {
        self.horizon_expected && self.holes.is_empty()
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_17(self)
    }
}

/// Writes floats as `{:.16e}` (17 significant digits, exact round trip).
struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }
}

/// Compact JSON with 17-digit floats. serde_json writes NaN and infinities
/// as `null`, which the report schema rejects wherever a number is required.
pub fn to_json_17<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SeventeenDigits);
    value.serialize(&mut ser).map_err(|e| Error::InvalidInput(e.to_string()))?;
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

fn audit(scenario: &Scenario, model: &Model) -> SignatureSummary {
    let m = model.metric.as_ref();
    let grid = model.domain.sample_grid(scenario.numerics.coverage_grid);
    let mut s = SignatureSummary {
        points: 0,
        hyperbolic_points: 0,
        ergoregion_points: 0,
        degenerate_points: 0,
        equivalence_failures: 0,
        g00_lower_min: f64::INFINITY,
        g00_lower_max: f64::NEG_INFINITY,
        delta_min: f64::INFINITY,
        delta_max: f64::NEG_INFINITY,
        subluminal: model.flow.as_ref().map(|_| true),
    };
    for x in &grid {
        s.points += 1;
        let Ok(r) = signature_report(m, x) else { continue };
        s.hyperbolic_points += 1;
        if r.degenerate {
            s.degenerate_points += 1;
        }
        if !r.negdef_matches_g00 {
            s.equivalence_failures += 1;
        }
        if !r.degenerate && r.g00_lower < 0.0 {
            s.ergoregion_points += 1;
        }
        s.g00_lower_min = s.g00_lower_min.min(r.g00_lower);
        s.g00_lower_max = s.g00_lower_max.max(r.g00_lower);
        s.delta_min = s.delta_min.min(r.delta);
        s.delta_max = s.delta_max.max(r.delta);
        if let Some(f) = &model.flow {
            let w = f.w(x);
            let speed = (w[0] * w[0] + w[1] * w[1] + w[2] * w[2]).sqrt();
            if !(speed < f.c) {
                s.subluminal = Some(false);
            }
        }
    }
    if s.hyperbolic_points == 0 {
        s.g00_lower_min = 0.0;
        s.g00_lower_max = 0.0;
        s.delta_min = 0.0;
        s.delta_max = 0.0;
    }
    s
}

const ERGOSPHERE_RAYS: usize = 256;

fn locate_ergosphere(model: &Model) -> Option<ErgosphereSummary> {
    let region = model.region.as_ref()?;
    let center = region.center();
    let r_inner = region.inner().min_radius();
    let r_search = match &model.domain {
        Domain::Annulus { center: c, r_outer, .. } => r_outer - (center[0] - c[0]).hypot(center[1] - c[1]),
        Domain::Box { min, max } => {
            (center[0] - min[0]).min(max[0] - center[0]).min(center[1] - min[1]).min(max[1] - center[1])
        }
    };
    let radii = ergosphere_radii(model.metric.as_ref(), center, r_inner, r_search, ERGOSPHERE_RAYS)?;
    let polyline = radii
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let t = 2.0 * std::f64::consts::PI * i as f64 / radii.len() as f64;
            [center[0] + r * t.cos(), center[1] + r * t.sin()]
        })
        .collect();
    Some(ErgosphereSummary {
        center,
        radius_mean: radii.iter().sum::<f64>() / radii.len() as f64,
        radius_min: radii.iter().cloned().fold(f64::INFINITY, f64::min),
        radius_max: radii.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        polyline,
    })
}

/// Signature audit over the domain and the ergosphere located by bisection
/// of Δ along radial lines.
pub fn cmd_check(scenario: &Scenario, model: &Model) -> RunReport {
    let mut report = RunReport::new(scenario, model, audit(scenario, model));
    report.ergosphere = locate_ergosphere(model);
    if model.region.is_none() {
        report.warnings.push("no ergoregion".into());
    }
    if let Some(f) = &model.flow {
        if let Some(e) = &report.ergosphere {
            let worst = e.polyline.iter().map(|p| ergo_function(f, p).abs()).fold(0.0, f64::max);
            if worst > 1e-6 {
                report.warnings.push(format!("ergo function residual {worst:e} on the located ergosphere"));
            }
        }
    }
    report
}

fn attach_flow_check(model: &Model, hole: &mut HoleReport) {
    if let Some(f) = &model.flow {
        if f.dim() == 2 {
            hole.flow_check = Some(gordon_flow_crosscheck(f, &hole.curve));
        }
    }
}

/// Classifies the ergosphere only.
pub fn cmd_ergosphere(scenario: &Scenario, model: &Model) -> RunReport {
    let mut report = cmd_check(scenario, model);
    if let Some(region) = &model.region {
        let mut hole = classify_ergosphere(model.metric.as_ref(), region);
        if hole.is_deferral() {
            report.warnings.push(format!(
                "ergosphere is not characteristic (normal residual {:e}); horizons must be searched inside",
                hole.max_characteristic_residual
            ));
        } else {
            attach_flow_check(model, &mut hole);
            report.horizon_expected = true;
            report.holes.push(hole);
        }
    }
    report
}

pub fn cycle_options(scenario: &Scenario) -> LimitCycleOptions {
    LimitCycleOptions {
        section_angle: scenario.numerics.section_angle,
        seed_count: scenario.numerics.seed_count,
        ..LimitCycleOptions::default()
    }
}

/// Full pipeline: characteristic ergosphere test, then the limit-cycle
/// search with inner-boundary flux check, enumeration and classification.
pub fn cmd_horizon(scenario: &Scenario, model: &Model, timings: bool) -> Result<RunReport> {
    let t0 = Instant::now();
    let mut report = cmd_check(scenario, model);
    let check_ms = t0.elapsed().as_secs_f64() * 1e3;
    let t1 = Instant::now();
    if let Some(region) = &model.region {
        let m = model.metric.as_ref();
        let mut erg = classify_ergosphere(m, region);
        if !erg.is_deferral() {
            attach_flow_check(model, &mut erg);
            report.horizon_expected = true;
            report.holes.push(erg);
        } else {
            let fields = build_char_fields(model.metric.clone(), region.clone())?;
            match s1_flux_test(m, region) {
                Ok(flux) => {
                    if flux.verdict == FluxVerdict::Mixed {
                        report.warnings.push(
                            "null directions cross the inner boundary both ways; a closed horizon is not guaranteed"
                                .into(),
                        );
                    } else {
                        report.horizon_expected = true;
                    }
                    report.flux = Some(flux);
                }
                Err(e) => report.warnings.push(format!("inner boundary flux test: {e}")),
            }
            if let Some(sw) = &model.swirl {
                let zeros = sw.simple_zeros(1.0)?.len() + sw.simple_zeros(-1.0)?.len();
                report.horizon_expected = zeros > 0;
            }
            for orbit in enumerate_cycles(&fields, &cycle_options(scenario)) {
                match classify_closed_characteristic(m, &orbit) {
                    Ok(mut hole) => {
                        attach_flow_check(model, &mut hole);
                        if hole.classification == Classification::Undetermined {
                            report.warnings.push(format!(
                                "horizon at mean radius {:.6} has mixed cone tilt",
                                hole.mean_radius
                            ));
                        }
                        report.holes.push(hole);
                    }
                    Err(e) => report.warnings.push(format!("closed orbit rejected: {e}")),
                }
            }
        }
    }
    if report.missing_expected_horizon() {
        report.warnings.push("no horizon found although one is guaranteed".into());
    }
    if timings {
        report.timings = Some(Timings { check_ms, horizon_ms: t1.elapsed().as_secs_f64() * 1e3 });
    }
    Ok(report)
}

/// Ray launch: a point and spatial covector with a root choice, or the
/// kernel direction at the ergosphere point at a given polar angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Launch {
    Covector { x: Vec<f64>, xi: Vec<f64>, branch: Branch },
    Kernel { angle: f64 },
}

pub fn trace_options(scenario: &Scenario) -> TraceOptions {
    TraceOptions {
        s_max: scenario.numerics.s_max,
        rel_tol: scenario.numerics.rel_tol,
        abs_tol: scenario.numerics.abs_tol,
        ..TraceOptions::default()
    }
}

/// Traces one ray. The launch is validated before any integration.
pub fn cmd_trace(scenario: &Scenario, model: &Model, launch: &Launch) -> Result<(RayResult, Branch)> {
    let m = model.metric.as_ref();
    let (x, xi, branch) = match launch {
        Launch::Covector { x, xi, branch } => (x.clone(), xi.clone(), *branch),
        Launch::Kernel { angle } => {
            let region = model.region.as_ref().ok_or(Error::NoErgoregion)?;
            let c = region.center();
            let r = region.outer().radius_at(*angle);
            let y = vec![c[0] + r * angle.cos(), c[1] + r * angle.sin()];
            let b = crate::fields::kernel_direction(m, &y)?;
            (y, b.to_vec(), Branch::ZeroXi0)
        }
    };
    if x.len() != m.dim() {
        return Err(Error::Dimension { expected: m.dim(), got: x.len() });
    }
    if !model.domain.contains(&x, 1e-12 * model.domain.diameter()) {
        return Err(Error::OutsideDomain { point: x });
    }
    let init = make_null_initial(m, &x, &xi, branch)?;
    Ok((trace_ray(m, &init, &trace_options(scenario))?, branch))
}

pub fn ray_record(ray: &RayResult, branch: Branch) -> RayRecord {
    RayRecord {
        launch: ray.samples[0].x.to_vec(),
        branch,
        termination: ray.termination,
        orientation: ray.orientation,
        h_drift_max: ray.h_drift_max,
        samples: ray.samples.len(),
        path: ray.samples.iter().map(|s| [s.x[0], s.x[1]]).collect(),
    }
}

/// CSV header for a ray in `dim` spatial dimensions.
pub fn ray_csv_header(dim: usize) -> String {
    let mut cols = vec!["s".to_string(), "x0".to_string()];
    cols.extend((1..=dim).map(|i| format!("x{i}")));
    cols.push("xi0".into());
    cols.extend((1..=dim).map(|i| format!("xi{i}")));
    cols.push("H".into());
    cols.join(",")
}

/// Ray samples as CSV with the live symbol value in the `H` column.
pub fn ray_csv(m: &dyn MetricField, ray: &RayResult) -> String {
    let dim = m.dim();
    let mut out = ray_csv_header(dim);
    out.push('\n');
    for st in &ray.samples {
        let h = full_symbol(m, &st.x, &st.covector());
        let _ = write!(out, "{:.16e},{:.16e}", st.s, st.x0);
        for v in st.x.iter() {
            let _ = write!(out, ",{v:.16e}");
        }
        let _ = write!(out, ",{:.16e}", st.xi0);
        for v in st.xi.iter() {
            let _ = write!(out, ",{v:.16e}");
        }
        let _ = writeln!(out, ",{h:.16e}");
    }
    out
}

/// Parses ray CSV back into spatial paths `(x1, x2)`.
pub fn parse_ray_csv(text: &str) -> Result<Vec<[f64; 2]>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, column: 0, message: e.to_string() })?.clone();
    let dim = match headers.len() {
        8 => 2,
        10 => 3,
        n => return Err(Error::Parse { line: 1, column: 0, message: format!("{n} columns is not a ray CSV") }),
    };
    if headers.iter().collect::<Vec<_>>().join(",") != ray_csv_header(dim) {
        return Err(Error::Parse { line: 1, column: 0, message: "unexpected ray CSV header".into() });
    }
    let mut path = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| Error::Parse { line, column: 0, message: e.to_string() })?;
        let num = |c: usize| -> Result<f64> {
            rec.get(c)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::Parse { line, column: c + 1, message: "expected a finite number".into() })
        };
        for c in 0..rec.len() {
            num(c)?;
        }
        path.push([num(2)?, num(3)?]);
    }
    Ok(path)
}

/// What `cmd_plot` draws.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PlotInput {
    pub domain: Option<Domain>,
    pub ergosphere: Option<Vec<[f64; 2]>>,
    pub horizons: Vec<(Classification, Vec<[f64; 2]>)>,
    pub rays: Vec<Vec<[f64; 2]>>,
}

impl PlotInput {
    pub fn from_report(report: &RunReport) -> Self {
        PlotInput {
            domain: Some(report.domain.clone()),
            ergosphere: report.ergosphere.as_ref().map(|e| e.polyline.clone()),
            horizons: report.holes.iter().map(|h| (h.classification, h.curve.clone())).collect(),
            rays: report.rays.iter().map(|r| r.path.clone()).collect(),
        }
    }

    /// Reads the fields it needs from a report JSON document.
    pub fn from_report_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Erg {
            polyline: Vec<[f64; 2]>,
        }
        #[derive(Deserialize)]
        struct Hole {
            classification: Classification,
            curve: Vec<[f64; 2]>,
        }
        #[derive(Deserialize)]
        struct Ray {
            path: Vec<[f64; 2]>,
        }
        #[derive(Deserialize)]
        struct Doc {
            domain: Option<Domain>,
            ergosphere: Option<Erg>,
            #[serde(default)]
            holes: Vec<Hole>,
            #[serde(default)]
            rays: Vec<Ray>,
        }
        let doc: Doc = serde_json::from_str(text)
            .map_err(|e| Error::Parse { line: e.line(), column: e.column(), message: e.to_string() })?;
        Ok(PlotInput {
            domain: doc.domain,
            ergosphere: doc.ergosphere.map(|e| e.polyline),
            horizons: doc.holes.into_iter().map(|h| (h.classification, h.curve)).collect(),
            rays: doc.rays.into_iter().map(|r| r.path).collect(),
        })
    }
}

const CANVAS: f64 = 800.0;

fn color(c: Classification) -> &'static str {
    match c {
        Classification::Black => "#1b1b1b",
        Classification::White => "#d9822b",
        Classification::Undetermined => "#7f7f7f",
    }
}

/// Deterministic SVG: domain boundaries, dashed ergosphere, horizons colored
/// by classification, thin ray polylines.
pub fn cmd_plot(input: &PlotInput) -> String {
    let (lo, hi) = match &input.domain {
        Some(Domain::Annulus { center, r_outer, .. }) => {
            ([center[0] - r_outer, center[1] - r_outer], [center[0] + r_outer, center[1] + r_outer])
        }
        Some(Domain::Box { min, max }) => ([min[0], min[1]], [max[0], max[1]]),
        None => ([-1.0, -1.0], [1.0, 1.0]),
    };
    let span = (hi[0] - lo[0]).max(hi[1] - lo[1]) * 1.1;
    let mid = [0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])];
    let scale = CANVAS / span;
    let px = |p: [f64; 2]| ((p[0] - mid[0]) * scale + CANVAS / 2.0, CANVAS / 2.0 - (p[1] - mid[1]) * scale);
    let pts = |curve: &[[f64; 2]]| {
        curve
            .iter()
            .map(|p| {
                let (x, y) = px(*p);
                format!("{x:.3},{y:.3}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {c} {c}" width="{c}" height="{c}">"#,
        c = CANVAS
    );
    let _ = writeln!(svg, r##"<rect x="0" y="0" width="{c}" height="{c}" fill="#ffffff"/>"##, c = CANVAS);
    match &input.domain {
        Some(Domain::Annulus { center, r_inner, r_outer }) => {
            let (cx, cy) = px(*center);
            for r in [r_outer, r_inner] {
                if *r > 0.0 {
                    let _ = writeln!(
                        svg,
                        r##"<circle cx="{cx:.3}" cy="{cy:.3}" r="{:.3}" fill="none" stroke="#4a6fa5" stroke-width="1.5"/>"##,
                        r * scale
                    );
                }
            }
        }
        Some(Domain::Box { min, max }) => {
            let (x0, y0) = px([min[0], max[1]]);
            let _ = writeln!(
                svg,
                r##"<rect x="{x0:.3}" y="{y0:.3}" width="{:.3}" height="{:.3}" fill="none" stroke="#4a6fa5" stroke-width="1.5"/>"##,
                (max[0] - min[0]) * scale,
                (max[1] - min[1]) * scale
            );
        }
        None => {}
    }
    for ray in &input.rays {
        let _ = writeln!(svg, r##"<polyline points="{}" fill="none" stroke="#5b8c5a" stroke-width="0.6"/>"##, pts(ray));
    }
    if let Some(e) = &input.ergosphere {
        let _ = writeln!(
            svg,
            r##"<polygon class="ergosphere" points="{}" fill="none" stroke="#b03a2e" stroke-width="1.5" stroke-dasharray="6 4"/>"##,
            pts(e)
        );
    }
    for (class, curve) in &input.horizons {
        let _ = writeln!(
            svg,
            r#"<polygon class="horizon {:?}" points="{}" fill="none" stroke="{}" stroke-width="2.5"/>"#,
            class,
            pts(curve),
            color(*class)
        );
    }
    svg.push_str("</svg>\n");
    svg
}
