//! C ABI over the analog-horizon library.
//!
//! Handles are opaque and owned by the caller once returned; free them with
//! the matching `*_free` function. Strings returned through out-parameters
//! are freed with [`ah_string_free`]. Every function returns an
//! [`AhStatus`]; on failure [`ah_last_error_message`] describes the error
//! for the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use analog_horizon::horizon::{Classification, DetectionMethod};
use analog_horizon::metric::spatial_delta;
use analog_horizon::rays::Branch;
use analog_horizon::report::{cmd_horizon, cmd_trace, ray_csv, Launch, RunReport};
use analog_horizon::scenario::{build_model, parse_scenario, preset, Model, Scenario};
use analog_horizon::Error;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AhStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Io = 5,
    InvalidArgument = 6,
    OutsideDomain = 7,
    /// A hypothesis of the analysis failed or a search did not converge.
    Hypothesis = 8,
    IndexOutOfRange = 9,
    BufferTooSmall = 10,
    Panic = 11,
    Other = 12,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AhClassification {
    Black = 0,
    White = 1,
    Undetermined = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AhMethod {
    ErgosphereCharacteristic = 0,
    LimitCycle = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AhBranch {
    Root1 = 0,
    Root2 = 1,
    ZeroXi0 = 2,
}

/// Summary of one detected horizon.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AhHole {
    pub method: AhMethod,
    pub classification: AhClassification,
    pub mean_radius: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub max_characteristic_residual: f64,
    /// Number of (x1, x2) points in the horizon polyline.
    pub point_count: usize,
}

/// A validated scenario with its built model.
pub struct AhScenario {
    scenario: Scenario,
    model: Model,
}

pub struct AhReport {
    report: RunReport,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> AhStatus {
    match e {
        Error::Parse { .. } => AhStatus::Parse,
        Error::Validation(_) => AhStatus::Validation,
        Error::Io(_) | Error::Schema(_) | Error::NonFiniteData { .. } => AhStatus::Io,
        Error::OutsideDomain { .. } => AhStatus::OutsideDomain,
        Error::InvalidInput(_) | Error::Dimension { .. } | Error::ZeroCovector | Error::NotNull { .. } => {
            AhStatus::InvalidArgument
        }
        Error::HypothesisViolation { .. }
        | Error::NoConvergence { .. }
        | Error::EscapedRegion(_)
        | Error::NotCharacteristic { .. }
        | Error::NonSimpleOrbit { .. }
        | Error::CharacteristicS1 { .. }
        | Error::StepFailure { .. }
        | Error::NoErgoregion
        | Error::NotAxisymmetric { .. }
        | Error::RankCollapse { .. } => AhStatus::Hypothesis,
        _ => AhStatus::Other,
    }
}

struct Failure(AhStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn fail(status: AhStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AhStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            AhStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            AhStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(fail(AhStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(AhStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| fail(AhStatus::NullPointer, format!("{what} is null")))
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Failure> {
    if p.is_null() {
        return Err(fail(AhStatus::NullPointer, format!("{what} is null")));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(AhStatus::NullPointer, format!("{what} is null")));
    }
    out.write(value);
    Ok(())
}

fn new_string(s: String) -> Result<*mut c_char, Failure> {
    CString::new(s).map(CString::into_raw).map_err(|_| fail(AhStatus::Other, "output contains a NUL byte"))
}

fn scenario_handle(scenario: Scenario) -> Result<*mut AhScenario, Failure> {
    let model = build_model(&scenario)?;
    Ok(Box::into_raw(Box::new(AhScenario { scenario, model })))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ah_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the last failed call on this thread, or "" after a success.
/// Valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn ah_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Parses and validates a scenario JSON document.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ah_scenario_from_json(json: *const c_char, out: *mut *mut AhScenario) -> AhStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let handle = scenario_handle(parse_scenario(text)?)?;
        put(out, handle, "out")
    })
}

/// Loads a built-in scenario by name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ah_scenario_preset(name: *const c_char, out: *mut *mut AhScenario) -> AhStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let s = preset(name).ok_or_else(|| fail(AhStatus::InvalidArgument, format!("unknown preset {name}")))?;
        put(out, scenario_handle(s)?, "out")
    })
}

/// # Safety
/// `scenario` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ah_scenario_free(scenario: *mut AhScenario) {
    if !scenario.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(scenario))));
    }
}

/// Spatial dimension of the scenario (2 or 3), or 0 for a null handle.
///
/// # Safety
/// `scenario` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ah_scenario_dim(scenario: *const AhScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.scenario.dim())
}

/// Determinant of the spatial block of the contravariant metric at `x`.
///
/// # Safety
/// `x` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ah_scenario_spatial_delta(
    scenario: *const AhScenario,
    x: *const f64,
    n: usize,
    out: *mut f64,
) -> AhStatus {
    guard(|| {
        let s = ref_arg(scenario, "scenario")?;
        let x = slice_arg(x, n, "x")?;
        let m = s.model.metric.as_ref();
        if n != m.dim() {
            return Err(Error::Dimension { expected: m.dim(), got: n }.into());
        }
        if !m.domain().contains(x, 0.0) {
            return Err(Error::OutsideDomain { point: x.to_vec() }.into());
        }
        put(out, spatial_delta(m, x), "out")
    })
}

/// Runs the full horizon search and classification.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ah_run_horizon(scenario: *const AhScenario, out: *mut *mut AhReport) -> AhStatus {
    guard(|| {
        let s = ref_arg(scenario, "scenario")?;
        let report = cmd_horizon(&s.scenario, &s.model, false)?;
        put(out, Box::into_raw(Box::new(AhReport { report })), "out")
    })
}

/// Number of horizons in the report, or 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ah_report_hole_count(report: *const AhReport) -> usize {
    report.as_ref().map_or(0, |r| r.report.holes.len())
}

/// Nonzero when the scenario guarantees a horizon and none was found.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ah_report_missing_expected_horizon(report: *const AhReport) -> bool {
    report.as_ref().is_some_and(|r| r.report.missing_expected_horizon())
}

/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ah_report_hole(report: *const AhReport, index: usize, out: *mut AhHole) -> AhStatus {
    guard(|| {
        let r = ref_arg(report, "report")?;
        let h = r
            .report
            .holes
            .get(index)
            .ok_or_else(|| fail(AhStatus::IndexOutOfRange, format!("hole {index} of {}", r.report.holes.len())))?;
        let hole = AhHole {
            method: match h.method {
                DetectionMethod::ErgosphereCharacteristic => AhMethod::ErgosphereCharacteristic,
                DetectionMethod::LimitCycle => AhMethod::LimitCycle,
            },
            classification: match h.classification {
                Classification::Black => AhClassification::Black,
                Classification::White => AhClassification::White,
                Classification::Undetermined => AhClassification::Undetermined,
            },
            mean_radius: h.mean_radius,
            beta_min: h.beta_min,
            beta_max: h.beta_max,
            max_characteristic_residual: h.max_characteristic_residual,
            point_count: h.curve.len(),
        };
        put(out, hole, "out")
    })
}

/// Copies the horizon polyline as interleaved x1, x2 pairs into `buf`,
/// which holds `capacity` doubles. `written` receives the number of doubles
/// needed; BufferTooSmall is returned (and nothing copied) when it exceeds
/// `capacity`.
///
/// # Safety
/// `buf` must point to `capacity` writable doubles; `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ah_report_hole_points(
    report: *const AhReport,
    index: usize,
    buf: *mut f64,
    capacity: usize,
    written: *mut usize,
) -> AhStatus {
    guard(|| {
        let r = ref_arg(report, "report")?;
        let h = r.report.holes.get(index).ok_or_else(|| fail(AhStatus::IndexOutOfRange, format!("hole {index}")))?;
        let need = 2 * h.curve.len();
        put(written, need, "written")?;
        if need > capacity {
            return Err(fail(AhStatus::BufferTooSmall, format!("need {need} doubles, have {capacity}")));
        }
        if buf.is_null() {
            return Err(fail(AhStatus::NullPointer, "buf is null"));
        }
        let dst = std::slice::from_raw_parts_mut(buf, need);
        for (k, p) in h.curve.iter().enumerate() {
            dst[2 * k] = p[0];
            dst[2 * k + 1] = p[1];
        }
        Ok(())
    })
}

/// Serializes the report to JSON. Free the string with [`ah_string_free`].
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ah_report_to_json(report: *const AhReport, out: *mut *mut c_char) -> AhStatus {
    guard(|| {
        let r = ref_arg(report, "report")?;
        put(out, new_string(r.report.to_json()?)?, "out")
    })
}

/// # Safety
/// `report` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ah_report_free(report: *mut AhReport) {
    if !report.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(report))));
    }
}

/// Traces one null ray from `x` with spatial covector `xi` (both of length
/// `n`) and returns the samples as CSV.
///
/// # Safety
/// `x` and `xi` must point to `n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ah_trace_ray_csv(
    scenario: *const AhScenario,
    x: *const f64,
    xi: *const f64,
    n: usize,
    branch: AhBranch,
    out: *mut *mut c_char,
) -> AhStatus {
    guard(|| {
        let s = ref_arg(scenario, "scenario")?;
        let x = slice_arg(x, n, "x")?.to_vec();
        let xi = slice_arg(xi, n, "xi")?.to_vec();
        let branch = match branch {
            AhBranch::Root1 => Branch::Root1,
            AhBranch::Root2 => Branch::Root2,
            AhBranch::ZeroXi0 => Branch::ZeroXi0,
        };
        let (ray, _) = cmd_trace(&s.scenario, &s.model, &Launch::Covector { x, xi, branch })?;
        put(out, new_string(ray_csv(s.model.metric.as_ref(), &ray))?, "out")
    })
}

/// # Safety
/// `s` must come from this library and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ah_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
