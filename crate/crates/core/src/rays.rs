//! Null bicharacteristics of the Hamiltonian H(x, ξ) = Σ g^{jk}(x) ξ_j ξ_k:
//!
//! dx_j/ds = 2 Σ_k g^{jk} ξ_k,   dξ_p/ds = −Σ_{j,k} ∂_p g^{jk} ξ_j ξ_k.
//!
//! ξ₀ is conserved because the metric does not depend on x₀, so it is carried
//! as a constant instead of being integrated.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{dot, Matrix};
use crate::metric::{
    characteristic_residual, symbol_of, xi0_roots, Covector, MetricField, SpatialCovector, SpatialPoint,
};
use crate::ode::{Dopri45, OdeSettings};

/// Phase-space point (s, x₀, x, ξ₀, ξ).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BicharState {
    pub s: f64,
    pub x0: f64,
    pub x: SpatialPoint,
    pub xi0: f64,
    pub xi: SpatialCovector,
}

impl BicharState {
    pub fn covector(&self) -> Covector {
        Covector { xi0: self.xi0, xi: self.xi }
    }

    fn pack(&self) -> Vec<f64> {
        let mut y = Vec::with_capacity(1 + 2 * self.x.dim());
        y.push(self.x0);
        y.extend_from_slice(&self.x);
        y.extend_from_slice(&self.xi);
        y
    }

    fn unpack(s: f64, xi0: f64, y: &[f64]) -> Self {
        let n = (y.len() - 1) / 2;
        BicharState {
            s,
            x0: y[0],
            x: SpatialPoint::from_slice(&y[1..=n]),
            xi0,
            xi: SpatialPoint::from_slice(&y[n + 1..]),
        }
    }
}

/// Which root of the null-cone quadratic fixes ξ₀.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Larger root.
    Root1,
    /// Smaller root.
    Root2,
    /// ξ₀ = 0; valid only for characteristic spatial covectors.
    ZeroXi0,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeOrientation {
    Forward,
    Backward,
    Stalled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    LeftDomain,
    MaxParam,
    /// The controller could not continue: step below the floor, or the
    /// step budget ran out before `s_max`.
    StepFailure,
}

/// Integration settings for [`trace_ray`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceOptions {
    pub s_max: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Rescale ξ back onto the null cone after every accepted step.
    pub project_null: bool,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions { s_max: 50.0, rel_tol: 1e-9, abs_tol: 1e-10, max_steps: 200_000, project_null: false }
    }
}

#[derive(Clone, Debug)]
pub struct RayResult {
    pub samples: Vec<BicharState>,
    /// max |H| along the ray divided by |ξ(0)|² (full covector norm).
    pub h_drift_max: f64,
    pub termination: Termination,
    pub orientation: TimeOrientation,
}

/// Builds a null initial state at x with the given spatial covector.
pub fn make_null_initial(m: &dyn MetricField, x: &[f64], xi: &[f64], branch: Branch) -> Result<BicharState> {
    if x.len() != m.dim() || xi.len() != m.dim() {
        return Err(Error::Dimension { expected: m.dim(), got: xi.len().min(x.len()) });
    }
    if xi.iter().all(|v| *v == 0.0) {
        return Err(Error::ZeroCovector);
    }
    let g = m.eval(x);
    let xi0 = match branch {
        Branch::ZeroXi0 => {
            let res = characteristic_residual(m, x, xi);
            let scale = g.spatial_block().max_abs().max(1e-300) * dot(xi, xi);
            if res.abs() > 1e-8 * scale {
                return Err(Error::NotNull { residual: res / scale });
            }
            0.0
        }
        Branch::Root1 => xi0_roots(&g, xi)?.0,
        Branch::Root2 => xi0_roots(&g, xi)?.1,
    };
    Ok(BicharState { s: 0.0, x0: 0.0, x: SpatialPoint::new(x)?, xi0, xi: SpatialPoint::new(xi)? })
}

/// Sign of dx₀/ds = 2 Σ_k g^{0k} ξ_k.
pub fn time_orientation(m: &dyn MetricField, st: &BicharState) -> TimeOrientation {
    let g = m.eval(&st.x);
    let n = st.x.dim();
    let v = 2.0 * (g[(0, 0)] * st.xi0 + (0..n).map(|k| g[(0, k + 1)] * st.xi[k]).sum::<f64>());
    if v.abs() < 1e-12 {
        TimeOrientation::Stalled
    } else if v > 0.0 {
        TimeOrientation::Forward
    } else {
        TimeOrientation::Backward
    }
}

/// ẋ = 2 G ξ for the full covector (ξ₀, ξ).
fn velocity(g: &Matrix, xi0: f64, xi: &[f64]) -> [f64; 4] {
    let mut full = [0.0; 4];
    full[0] = xi0;
    full[1..=xi.len()].copy_from_slice(xi);
    let v = g.mat_vec(&full[..=xi.len()]);
    v.map(|c| 2.0 * c)
}

fn hamilton_rhs(m: &dyn MetricField, xi0: f64, y: &[f64], dy: &mut [f64]) {
    let n = (y.len() - 1) / 2;
    let x = &y[1..=n];
    let xi = &y[n + 1..];
    let g = m.eval(x);
    let v = velocity(&g, xi0, xi);
    dy[..=n].copy_from_slice(&v[..=n]);
    let grad = m.grad(x);
    for p in 0..n {
        dy[n + 1 + p] = -symbol_of(&grad[p], xi0, xi);
    }
}

/// Integrates the null bicharacteristic from `init` until it leaves the
/// domain or reaches `s_max`.
pub fn trace_ray(m: &dyn MetricField, init: &BicharState, opts: &TraceOptions) -> Result<RayResult> {
    let n = m.dim();
    if init.x.dim() != n {
        return Err(Error::Dimension { expected: n, got: init.x.dim() });
    }
    let domain = m.domain();
    let diam = domain.diameter();
    let edge_tol = 1e-12 * diam;
    if !domain.contains(&init.x, edge_tol) {
        return Err(Error::OutsideDomain { point: init.x.to_vec() });
    }
    let xi0 = init.xi0;
    let norm0 = init.covector().norm_sq().max(f64::MIN_POSITIVE);
    let drift = |y: &[f64]| -> f64 {
        let g = m.eval(&y[1..=n]);
        symbol_of(&g, xi0, &y[n + 1..]).abs() / norm0
    };
    let mut rhs = |_s: f64, y: &[f64], dy: &mut [f64]| hamilton_rhs(m, xi0, y, dy);
    let orientation = time_orientation(m, init);

    let mut samples = vec![BicharState { s: init.s, ..*init }];
    let mut y = init.pack();
    let mut s = init.s;
    let mut h_drift_max = drift(&y);

    // A launch with zero spatial velocity (e.g. ξ = b on the ergosphere)
    // gets one second-order Taylor step before adaptive integration.
    let mut f0 = vec![0.0; y.len()];
    rhs(s, &y, &mut f0);
    let vnorm = f0[1..=n].iter().map(|v| v * v).sum::<f64>().sqrt();
    let fnorm = f0.iter().map(|v| v * v).sum::<f64>().sqrt();
    if vnorm < 1e-12 * fnorm.max(1e-300) && fnorm > 0.0 {
        let h = 1e-6;
        let eps = 1e-7 / fnorm;
        let plus: Vec<f64> = y.iter().zip(&f0).map(|(a, b)| a + eps * b).collect();
        let minus: Vec<f64> = y.iter().zip(&f0).map(|(a, b)| a - eps * b).collect();
        let (mut fp, mut fm) = (vec![0.0; y.len()], vec![0.0; y.len()]);
        rhs(s, &plus, &mut fp);
        rhs(s, &minus, &mut fm);
        for i in 0..y.len() {
            let second = (fp[i] - fm[i]) / (2.0 * eps);
            y[i] += h * f0[i] + 0.5 * h * h * second;
        }
        s += h;
        samples.push(BicharState::unpack(s, xi0, &y));
        h_drift_max = h_drift_max.max(drift(&y));
    }

    let settings = OdeSettings::default()
        .tolerances(opts.rel_tol, opts.abs_tol)
        .max_steps(opts.max_steps)
        .h_max((opts.s_max - s).max(1e-12));
    let mut ode = Dopri45::new(settings, &mut rhs, s, &y, None);
    let termination = loop {
        if ode.s() >= opts.s_max {
            break Termination::MaxParam;
        }
        if ode.steps() >= opts.max_steps || ode.step_until(&mut rhs, opts.s_max).is_err() {
            break Termination::StepFailure;
        }
        if !domain.contains(&ode.y()[1..=n], edge_tol) {
            let (s_exit, y_exit) = ode.locate(&mut rhs, |y| !domain.contains(&y[1..=n], edge_tol), 1e-10);
            if s_exit > samples.last().map_or(f64::NEG_INFINITY, |p| p.s) {
                h_drift_max = h_drift_max.max(drift(&y_exit));
                samples.push(BicharState::unpack(s_exit, xi0, &y_exit));
            }
            break Termination::LeftDomain;
        }
        let mut y_now = ode.y().to_vec();
        if opts.project_null && project_to_null(m, xi0, &mut y_now) {
            ode.reset(ode.s(), &y_now);
        }
        h_drift_max = h_drift_max.max(drift(&y_now));
        samples.push(BicharState::unpack(ode.s(), xi0, &y_now));
    };
    Ok(RayResult { samples, h_drift_max, termination, orientation })
}

/// Rescales the spatial ξ by the root of H(λξ) = 0 nearest 1.
fn project_to_null(m: &dyn MetricField, xi0: f64, y: &mut [f64]) -> bool {
    let n = (y.len() - 1) / 2;
    let g = m.eval(&y[1..=n]);
    let xi = &y[n + 1..];
    let a = g.spatial_block().quad_form(xi);
    let b = 2.0 * xi0 * (0..n).map(|k| g[(0, k + 1)] * xi[k]).sum::<f64>();
    let c = g[(0, 0)] * xi0 * xi0;
    let disc = b * b - 4.0 * a * c;
    if a == 0.0 || disc < 0.0 {
        return false;
    }
    let sq = disc.sqrt();
    let roots = [(-b + sq) / (2.0 * a), (-b - sq) / (2.0 * a)];
    let lam = if (roots[0] - 1.0).abs() <= (roots[1] - 1.0).abs() { roots[0] } else { roots[1] };
    if !(lam.is_finite() && (lam - 1.0).abs() < 0.1) {
        return false;
    }
    for v in &mut y[n + 1..] {
        *v *= lam;
    }
    true
}

/// max over samples of |g_{jk} ẋ_j ẋ_k| / |ẋ|², with ẋ = 2Gξ.
pub fn null_geodesic_residual(m: &dyn MetricField, ray: &RayResult) -> f64 {
    let mut worst: f64 = 0.0;
    for st in &ray.samples {
        let g = m.eval(&st.x);
        let Some(low) = g.inverse() else { continue };
        let n = st.x.dim();
        let v = velocity(&g, st.xi0, &st.xi);
        let v = &v[..=n];
        let vv = dot(v, v);
        if vv > 0.0 {
            worst = worst.max(low.quad_form(v).abs() / vv);
        }
    }
    worst
}

/// Traces a batch of rays in parallel; output order matches input order.
pub fn trace_rays(m: &dyn MetricField, inits: &[BicharState], opts: &TraceOptions) -> Vec<Result<RayResult>> {
    inits.par_iter().map(|st| trace_ray(m, st, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{Domain, Minkowski};

    #[test]
    fn minkowski_ray_is_straight() {
        let m = Minkowski::new(Domain::square(5.0));
        let init = make_null_initial(&m, &[0.0, 0.0], &[-1.0, 0.0], Branch::Root1).unwrap();
        assert_eq!(init.xi0, 1.0);
        let ray = trace_ray(&m, &init, &TraceOptions { s_max: 2.0, ..Default::default() }).unwrap();
        assert_eq!(ray.termination, Termination::MaxParam);
        assert_eq!(ray.orientation, TimeOrientation::Forward);
        for st in &ray.samples {
            assert!((st.x0 - 2.0 * st.s).abs() < 1e-12);
            assert!((st.x[0] - 2.0 * st.s).abs() < 1e-12);
            assert!(st.x[1].abs() < 1e-14);
        }
        assert!(null_geodesic_residual(&m, &ray) < 1e-14);
        assert!(ray.h_drift_max < 1e-14);
    }

    #[test]
    fn ray_leaving_the_box_stops_on_the_edge() {
        let m = Minkowski::new(Domain::square(1.0));
        let init = make_null_initial(&m, &[0.0, 0.0], &[-1.0, 0.0], Branch::Root1).unwrap();
        let ray = trace_ray(&m, &init, &TraceOptions::default()).unwrap();
        assert_eq!(ray.termination, Termination::LeftDomain);
        let last = ray.samples.last().unwrap();
        assert!((last.x[0] - 1.0).abs() < 1e-9 && (last.s - 0.5).abs() < 1e-9);
    }

    #[test]
    fn zero_covector_is_rejected() {
        let m = Minkowski::new(Domain::square(1.0));
        assert!(make_null_initial(&m, &[0.0, 0.0], &[0.0, 0.0], Branch::Root1).is_err());
        assert!(matches!(
            make_null_initial(&m, &[0.0, 0.0], &[1.0, 0.0], Branch::ZeroXi0),
            Err(Error::NotNull { .. })
        ));
    }

    #[test]
    fn launch_outside_domain_fails() {
        let m = Minkowski::new(Domain::square(1.0));
        let st = BicharState {
            s: 0.0,
            x0: 0.0,
            x: SpatialPoint::xy(3.0, 0.0),
            xi0: 1.0,
            xi: SpatialPoint::xy(1.0, 0.0),
        };
        assert!(matches!(trace_ray(&m, &st, &TraceOptions::default()), Err(Error::OutsideDomain { .. })));
    }
}
