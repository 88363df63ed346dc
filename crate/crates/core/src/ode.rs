//! Dormand–Prince 5(4) embedded Runge–Kutta stepper with adaptive step size.
//!
//! The stepper is driven one accepted step at a time so callers can run their
//! own event detection (domain exits, section crossings) between steps and
//! localize events with [`Dopri45::trial_step`].

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights (identical to the last stage row: FSAL).
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// Difference between fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Step-size controller settings.
///
/// - `rel_tol`, `abs_tol`: mixed error tolerance per component
/// - `h_min`: smallest step before the controller gives up
/// - `h_max`: largest step ever attempted
/// - `max_steps`: accepted-step budget (checked by callers via [`Dopri45::steps`])
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OdeSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeSettings {
    fn default() -> Self {
        OdeSettings { rel_tol: 1e-9, abs_tol: 1e-10, h_min: 1e-14, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }
}

impl OdeSettings {
    pub fn tolerances(mut self, rel_tol: f64, abs_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self.abs_tol = abs_tol;
        self
    }

    pub fn h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    pub fn max_steps(mut self, n: usize) -> Self {
        self.max_steps = n;
        self
    }
}

/// Adaptive integrator state for `y' = f(s, y)`.
pub struct Dopri45 {
    settings: OdeSettings,
    s: f64,
    y: Vec<f64>,
    s_prev: f64,
    y_prev: Vec<f64>,
    h: f64,
    steps: usize,
    rejected: usize,
    k: [Vec<f64>; 7],
    tmp: Vec<f64>,
    y_new: Vec<f64>,
}

impl Dopri45 {
    /// `h0 = None` picks an initial step from the local derivative scale.
    pub fn new<F>(settings: OdeSettings, rhs: &mut F, s0: f64, y0: &[f64], h0: Option<f64>) -> Self
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y0.len();
        let mut me = Dopri45 {
            settings,
            s: s0,
            y: y0.to_vec(),
            s_prev: s0,
            y_prev: y0.to_vec(),
            h: 0.0,
            steps: 0,
            rejected: 0,
            k: std::array::from_fn(|_| vec![0.0; n]),
            tmp: vec![0.0; n],
            y_new: vec![0.0; n],
        };
        me.h = match h0 {
            Some(h) => h,
            None => me.initial_step(rhs),
        }
        .min(settings.h_max);
        me
    }

    fn initial_step<F>(&mut self, rhs: &mut F) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        rhs(self.s, &self.y, &mut self.k[0]);
        let sc = |y: f64| self.settings.abs_tol + self.settings.rel_tol * y.abs();
        let n = self.y.len() as f64;
        let d0 = (self.y.iter().map(|v| (v / sc(*v)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (self.y.iter().zip(&self.k[0]).map(|(v, f)| (f / sc(*v)).powi(2)).sum::<f64>() / n).sqrt();
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h.max(1e-10)
    }

    pub fn s(&self) -> f64 {
        self.s
    }
    pub fn y(&self) -> &[f64] {
        &self.y
    }
    pub fn s_prev(&self) -> f64 {
        self.s_prev
    }
    pub fn y_prev(&self) -> &[f64] {
        &self.y_prev
    }
    pub fn steps(&self) -> usize {
        self.steps
    }
    pub fn rejected(&self) -> usize {
        self.rejected
    }
    pub fn settings(&self) -> &OdeSettings {
        &self.settings
    }
    /// Step size the next attempt will use.
    pub fn next_step_size(&self) -> f64 {
        self.h
    }

    /// Replaces the current state, keeping the step size.
    pub fn reset(&mut self, s: f64, y: &[f64]) {
        self.s = s;
        self.y.copy_from_slice(y);
        self.s_prev = s;
        self.y_prev.copy_from_slice(y);
    }

    /// Computes the fifth-order solution of one step of size `h` from
    /// `(s, y)` into `out`, returning the scaled error norm.
    fn attempt<F>(&mut self, rhs: &mut F, s: f64, y: &[f64], h: f64, out: &mut [f64]) -> f64
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let n = y.len();
        rhs(s, y, &mut self.k[0]);
        for stage in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in A[stage][..stage].iter().enumerate() {
                    acc += a * self.k[j][i];
                }
                self.tmp[i] = y[i] + h * acc;
            }
            rhs(s + C[stage] * h, &self.tmp, &mut self.k[stage]);
        }
        let mut err = 0.0;
        for i in 0..n {
            let mut acc = 0.0;
            let mut e = 0.0;
            for j in 0..7 {
                acc += B5[j] * self.k[j][i];
                e += E[j] * self.k[j][i];
            }
            out[i] = y[i] + h * acc;
            let sc = self.settings.abs_tol + self.settings.rel_tol * y[i].abs().max(out[i].abs());
            err += (h * e / sc).powi(2);
        }
        let err = (err / n as f64).sqrt();
        if err.is_finite() && out.iter().all(|v| v.is_finite()) {
            err
        } else {
            f64::INFINITY
        }
    }

    /// Advances by one accepted step, never passing `s_limit`.
    pub fn step_until<F>(&mut self, rhs: &mut F, s_limit: f64) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut y_new = std::mem::take(&mut self.y_new);
        let y = self.y.clone();
        let mut rejections = 0usize;
        loop {
            let remaining = s_limit - self.s;
            let mut h = self.h.min(self.settings.h_max);
            let clipped = h >= remaining;
            if clipped {
                h = remaining;
            }
            let err = self.attempt(rhs, self.s, &y, h, &mut y_new);
            if err <= 1.0 {
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !clipped || factor < 1.0 {
                    self.h = (h * factor).min(self.settings.h_max);
                }
                self.s_prev = self.s;
                self.y_prev.copy_from_slice(&y);
                self.s = if clipped { s_limit } else { self.s + h };
                self.y.copy_from_slice(&y_new);
                self.steps += 1;
                self.y_new = y_new;
                return Ok(());
            }
            self.rejected += 1;
            rejections += 1;
            let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
            self.h = h * factor;
            if self.h < self.settings.h_min * self.s.abs().max(1.0) || rejections > 200 {
                self.y_new = y_new;
                return Err(Error::StepFailure { s: self.s, h_min: self.settings.h_min });
            }
        }
    }

    pub fn step<F>(&mut self, rhs: &mut F) -> Result<()>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        self.step_until(rhs, f64::INFINITY)
    }

    /// Fifth-order solution of a single uncontrolled step of size `h` from
    /// `(s, y)`. Used to localize events inside an accepted step, where any
    /// shorter step is at least as accurate.
    pub fn trial_step<F>(&mut self, rhs: &mut F, s: f64, y: &[f64], h: f64) -> Vec<f64>
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let mut out = vec![0.0; y.len()];
        self.attempt(rhs, s, y, h, &mut out);
        out
    }

    /// Bisects inside the last accepted step for the first parameter where
    /// `outside(y)` switches from false to true. Returns `(s, y)` on the
    /// `false` side within `tol` of the switch.
    pub fn locate<F, P>(&mut self, rhs: &mut F, mut outside: P, tol: f64) -> (f64, Vec<f64>)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
        P: FnMut(&[f64]) -> bool,
    {
        let s0 = self.s_prev;
        let y0 = self.y_prev.clone();
        let (mut lo, mut hi) = (0.0, self.s - s0);
        let mut best = y0.clone();
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            let ym = self.trial_step(rhs, s0, &y0, mid);
            if outside(&ym) {
                hi = mid;
            } else {
                lo = mid;
                best = ym;
            }
        }
        (s0 + lo, best)
    }
}
