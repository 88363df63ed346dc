//! Property tests for the module invariants.

use std::f64::consts::PI;
use std::sync::Arc;

use analog_horizon::fields::{
    build_char_fields, delta_gradient, direction_cross, kernel_direction, perp, CharFieldPair, FieldChoice,
};
use analog_horizon::horizon::{enumerate_cycles, find_limit_cycle, verdict_agrees, CycleSeed, LimitCycleOptions};
use analog_horizon::linalg::{dot, Matrix};
use analog_horizon::media::{
    ergo_function, four_velocity, gordon_metric, medium_metric, MediumFlow, UniformFlow, VortexFlow,
};
use analog_horizon::metric::{
    characteristic_residual, fd_gradient, full_metric, full_symbol, lower_g00, pullback_metric, signature_report,
    solve_xi0, spatial_delta, transform_covector, Covector, Domain, GaugeTransform, MetricField, RadialBumpGauge,
    SpatialPoint,
};
use analog_horizon::rays::{make_null_initial, trace_ray, BicharState, Branch, TraceOptions};
use analog_horizon::report::cmd_horizon;
use analog_horizon::scenario::{build_model, parse_scenario, preset, MetricSpec, Numerics, Scenario, PRESETS};
use proptest::prelude::*;

#[derive(Debug)]
struct ConstantMetric {
    g: Matrix,
    domain: Domain,
}

impl MetricField for ConstantMetric {
    fn dim(&self) -> usize {
        self.g.dim() - 1
    }
    fn domain(&self) -> &Domain {
        &self.domain
    }
    fn eval(&self, _x: &[f64]) -> Matrix {
        self.g
    }
}

/// G = L diag(1, −1, …, −1) Lᵀ with L = I + E, |E| small enough that L is
/// well conditioned.
fn hyperbolic(n: usize, e: &[f64]) -> ConstantMetric {
    let k = n + 1;
    let mut l = Matrix::identity(k);
    for i in 0..k {
        for j in 0..k {
            l[(i, j)] += e[i * k + j];
        }
    }
    let mut d = vec![-1.0; k];
    d[0] = 1.0;
    let g = l.mul(&Matrix::diag(&d)).mul(&l.transpose());
    let domain = if n == 2 { Domain::square(1.0) } else { Domain::cube(1.0) };
    ConstantMetric { g, domain }
}

fn hyperbolic_strategy() -> impl Strategy<Value = ConstantMetric> {
    (2usize..=3).prop_flat_map(|n| {
        prop::collection::vec(-0.25f64..0.25, (n + 1) * (n + 1)).prop_map(move |e| hyperbolic(n, &e))
    })
}

fn vortex_metric(a: f64, b: f64) -> Arc<dyn MetricField> {
    let domain = Domain::annulus(0.3, 1.5);
    medium_metric(&MediumFlow::acoustic(Arc::new(VortexFlow::new(a, b)), 1.0, 1.0, domain)).unwrap()
}

fn vortex_fields(a: f64, b: f64) -> CharFieldPair {
    let model = build_model(&Scenario::new(
        "v",
        MetricSpec::Vortex { a, b, c: 1.0, rho: 1.0, r_inner: 0.3, r_outer_margin: 0.0 },
    ))
    .unwrap();
    build_char_fields(model.metric, model.region.unwrap()).unwrap()
}

fn polar(r: f64, th: f64) -> [f64; 2] {
    [r * th.cos(), r * th.sin()]
}

fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.sub(b).max_abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn signature_equivalence_and_inverse(m in hyperbolic_strategy()) {
        let x = vec![0.0; m.dim()];
        let low = full_metric(&m, &x).unwrap();
        let id = Matrix::identity(m.dim() + 1);
        prop_assert!(max_abs_diff(&low.mul(&m.g), &id) <= 1e-10);
        let g00 = lower_g00(&m, &x).unwrap();
        prop_assert!((g00 - low[(0, 0)]).abs() <= 1e-8 * low[(0, 0)].abs().max(1e-300));
        let rep = signature_report(&m, &x).unwrap();
        let eig_negdef = m.g.spatial_block().sym_eigenvalues().iter().all(|&l| l < 0.0);
        prop_assert_eq!(rep.spatial_negdef, eig_negdef);
        prop_assert_eq!(rep.spatial_negdef, g00 > 0.0);
        prop_assert!(rep.negdef_matches_g00);
    }

    #[test]
    fn null_roots_lie_on_the_cone(m in hyperbolic_strategy(), phi in 0.0..2.0 * PI, psi in 0.0..PI) {
        let n = m.dim();
        let xi: Vec<f64> = if n == 2 {
            vec![phi.cos(), phi.sin()]
        } else {
            vec![psi.sin() * phi.cos(), psi.sin() * phi.sin(), psi.cos()]
        };
        let x = vec![0.0; n];
        if let Ok((r1, r2)) = solve_xi0(&m, &x, &xi) {
            for r in [r1, r2] {
                let cov = Covector::new(r, &xi).unwrap();
                prop_assert!(full_symbol(&m, &x, &cov).abs() <= 1e-10 * cov.norm_sq() * m.g.max_abs());
            }
        }
    }

    #[test]
    fn pullback_keeps_null_covectors_null(r in 0.35f64..0.95, th in 0.0..2.0 * PI, phi in 0.0..2.0 * PI, amp in -0.05f64..0.05) {
        let m = vortex_metric(0.6, 0.8);
        let gauge = RadialBumpGauge { center: [0.0, 0.0], r_a: 0.4, r_b: 0.9, radial_amp: amp, twist: 0.4, time_amp: 0.2 };
        let t: Arc<dyn GaugeTransform> = Arc::new(gauge);
        let pulled = pullback_metric(m.clone(), t.clone()).unwrap();
        let x = polar(r, th);
        let init = make_null_initial(m.as_ref(), &x, &[phi.cos(), phi.sin()], Branch::Root1).unwrap();
        let xi = transform_covector(t.as_ref(), &x, &init.covector()).unwrap();
        let y = t.map(&x);
        prop_assert!(full_symbol(&pulled, &y, &xi).abs() <= 1e-8 * xi.norm_sq());
    }

    #[test]
    fn analytic_gradient_matches_differences(r in 0.35f64..1.4, th in 0.0..2.0 * PI, a in -1.0f64..1.0, b in -1.0f64..1.0) {
        let m = vortex_metric(a, b);
        let x = polar(r, th);
        let g = m.grad(&x);
        let fd = fd_gradient(m.as_ref(), &x, 1e-5);
        for p in 0..2 {
            prop_assert!(max_abs_diff(&g[p], &fd[p]) <= 1e-5, "p={} {:?} {:?}", p, g[p], fd[p]);
        }
    }

    #[test]
    fn gordon_forms_are_mutual_inverses(w1 in -0.6f64..0.6, w2 in -0.6f64..0.6, n_refr in 1.0f64..3.0, c in 1.0f64..2.0) {
        let flow = MediumFlow::gordon(Arc::new(UniformFlow { w: vec![w1, w2] }), c, n_refr, Domain::square(1.0));
        let g = gordon_metric(&flow).unwrap();
        let x = [0.1, -0.2];
        let product = g.covariant(&x).unwrap().mul(&g.eval(&x));
        prop_assert!(max_abs_diff(&product, &Matrix::identity(3)) <= 1e-10);
        let (v0, v) = four_velocity(&flow, &x).unwrap();
        prop_assert!((v0 * v0 - v[0] * v[0] - v[1] * v[1] - 1.0).abs() <= 1e-12 * v0 * v0);
    }

    #[test]
    fn ergo_function_and_delta_share_roots(th in 0.0..2.0 * PI, a in 0.3f64..0.9, b in 0.3f64..0.9, gordon in any::<bool>()) {
        let r0 = a.hypot(b);
        let domain = Domain::annulus(0.55 * r0, 3.0);
        let vel = Arc::new(VortexFlow::new(a, b));
        let flow = if gordon {
            MediumFlow::gordon(vel, 2.0, 2.0, domain)
        } else {
            MediumFlow::acoustic(vel, 1.0, 1.0, domain)
        };
        let m = medium_metric(&flow).unwrap();
        let e = [th.cos(), th.sin()];
        let at = |r: f64| [r * e[0], r * e[1]];
        let bisect = |f: &dyn Fn(f64) -> f64| {
            let (mut lo, mut hi) = (0.6 * r0, 2.9);
            let flo = f(lo);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if (f(mid) > 0.0) == (flo > 0.0) { lo = mid } else { hi = mid }
            }
            0.5 * (lo + hi)
        };
        let r_ergo = bisect(&|r| ergo_function(&flow, &at(r)));
        let r_delta = bisect(&|r| spatial_delta(m.as_ref(), &at(r)));
        prop_assert!((r_ergo - r_delta).abs() <= 1e-9, "{} vs {}", r_ergo, r_delta);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn rays_keep_xi0_and_reverse(r in 0.35f64..0.95, th in 0.0..2.0 * PI, phi in 0.0..2.0 * PI, root1 in any::<bool>()) {
        let m = vortex_metric(0.6, 0.8);
        let branch = if root1 { Branch::Root1 } else { Branch::Root2 };
        let init = make_null_initial(m.as_ref(), &polar(r, th), &[phi.cos(), phi.sin()], branch).unwrap();
        let opts = TraceOptions { s_max: 0.05, ..TraceOptions::default() };
        let ray = trace_ray(m.as_ref(), &init, &opts).unwrap();
        prop_assert!(ray.samples.iter().all(|s| s.xi0 == init.xi0));
        prop_assert!(ray.samples.windows(2).all(|w| w[1].s > w[0].s));
        let end = ray.samples.last().unwrap();
        let back_xi: Vec<f64> = end.xi.iter().map(|v| -v).collect();
        let back = BicharState { s: 0.0, x0: 0.0, x: end.x, xi0: -end.xi0, xi: SpatialPoint::new(&back_xi).unwrap() };
        let opts_back = TraceOptions { s_max: end.s, ..opts };
        let rev = trace_ray(m.as_ref(), &back, &opts_back).unwrap();
        let last = rev.samples.last().unwrap();
        prop_assert!((last.s - end.s).abs() <= 1e-12);
        let err = (last.x[0] - init.x[0]).hypot(last.x[1] - init.x[1]);
        prop_assert!(err <= 1e-6, "reversal error {}", err);
        prop_assert!((last.x0 + end.x0).abs() <= 1e-6);
    }

    #[test]
    fn surface_riding_rays_stay_characteristic(r in 0.35f64..0.95, th in 0.0..2.0 * PI, plus in any::<bool>()) {
        let fields = vortex_fields(0.6, 0.8);
        let m = fields.metric().clone();
        let which = if plus { FieldChoice::Plus } else { FieldChoice::Minus };
        let x = polar(r, th);
        let f = fields.raw(which, &x).unwrap().dir;
        let nu = perp(f);
        let init = make_null_initial(m.as_ref(), &x, &nu, Branch::ZeroXi0).unwrap();
        let ray = trace_ray(m.as_ref(), &init, &TraceOptions { s_max: 0.05, ..TraceOptions::default() }).unwrap();
        for st in &ray.samples {
            let scale = m.eval(&st.x).spatial_block().max_abs() * dot(&st.xi, &st.xi);
            prop_assert!(characteristic_residual(m.as_ref(), &st.x, &st.xi).abs() <= 1e-7 * scale);
        }
    }

    #[test]
    fn field_normals_are_characteristic(r in 0.3f64..1.0, th in 0.0..2.0 * PI, a in 0.3f64..0.9, b in 0.3f64..0.9) {
        let r0 = a.hypot(b);
        let fields = vortex_fields(a, b);
        let x = polar(0.3 + (r - 0.3) / 0.7 * (r0 - 0.3), th);
        for which in FieldChoice::BOTH {
            prop_assert!(fields.normal_residual(which, &x).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn ergosphere_kernel_and_transversality(th in 0.0..2.0 * PI, a in 0.3f64..0.9, b in 0.3f64..0.9) {
        let r0 = a.hypot(b);
        let fields = vortex_fields(a, b);
        let m = fields.metric().clone();
        let y = polar(r0, th);
        let k = kernel_direction(m.as_ref(), &y).unwrap();
        let grad = delta_gradient(m.as_ref(), &y);
        let gn = grad[0].hypot(grad[1]);
        let normal = [grad[0] / gn, grad[1] / gn];
        let plus = fields.raw(FieldChoice::Plus, &y).unwrap().dir;
        let minus = fields.raw(FieldChoice::Minus, &y).unwrap().dir;
        prop_assert!(direction_cross(plus, minus) <= 1e-8);
        for f in [plus, minus] {
            prop_assert!(dot(&f, &k).abs() <= 1e-8);
            prop_assert!(dot(&f, &normal).abs() >= 0.01);
        }
    }

    #[test]
    fn scenario_json_round_trip(a in -2.0f64..2.0, b in 0.5f64..2.0, r_inner in 0.05f64..0.2, margin in 0.0f64..1.0, seeds in 1usize..20) {
        let mut s = Scenario::new("round-trip", MetricSpec::Vortex { a, b, c: 1.0, rho: 1.0, r_inner, r_outer_margin: margin });
        s.numerics = Numerics { seed_count: seeds, ..Numerics::default() };
        let again = parse_scenario(&s.to_json()).unwrap();
        prop_assert_eq!(&again, &s);
        prop_assert_eq!(parse_scenario(&again.to_json()).unwrap(), again);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Seeds anywhere in the ergoregion spiral onto the same cycle, so the
    /// return map contracts toward it.
    #[test]
    fn seeds_converge_to_the_vortex_cycle(r in 0.4f64..0.9, th in 0.0..2.0 * PI) {
        let fields = vortex_fields(0.6, 0.8);
        let x = polar(r, th);
        let f = fields.raw(FieldChoice::Minus, &x).unwrap().dir;
        let seeds = [CycleSeed { point: x, heading: f }, CycleSeed { point: x, heading: [-f[0], -f[1]] }];
        let orbit = find_limit_cycle(&fields, FieldChoice::Minus, &seeds, &LimitCycleOptions::default());
        match orbit {
            Ok(o) => prop_assert!((o.mean_radius - 0.6).abs() <= 1e-6, "{}", o.mean_radius),
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn perturbed_vortex_keeps_its_class(da in -0.01f64..0.01, db in -0.01f64..0.01, black in any::<bool>()) {
        let a = if black { -0.6 } else { 0.6 } * (1.0 + da);
        let b = 0.8 * (1.0 + db);
        let fields = vortex_fields(a, b);
        let orbits = enumerate_cycles(&fields, &LimitCycleOptions::default());
        prop_assert_eq!(orbits.len(), 1);
        prop_assert!((orbits[0].mean_radius - a.abs()).abs() <= 1e-6);
        let s = Scenario::new("p", MetricSpec::Vortex { a, b, c: 1.0, rho: 1.0, r_inner: 0.3, r_outer_margin: 0.0 });
        let report = cmd_horizon(&s, &build_model(&s).unwrap(), false).unwrap();
        let want = if black { "Black" } else { "White" };
        prop_assert_eq!(format!("{:?}", report.holes[0].classification), want);
    }
}

#[test]
fn classifier_agrees_with_flow_direction() {
    let mut checked = 0;
    for name in PRESETS {
        let s = preset(name).unwrap();
        let model = build_model(&s).unwrap();
        let report = cmd_horizon(&s, &model, false).unwrap();
        for h in &report.holes {
            if h.tangential_cone {
                continue;
            }
            let verdict = h.flow_check.expect("medium scenarios carry a flow check");
            assert!(verdict_agrees(h.classification, verdict), "{name}: {:?} vs {verdict:?}", h.classification);
            checked += 1;
        }
    }
    assert!(checked >= 7, "only {checked} holes checked");
}
