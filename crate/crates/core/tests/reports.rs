use analog_horizon::report::{
    cmd_check, cmd_horizon, cmd_plot, cmd_trace, parse_ray_csv, ray_csv, ray_csv_header, ray_record, Launch, PlotInput,
    RunReport, REPORT_SCHEMA, SCHEMA_VERSION,
};
use analog_horizon::rays::Branch;
use analog_horizon::scenario::{build_model, preset, PRESETS};
use analog_horizon::Error;
use jsonschema::JSONSchema;
use serde_json::Value;

fn schema() -> JSONSchema {
    let schema: Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
    JSONSchema::compile(&schema).unwrap()
}

fn horizon(name: &str) -> RunReport {
    let s = preset(name).unwrap();
    cmd_horizon(&s, &build_model(&s).unwrap(), false).unwrap()
}

fn assert_valid(schema: &JSONSchema, text: &str, what: &str) {
    let value: Value = serde_json::from_str(text).unwrap();
    let msgs: Vec<String> = match schema.validate(&value) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("{what}: {msgs:?}");
}

#[test]
fn every_preset_report_matches_the_schema() {
    let schema = schema();
    for name in PRESETS {
        let s = preset(name).unwrap();
        let model = build_model(&s).unwrap();
        let mut report = cmd_horizon(&s, &model, true).unwrap();
        let (ray, branch) = cmd_trace(&s, &model, &Launch::Covector { x: vec![0.7, 0.1], xi: vec![1.0, 0.0], branch: Branch::Root1 })
            .unwrap();
        report.rays.push(ray_record(&ray, branch));
        assert_eq!(report.schema_version, SCHEMA_VERSION);
        assert_valid(&schema, &report.to_json().unwrap(), name);
        assert_valid(&schema, &cmd_check(&s, &model).to_json().unwrap(), name);
    }
}

#[test]
fn non_finite_numbers_fail_the_schema() {
    let schema = schema();
    let mut value: Value = serde_json::from_str(&horizon("vortex-white").to_json().unwrap()).unwrap();
    assert!(schema.is_valid(&value));
    value["holes"][0]["mean_radius"] = Value::Null;
    assert!(!schema.is_valid(&value));
}

#[test]
fn vortex_check_finds_the_ergosphere() {
    let s = preset("vortex-white").unwrap();
    let report = cmd_check(&s, &build_model(&s).unwrap());
    let e = report.ergosphere.expect("ergosphere");
    assert!((e.radius_min - 1.0).abs() <= 1e-9 && (e.radius_max - 1.0).abs() <= 1e-9);
    let flat = preset("minkowski").unwrap();
    let report = cmd_check(&flat, &build_model(&flat).unwrap());
    assert!(!report.ergoregion && report.ergosphere.is_none());
    let uniform = preset("gordon-uniform").unwrap();
    let report = cmd_check(&uniform, &build_model(&uniform).unwrap());
    assert_eq!(report.signature.subluminal, Some(true));
}

#[test]
fn expected_horizons_per_preset() {
    let cases = [
        ("vortex-white", vec![(0.6, "White")]),
        ("vortex-black", vec![(0.6, "Black")]),
        ("swirl-linear", vec![(0.5, "White")]),
        ("swirl-three", vec![(0.4, "White"), (0.55, "White"), (0.7, "White")]),
        ("radial-gordon-white", vec![(1.0, "White")]),
        ("radial-gordon-black", vec![(1.0, "Black")]),
        ("radial-acoustic-white", vec![(1.0, "White")]),
        ("radial-acoustic-black", vec![(1.0, "Black")]),
        ("gordon-uniform", vec![]),
        ("minkowski", vec![]),
    ];
    for (name, want) in cases {
        let report = horizon(name);
        let got: Vec<(f64, String)> =
            report.holes.iter().map(|h| (h.mean_radius, format!("{:?}", h.classification))).collect();
        assert_eq!(got.len(), want.len(), "{name}: {got:?}");
        for ((r, c), (wr, wc)) in got.iter().zip(&want) {
            assert!((r - wr).abs() <= 1e-6 && c == wc, "{name}: {got:?}");
        }
        assert!(!report.missing_expected_horizon(), "{name}");
    }
}

#[test]
fn trace_csv_columns_follow_dimension() {
    assert_eq!(ray_csv_header(2), "s,x0,x1,x2,xi0,xi1,xi2,H");
    assert_eq!(ray_csv_header(3), "s,x0,x1,x2,x3,xi0,xi1,xi2,xi3,H");
    let s = preset("minkowski").unwrap();
    let model = build_model(&s).unwrap();
    let (ray, _) =
        cmd_trace(&s, &model, &Launch::Covector { x: vec![0.0, 0.0], xi: vec![-1.0, 0.0], branch: Branch::Root1 }).unwrap();
    let text = ray_csv(model.metric.as_ref(), &ray);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), ray_csv_header(2));
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(cols.len(), 8);
        assert!(cols[7].abs() <= 1e-14);
        // Straight line at unit speed in each of x0 and x1.
        assert!((cols[1] - 2.0 * cols[0]).abs() <= 1e-12 && (cols[2] - 2.0 * cols[0]).abs() <= 1e-12);
    }
    let outside = cmd_trace(&s, &model, &Launch::Covector { x: vec![5.0, 0.0], xi: vec![1.0, 0.0], branch: Branch::Root1 });
    assert!(matches!(outside, Err(Error::OutsideDomain { .. })));
}

#[test]
fn vortex_ray_spirals_toward_the_horizon() {
    let s = preset("vortex-white").unwrap();
    let model = build_model(&s).unwrap();
    let (ray, branch) = cmd_trace(&s, &model, &Launch::Kernel { angle: 0.3 }).unwrap();
    assert_eq!(branch, Branch::ZeroXi0);
    let x0: Vec<f64> = ray.samples.iter().map(|st| st.x0).collect();
    assert!(x0.windows(2).all(|w| w[1] >= w[0]) || x0.windows(2).all(|w| w[1] <= w[0]));
    let gap: Vec<f64> = ray.samples.iter().map(|st| (st.x.norm() - 0.6).abs()).collect();
    let quarter = gap.len() / 4;
    assert!(gap[gap.len() - 1] < 1e-3, "ended at r = {}", ray.samples.last().unwrap().x.norm());
    assert!(gap[3 * quarter] < gap[quarter] && gap[quarter] < gap[0]);
}

#[test]
fn plots_are_deterministic_and_complete() {
    let report = horizon("vortex-white");
    let input = PlotInput::from_report(&report);
    let svg = cmd_plot(&input);
    assert_eq!(svg, cmd_plot(&PlotInput::from_report_json(&report.to_json().unwrap()).unwrap()));
    assert_eq!(svg.matches("<polygon").count(), 2);
    assert_eq!(svg.matches("<circle").count(), 2);
    assert!(svg.contains("stroke-dasharray"));

    let empty = cmd_plot(&PlotInput::from_report(&horizon("minkowski")));
    assert_eq!(empty.matches("<polygon").count(), 0);
    assert!(empty.contains("<rect"));

    assert!(matches!(parse_ray_csv("s,x0,x1\n1,2\n"), Err(Error::Parse { .. })));
}

#[test]
fn bundled_scenario_files_match_the_presets() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios");
    for name in PRESETS {
        let text = std::fs::read_to_string(format!("{dir}/{name}.json")).unwrap();
        let parsed = analog_horizon::scenario::parse_scenario(&text).unwrap();
        assert_eq!(parsed.to_json(), preset(name).unwrap().to_json(), "{name}");
    }
}
