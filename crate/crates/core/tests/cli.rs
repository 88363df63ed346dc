use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_analog-horizon")).args(args).env("ANALOG_HORIZON_THREADS", "2").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn horizon_json_is_byte_identical_across_runs() {
    let a = run(&["--preset", "vortex-black", "horizon"]);
    let b = run(&["--preset", "vortex-black", "horizon"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["holes"][0]["classification"], "Black");
    assert!(v.get("timings").is_none());
    let timed = run(&["--preset", "vortex-black", "--timings", "horizon"]);
    let v: serde_json::Value = serde_json::from_slice(&timed.stdout).unwrap();
    assert!(v["timings"]["horizon_ms"].is_number());
}

#[test]
fn horizon_csv_summary() {
    let o = run(&["--preset", "swirl-three", "--format", "csv", "horizon"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("index,method,classification,mean_radius,field,flow_check\n"));
}

#[test]
fn scenario_files_and_output_paths() {
    let dir = TempDir::new().unwrap();
    let scenario = dir.path().join("s.json");
    std::fs::write(&scenario, r#"{"name": "v", "metric": {"type": "vortex", "A": 0.6, "B": 0.8}}"#).unwrap();
    let out = dir.path().join("report.json");
    let o = run(&["--scenario", scenario.to_str().unwrap(), "--out", out.to_str().unwrap(), "horizon"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let svg = run(&["plot", "--report", out.to_str().unwrap()]);
    assert_eq!(svg.status.code(), Some(0));
    assert_eq!(stdout(&svg).matches("<polygon").count(), 2);
}

#[test]
fn trace_and_plot_rays() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("ray.csv");
    let o = run(&["--preset", "vortex-white", "--out", csv.to_str().unwrap(), "trace", "--at", "0.8,0", "--xi", "1,-0.2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("s,x0,x1,x2,xi0,xi1,xi2,H\n"));
    let svg = run(&["plot", "--rays", csv.to_str().unwrap()]);
    assert_eq!(svg.status.code(), Some(0));
    assert!(stdout(&svg).contains("<polyline"));

    let json = run(&["--preset", "vortex-white", "--format", "json", "trace", "--kernel", "0.5"]);
    assert_eq!(json.status.code(), Some(0), "{}", String::from_utf8_lossy(&json.stderr));
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v["branch"], "zero_xi0");
}

#[test]
fn classify_a_supplied_curve() {
    let dir = TempDir::new().unwrap();
    let curve = dir.path().join("curve.csv");
    let mut text = String::from("x1,x2\n");
    for k in 0..128 {
        let th = 2.0 * std::f64::consts::PI * k as f64 / 128.0;
        text.push_str(&format!("{},{}\n", th.cos(), th.sin()));
    }
    std::fs::write(&curve, &text).unwrap();
    let o = run(&["--preset", "radial-acoustic-black", "classify", "--curve", curve.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["classification"], "Black");
    assert_eq!(v["flow_check"], "Incoming");

    // The unit circle is not characteristic for the swirling vortex.
    let o = run(&["--preset", "vortex-white", "classify", "--curve", curve.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["horizon"]).status.code(), Some(1));
    assert_eq!(run(&["--preset", "nope", "horizon"]).status.code(), Some(1));
    assert_eq!(run(&["--scenario", "/nonexistent.json", "check"]).status.code(), Some(1));
    assert_eq!(run(&["--preset", "vortex-white", "trace", "--at", "5,0", "--xi", "1,0"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));

    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"name\": \"v\",\n \"metric\": {\"type\": \"vortex\", \"A\": 0, \"B\": 0}}").unwrap();
    let o = run(&["--scenario", bad.to_str().unwrap(), "check"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("ergoregion"));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"name\": \"v\",\n \"metric\": }").unwrap();
    let o = run(&["--scenario", broken.to_str().unwrap(), "check"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}
