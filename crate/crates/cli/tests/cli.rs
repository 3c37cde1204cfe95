use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn wpccn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wpccn")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

/// CSV body with the wall-time column blanked.
fn without_times(csv: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let col = header.iter().position(|&h| h == "wall_time_s").unwrap();
    lines
        .map(|l| l.split(',').enumerate().filter(|&(i, _)| i != col).map(|(_, f)| f).collect::<Vec<_>>().join(","))
        .collect()
}

const SWEEP: &str = r#"{ "kind": "sweep_n", "trials": 4, "grid": [2, 3],
    "scenario": { "k": 1 }, "algorithms": ["rstma", "or_powmu", "htc"] }"#;

#[test]
fn run_writes_records_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.json", SWEEP);
    let out = dir.path().join("records.csv");
    let res = wpccn(&["run", &cfg, "--out", out.to_str().unwrap(), "--seed", "3"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let body = fs::read_to_string(&out).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next().unwrap(), "sweep_param,sweep_value,trial,algorithm,total_s,wall_time_s,feasible");
    assert_eq!(lines.count(), 2 * 4 * 3);
    let summary = fs::read_to_string(dir.path().join("records.csv.summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 3);
}

#[test]
fn run_is_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "sweep.json", SWEEP);
    let go = |threads: &str| {
        let res = wpccn(&["run", &cfg, "--seed", "9", "--trials", "3", "--threads", threads]);
        assert!(res.status.success());
        without_times(&String::from_utf8(res.stdout).unwrap())
    };
    assert_eq!(go("1"), go("1"));
    let other = wpccn(&["run", &cfg, "--seed", "10", "--trials", "3"]);
    assert_ne!(go("1"), without_times(&String::from_utf8(other.stdout).unwrap()));
}

#[test]
fn three_node_reports_crossovers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "line.json", r#"{ "steps": 71, "pmax_w": [1000.0] }"#);
    let res = wpccn(&["three-node", &cfg]);
    assert!(res.status.success());
    let csv = String::from_utf8(res.stdout).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "pmax_w,relay_x,direct_s,relayed_s,relay_benefit");
    assert_eq!(csv.lines().count(), 72);
    let err = String::from_utf8(res.stderr).unwrap();
    assert!(err.contains("crossovers at x = [0.53"), "{err}");
}

#[test]
fn solve_accepts_scenarios_and_instances() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "scenario.json", r#"{ "n": 3, "k": 2, "seed": 5 }"#);
    let res = wpccn(&["solve", &scenario, "--algo", "bba"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let schedule: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    let total = schedule["total_s"].as_f64().unwrap();
    assert!(total > 0.0);
    assert_eq!(schedule["assignment"].as_array().unwrap().len(), 3);

    let instance = r#"{
        "params": { "bandwidth_hz": 1e6, "noise_psd_w_per_hz": 1e-12, "ap_power_w": 4.0,
                    "max_ul_power_w": 0.01, "zeta_src": [0.5], "zeta_rel": [], "demands_bits": [50.0] },
        "channels": { "h_ap_src": [1e-3], "h_ap_rel": [], "g_src_ap": [1e-3], "g_src_rel": [[]], "g_rel_ap": [] }
    }"#;
    let inst = write(dir.path(), "instance.json", instance);
    let res = wpccn(&["solve", &inst, "--algo", "powmu"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let schedule: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(schedule["assignment"], serde_json::json!([0]));
}

#[test]
fn bad_inputs_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write(dir.path(), "scenario.json", r#"{ "n": 2, "k": 1 }"#);
    assert!(!wpccn(&["solve", &scenario, "--algo", "simplex"]).status.success());
    let bad = write(dir.path(), "bad.json", r#"{ "kind": "sweep_n", "grid": [], "trials": 2 }"#);
    let res = wpccn(&["run", &bad]);
    assert!(!res.status.success());
    assert!(String::from_utf8_lossy(&res.stderr).contains("grid"));
    assert!(!wpccn(&["run", "/nonexistent/config.json"]).status.success());
}
