use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

use cc_index::io::{records_from_csv, records_to_json, CensusRecord};

fn write_spec(name: &str, spec: Value) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cc-index-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cc-index"))
        .args(args)
        .env("CC_INDEX_THREADS", "2")
        .output()
        .unwrap()
}

fn run_spec(cmd: &str, spec: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, spec.to_str().unwrap()];
    args.extend_from_slice(extra);
    run(&args)
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("bad json ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn equal_masses(n: usize, d: usize) -> Value {
    json!({ "n": n, "d": d, "alpha": 1.0, "masses": vec![1.0 / n as f64; n] })
}

#[test]
fn find_collinear_three_body() {
    let spec = write_spec("find31.json", equal_masses(3, 1));
    let out = run_spec("find", &spec, &["--starts", "500"]);
    assert_eq!(out.status.code(), Some(0));
    let records = stdout_json(&out);
    let records = records.as_array().unwrap();
    assert_eq!(records.len(), 3);
    assert!(records.iter().all(|r| r["fixed_point_index"] == 1));
}

#[test]
fn find_planar_three_body_under_so2() {
    let spec = write_spec("find32.json", equal_masses(3, 2));
    let out = run_spec("find", &spec, &["--group", "SO", "--starts", "500"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out).as_array().unwrap().len(), 5);

    let out = run_spec("find", &spec, &["--group", "O", "--starts", "500"]);
    assert_eq!(stdout_json(&out).as_array().unwrap().len(), 4);
}

#[test]
fn find_rejects_malformed_masses() {
    let spec = write_spec("bad_masses.json", json!({ "n": 3, "d": 2, "alpha": 1.0, "masses": [0.5, 0.5] }));
    let out = run_spec("find", &spec, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("masses"));
}

#[test]
fn validation_names_the_field() {
    for (name, spec, field) in [
        ("bad_alpha.json", json!({ "n": 3, "d": 2, "alpha": -1.0, "masses": [0.4, 0.3, 0.3] }), "alpha"),
        ("bad_d.json", json!({ "n": 3, "d": 0, "alpha": 1.0, "masses": [0.4, 0.3, 0.3] }), "d"),
        ("bad_n.json", json!({ "n": 1, "d": 2, "alpha": 1.0, "masses": [1.0] }), "n"),
        ("neg_mass.json", json!({ "n": 2, "d": 2, "alpha": 1.0, "masses": [1.5, -0.5] }), "masses"),
        ("extra.json", json!({ "n": 2, "d": 2, "alpha": 1.0, "masses": [0.5, 0.5], "beta": 1 }), "beta"),
    ] {
        let out = run_spec("find", &write_spec(name, spec), &[]);
        assert_eq!(out.status.code(), Some(2), "{name}");
        assert!(String::from_utf8_lossy(&out.stderr).contains(field), "{name}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let out = run(&["find", "/nonexistent/spec.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_and_json_agree() {
    let spec = write_spec("fmt.json", json!({ "n": 3, "d": 2, "alpha": 1.0, "masses": [0.5, 0.3, 0.2] }));
    let json_out = run_spec("find", &spec, &["--starts", "300", "--seed", "9"]);
    let csv_out = run_spec("find", &spec, &["--starts", "300", "--seed", "9", "--format", "csv"]);
    assert_eq!(csv_out.status.code(), Some(0));
    let from_json: Vec<CensusRecord> = serde_json::from_slice(&json_out.stdout).unwrap();
    let from_csv = records_from_csv(&String::from_utf8(csv_out.stdout).unwrap()).unwrap();
    assert_eq!(from_json.len(), 5);
    assert_eq!(from_json, from_csv);
}

#[test]
fn json_round_trip_is_byte_identical() {
    let spec = write_spec("rt.json", equal_masses(4, 2));
    let out = run_spec("find", &spec, &["--starts", "200"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let records: Vec<CensusRecord> = serde_json::from_str(&text).unwrap();
    assert_eq!(records_to_json(&records), text.trim_end());
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let spec = write_spec("threads.json", equal_masses(4, 1));
    let mut outputs = Vec::new();
    for threads in ["1", "4"] {
        let out = Command::new(env!("CARGO_BIN_EXE_cc-index"))
            .args(["find", spec.to_str().unwrap(), "--starts", "300"])
            .env("CC_INDEX_THREADS", threads)
            .output()
            .unwrap();
        outputs.push(out.stdout);
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn analyze_two_body() {
    let mut spec = equal_masses(2, 2);
    spec["coordinates"] = json!([[-1.0, 0.0], [1.0, 0.0]]);
    let out = run_spec("analyze", &write_spec("two.json", spec), &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert!(r["residual_norm"].as_f64().unwrap() <= 1e-15);
    assert_eq!(r["morse_index"], 0);
}

#[test]
fn analyze_equilateral_triangle() {
    let h = 3f64.sqrt() / 2.0;
    let mut spec = equal_masses(3, 2);
    spec["coordinates"] = json!([[1.0, 0.0], [-0.5, h], [-0.5, -h]]);
    let out = run_spec("analyze", &write_spec("tri.json", spec), &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["theorem_verified"], true);
    assert_eq!(r["critical"], true);
}

#[test]
fn analyze_non_central_point() {
    let mut spec = equal_masses(3, 2);
    spec["coordinates"] = json!([[0.0, 0.0], [1.0, 0.1], [0.3, 0.9]]);
    let out = run_spec("analyze", &write_spec("noncc.json", spec), &[]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["critical"], false);
    assert_eq!(r["theorem_verified"], false);
}

#[test]
fn analyze_collision_exits_3() {
    let mut spec = equal_masses(3, 2);
    spec["coordinates"] = json!([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]]);
    let out = run_spec("analyze", &write_spec("collide.json", spec), &[]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn analyze_requires_coordinates() {
    let out = run_spec("analyze", &write_spec("nocoords.json", equal_masses(3, 2)), &[]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn topology_tables() {
    let r = stdout_json(&run(&["topology", "--n", "3", "--d", "2"]));
    assert_eq!(r["poincare_planar_quotient"], json!([1, 2]));
    assert_eq!(r["dim_maximal_orbit_manifold"], 2);

    let r = stdout_json(&run(&["topology", "--n", "3", "--d", "3", "--max-degree", "6"]));
    assert_eq!(r["pacella_series"], json!([1, 0, 3, 0, 3, 0, 3]));

    let out = run(&["topology", "--n", "2", "--d", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_json(&out);
    assert_eq!(r["poincare_configuration"], json!([1, 1]));
    assert_eq!(r["poincare_planar_quotient"], Value::Null);

    assert_eq!(run(&["topology", "--n", "0", "--d", "2"]).status.code(), Some(2));
    assert_eq!(run(&["topology", "--n", "3", "--d", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["topology", "--n", "3", "--d", "2", "--format", "csv"]).status.code(), Some(0));
}

#[test]
fn verify_closed_cases() {
    for (d, l) in [(1, 3), (2, -1)] {
        let out = run_spec("verify", &write_spec(&format!("verify3{d}.json"), equal_masses(3, d)), &[]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        let r = stdout_json(&out);
        assert_eq!(r["lefschetz"]["lefschetz_number"], l);
        assert_eq!(r["lefschetz"]["degree"], -2);
        assert_eq!(r["passed"], true);
    }
}

#[test]
fn verify_unequal_masses() {
    let spec = write_spec("verify_unequal.json", json!({ "n": 3, "d": 2, "alpha": 1.0, "masses": [0.5, 0.3, 0.2] }));
    let out = run_spec("verify", &spec, &[]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout_json(&out)["classes"].as_array().unwrap().len(), 5);
}

#[test]
fn verify_reports_mismatch_when_classes_are_missed() {
    // without Newton iterations nothing converges, so the Lefschetz sum is 0
    let out = run_spec("verify", &write_spec("verify_few.json", equal_masses(3, 2)), &["--max-iter", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["passed"], false);
}
