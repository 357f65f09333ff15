use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use metreg::cli::ProblemFile;
use metreg::instances;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn metreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metreg")).args(args).output().unwrap()
}

fn export(dir: &Path, name: &str) -> PathBuf {
    let path = dir.join(format!("{name}.json"));
    let out = metreg(&["instances", "--export", name, "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn exports_round_trip_through_the_parser() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for inst in instances::all() {
        let text = fs::read_to_string(export(dir.path(), &inst.name)).unwrap();
        let parsed = ProblemFile::parse(&text).unwrap();
        assert_eq!(parsed.x0, inst.x0);
        assert_eq!(parsed.epsilon, inst.epsilon);
        let map = parsed.map().unwrap();
        for _ in 0..100 {
            let x: Vec<f64> = (0..map.dim_in()).map(|_| rng.random_range(-3.0..3.0)).collect();
            let y: Vec<f64> = (0..map.dim_out()).map(|_| rng.random_range(-3.0..3.0)).collect();
            let a = map.image_distance(&x, &y).unwrap();
            let b = inst.map.image_distance(&x, &y).unwrap();
            assert!((a - b).abs() <= 1e-12, "{}: {a} vs {b}", inst.name);
        }
    }
}

#[test]
fn identity_modulus_meets_its_target() {
    let dir = tempfile::tempdir().unwrap();
    let file = export(dir.path(), "identity2");
    let out = metreg(&["modulus", file.to_str().unwrap(), "--tau", "1.1", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&out);
    assert_eq!(report["all_hold"], true);
    let sup = report["modulus"]["result"]["sup_ratio"].as_f64().unwrap();
    assert!((sup - 1.0).abs() <= 0.1, "{sup}");
}

#[test]
fn robinson_fails_against_the_halfplane() {
    let dir = tempfile::tempdir().unwrap();
    let file = export(dir.path(), "halfplane_directional");
    let f = file.to_str().unwrap();
    let up = metreg(&["robinson", f, "--ybar", "0,1"]);
    assert_eq!(up.status.code(), Some(0));
    let down = metreg(&["robinson", f, "--ybar", "0,-1"]);
    assert_eq!(down.status.code(), Some(1));
    assert_eq!(json(&down)["robinson"]["holds"], false);
}

#[test]
fn csv_has_one_row_per_pair() {
    let dir = tempfile::tempdir().unwrap();
    let file = export(dir.path(), "diag_2_05");
    let csv_path = dir.path().join("pairs.csv");
    let report = dir.path().join("report.json");
    let out = metreg(&[
        "modulus",
        file.to_str().unwrap(),
        "--budget",
        "300",
        "--csv",
        csv_path.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("modulus: holds"));
    let text = fs::read_to_string(csv_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "x0,x1,y0,y1,image_dist,preimage_dist,ratio,admissible"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 300);
    assert!(rows.iter().all(|r| r.split(',').count() == 8));
    assert!(rows.iter().any(|r| r.ends_with(",true")));
    let r: Value = serde_json::from_str(&fs::read_to_string(report).unwrap()).unwrap();
    assert!(r["wall_time_s"].is_number());
}

#[test]
fn malformed_input_exits_2_without_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let report = dir.path().join("report.json");
    let mut text = fs::read_to_string(export(dir.path(), "identity2")).unwrap();
    text = text.replace("\"delta\": 0.5", "\"delta\": -1.0");
    fs::write(&bad, text).unwrap();
    let out = metreg(&["analyze", bad.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("delta"));
    assert!(!report.exists());

    fs::write(&bad, "{ \"schema_version\": 1, ").unwrap();
    assert_eq!(metreg(&["analyze", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(metreg(&["analyze", "/nonexistent.json"]).status.code(), Some(2));
}

#[test]
fn oracle_dimension_guard_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("four.json");
    let eye: Vec<Vec<f64>> = (0..4).map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let zero = vec![0.0; 4];
    let problem = serde_json::json!({
        "schema_version": 1,
        "f": { "kind": "affine", "payload": { "a": eye, "b": zero, "dim_in": 4 } },
        "K": { "kind": "singleton", "payload": { "point": zero } },
        "x0": zero,
        "y0": zero,
        "ybar": [1.0, 0.0, 0.0, 0.0],
        "delta": 0.5,
        "epsilon": 0.5,
        "analyses": [{ "op": "oracle_check", "points_per_axis": 3 }]
    });
    fs::write(&file, problem.to_string()).unwrap();
    let out = metreg(&["analyze", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
}

#[test]
fn seed_flag_overrides_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = export(dir.path(), "param_scale");
    let f = file.to_str().unwrap();
    let a = json(&metreg(&["analyze", f, "--seed", "5", "--no-timestamp"]));
    assert_eq!(a["seed"], 5);
    assert!(a.get("timestamp").is_none());
    let b = json(&metreg(&["analyze", f, "--no-timestamp"]));
    assert_eq!(b["seed"], 42);
}
