//! End-to-end tests of the binary: exit codes, artifact layout,
//! determinism, and the cross-orbit comparison flow.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))
}

/// A per-test scratch directory, recreated empty on each run.
fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qrt-cli-test-{name}"));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).expect("create scratch dir");
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qrt"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// Parse one complex column pair from a CSV data row.
fn field(row: &str, k: usize) -> f64 {
    row.split(',').nth(k).unwrap().parse().unwrap()
}

#[test]
fn solve_writes_passing_artifacts_and_is_deterministic() {
    let out1 = scratch("solve-a");
    let out2 = scratch("solve-b");
    let problem = fixture("sum-pencil.json");
    let first = run(&["solve", &problem, "--out", out1.to_str().unwrap()]);
    assert!(
        first.status.success(),
        "stderr: {}",
        stderr_of(&first)
    );
    let text = stdout_of(&first);
    assert!(text.contains("verdict: PASS"), "summary: {text}");

    let orbit = fs::read_to_string(out1.join("orbit.csv")).expect("orbit table");
    let rows: Vec<&str> = orbit.lines().skip(1).collect();
    // Ten backward rows, then n = 0..=50.
    assert_eq!(rows.len(), 61);
    assert!(rows[0].starts_with("-10,"));
    assert!(rows[60].starts_with("50,"));
    let max_chordal = rows
        .iter()
        .map(|r| field(r, 9))
        .fold(0.0f64, f64::max);
    assert!(max_chordal < 1e-6, "max chordal {max_chordal}");

    // Byte-identical on a rerun.
    let second = run(&["solve", &problem, "--out", out2.to_str().unwrap()]);
    assert!(second.status.success());
    for name in ["orbit.csv", "params.txt"] {
        let a = fs::read(out1.join(name)).unwrap();
        let b = fs::read(out2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn singular_curve_exits_two_and_cites_the_invariant() {
    let out = scratch("singular");
    let result = run(&[
        "solve",
        &fixture("singular-curve.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(result.status.code(), Some(2));
    let err = stderr_of(&result);
    assert!(err.contains("not smooth"), "stderr: {err}");
    assert!(err.contains("|Delta|"), "stderr: {err}");
    // Rejected before any artifact was produced.
    assert!(!out.join("orbit.csv").exists());
}

#[test]
fn invalid_problem_file_exits_one_with_location() {
    let out = scratch("invalid");
    let bad = out.join("broken.json");
    fs::write(&bad, "{ \"a\": [[[0,0]]] }").unwrap();
    let result = run(&["solve", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(1));
    let err = stderr_of(&result);
    assert!(err.contains("broken.json:1:"), "stderr: {err}");
}

#[test]
fn paths_dump_has_expected_files_and_clearance() {
    let out = scratch("paths");
    let result = run(&[
        "paths",
        &fixture("sum-pencil.json"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "stderr: {}", stderr_of(&result));

    let dir = out.join("paths");
    let mut names: Vec<String> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        vec![
            "abel-0-0.csv",
            "abel-0-y2.csv",
            "abel-inf-inf.csv",
            "abel-inf-y1.csv",
            "abel-x1-inf.csv",
            "abel-x2-0.csv",
            "branch-points.csv",
            "period-loop-1.csv",
            "period-loop-2.csv",
        ]
    );

    let branch = read_points(&dir.join("branch-points.csv"));
    assert_eq!(branch.len(), 4);

    // Every waypoint keeps the documented clearance from every branch
    // point: paths are routed at half the branch margin and walked with a
    // 0.45-margin check, so 0.45 is the binding bound.
    let diameter = pairs(&branch)
        .map(|(a, b)| dist(a, b))
        .fold(0.0f64, f64::max);
    let min_pair = pairs(&branch)
        .map(|(a, b)| dist(a, b))
        .fold(f64::INFINITY, f64::min);
    let margin = (0.05 * diameter).min(0.4 * min_pair);
    let mut min_clearance = f64::INFINITY;
    for name in &names {
        if name == "branch-points.csv" {
            continue;
        }
        for w in read_points(&dir.join(name)) {
            for q in &branch {
                min_clearance = min_clearance.min(dist(w, *q));
            }
        }
    }
    assert!(
        min_clearance >= 0.45 * margin,
        "clearance {min_clearance} below 0.45 * margin ({margin})"
    );
}

fn read_points(path: &Path) -> Vec<(f64, f64)> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
        .lines()
        .skip(1)
        .map(|row| (field(row, 1), field(row, 2)))
        .collect()
}

fn pairs(points: &[(f64, f64)]) -> impl Iterator<Item = ((f64, f64), (f64, f64))> + '_ {
    points
        .iter()
        .enumerate()
        .flat_map(|(i, a)| points[i + 1..].iter().map(move |b| (*a, *b)))
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

#[test]
fn two_pencils_compare_within_tolerance() {
    let out_sum = scratch("compare-sum");
    let out_prod = scratch("compare-prod");
    let first = run(&[
        "solve",
        &fixture("sum-pencil.json"),
        "--out",
        out_sum.to_str().unwrap(),
    ]);
    assert!(first.status.success());
    let orbit = out_sum.join("orbit.csv");
    let second = run(&[
        "solve",
        &fixture("product-pencil.json"),
        "--out",
        out_prod.to_str().unwrap(),
        "--compare",
        orbit.to_str().unwrap(),
    ]);
    assert!(second.status.success(), "stderr: {}", stderr_of(&second));
    let text = stdout_of(&second);
    let line = text
        .lines()
        .find(|l| l.starts_with("cross-orbit distance"))
        .expect("comparison line in the summary");
    let value: f64 = line
        .split_whitespace()
        .nth(4)
        .unwrap()
        .parse()
        .expect("numeric distance");
    assert!(value < 1e-6, "cross-orbit distance {value}");
}

#[test]
fn json_report_round_trips_and_steps_flag_shortens_orbit() {
    let out = scratch("json");
    let result = run(&[
        "solve",
        &fixture("sum-pencil.json"),
        "--out",
        out.to_str().unwrap(),
        "--report",
        "json",
        "--steps",
        "5",
    ]);
    assert!(result.status.success(), "stderr: {}", stderr_of(&result));
    let text = fs::read_to_string(out.join("params.json")).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).expect("valid JSON");
    assert_eq!(value["verification"]["passed"], serde_json::json!(true));
    assert_eq!(value["params"]["config"]["steps"], serde_json::json!(5));
    assert!(value["params"]["embedding"]["c1"].is_array());
    // steps=5: rows n=0..=5 forward plus 5 backward.
    let orbit = fs::read_to_string(out.join("orbit.csv")).unwrap();
    assert_eq!(orbit.lines().count(), 12);
}
