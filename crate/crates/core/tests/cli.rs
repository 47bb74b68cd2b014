use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn yaoyao(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_yaoyao")).args(args).output().unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn write_skew(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("skew.csv");
    fs::write(&path, "x1,x2\n0,0\n1,2\n2,1\n3,3\n").unwrap();
    path
}

#[test]
fn center_prints_ambient_center() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write_skew(dir.path());
    let out = yaoyao(&["center", p(&pts)]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().trim(), "1.5 1.5");
}

#[test]
fn center_honors_coordinate_system() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write_skew(dir.path());
    let sys = dir.path().join("system.json");
    // coordinates (x2, x1): the center is still an apex of an equipartition
    fs::write(&sys, r#"{"matrix": [[0, 1], [1, 0]], "offset": [0, 0]}"#).unwrap();
    let part = dir.path().join("part.json");
    let out = yaoyao(&["center", p(&pts), "--system", p(&sys), "-o", p(&part)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let verify = yaoyao(&["verify", p(&part), p(&pts), "--checks", "equipartition,avoidance"]);
    assert_eq!(verify.status.code(), Some(0), "{}", String::from_utf8_lossy(&verify.stdout));
}

#[test]
fn full_pipeline_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    fs::write(&spec, r#"{"type": "gaussian", "mean": [0, 0, 0]}"#).unwrap();
    let pts = dir.path().join("pts.csv");
    let out = yaoyao(&["sample", "--spec", p(&spec), "-n", "256", "--seed", "7", "-o", p(&pts)]);
    assert_eq!(out.status.code(), Some(0));

    let part = dir.path().join("part.json");
    let out = yaoyao(&["center", p(&pts), "-o", p(&part), "--threads", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(String::from_utf8(out.stdout).unwrap().split_whitespace().count(), 3);

    let report = dir.path().join("report.json");
    let out = yaoyao(&[
        "verify",
        p(&part),
        p(&pts),
        "--checks",
        "equipartition,prefix,avoidance,depth,representations",
        "--count",
        "200",
        "-o",
        p(&report),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(doc["pass"], true);
    assert_eq!(doc["checks"].as_array().unwrap().len(), 5);

    // the partition of one cloud does not equipartition another
    let other = dir.path().join("other.csv");
    yaoyao(&["sample", "--spec", p(&spec), "-n", "256", "--seed", "8", "-o", p(&other)]);
    let out = yaoyao(&["verify", p(&part), p(&other), "--checks", "equipartition"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn plot_writes_svg() {
    let dir = tempfile::tempdir().unwrap();
    let pts = write_skew(dir.path());
    let part = dir.path().join("part.json");
    assert_eq!(yaoyao(&["center", p(&pts), "-o", p(&part)]).status.code(), Some(0));
    let svg = dir.path().join("plot.svg");
    assert_eq!(yaoyao(&["plot", p(&part), p(&pts), "-o", p(&svg)]).status.code(), Some(0));
    let text = fs::read_to_string(svg).unwrap();
    assert!(text.starts_with("<svg"));
    assert_eq!(text.matches("<polygon").count(), 4);
}

#[test]
fn bad_input_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "x1,x2\n").unwrap();
    let out = yaoyao(&["center", p(&empty)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert_eq!(yaoyao(&["center", "/nonexistent.csv"]).status.code(), Some(2));
    assert_eq!(yaoyao(&["frobnicate"]).status.code(), Some(2));

    let pts = write_skew(dir.path());
    let part = dir.path().join("bad.json");
    fs::write(&part, r#"{"schema": "something-else"}"#).unwrap();
    assert_eq!(yaoyao(&["verify", p(&part), p(&pts)]).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("flat.csv");
    // two heavy points on the median line can never be balanced by an axis
    fs::write(&pts, "x1,x2,w\n0,0,10\n0,1,10\n-1,5,1\n1,-5,1\n").unwrap();
    let out = yaoyao(&["center", p(&pts)]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stdout));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("trace"), "{err}");
}
