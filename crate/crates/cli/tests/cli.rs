use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_labyrinth")).args(args).env("LABYRINTH_THREADS", "2").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn locate_origin_without_scene() {
    let o = run(&["query", "locate", "--point", "0", "0", "0"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("CoreBall"));
}

#[test]
fn counts_report_lists_all_levels() {
    let o = run(&["verify", "--check", "counts", "--levels", "8"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "pass");
    assert_eq!(v["measured"]["levels_checked"].as_f64(), Some(8.0));
}

#[test]
fn size_report_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let rep = dir.path().join("size.json");
    let o = run(&["verify", "--check", "size", "--levels", "7", "--delta", "0.125", "--report", rep.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&rep).unwrap()).unwrap();
    assert!(v["measured"]["max_ratio"].as_f64().unwrap() < 1.0);
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(code(&run(&["verify", "--check", "nope"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    let o = run(&["verify", "--check", "size", "--levels", "4", "--delta", "0.5"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(code(&run(&["query", "locate", "--point", "2", "0", "0"])), 2);
}

#[test]
fn failing_check_exits_one() {
    let args = ["verify", "--check", "nesting", "--levels", "3", "--samples", "200"];
    assert_eq!(code(&run(&args)), 0);
    let o = run(&[&args[..], &["--ntilde-factor", "0.02"]].concat());
    assert_eq!(code(&o), 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["status"], "fail");
    assert!(!v["witnesses"].as_array().unwrap().is_empty());
    assert_eq!(code(&run(&["verify", "--check", "traversal", "--levels", "4"])), 2);
}

#[test]
fn build_export_and_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.json");
    let s = scene.to_str().unwrap();
    assert_eq!(code(&run(&["build", "--levels", "3", "--resolution", "16", "--out", s])), 0);
    let first = std::fs::read(&scene).unwrap();
    assert_eq!(code(&run(&["build", "--levels", "3", "--resolution", "16", "--out", s])), 0);
    assert_eq!(std::fs::read(&scene).unwrap(), first);

    let obj = dir.path().join("delta.obj");
    let o = run(&["export", "--scene", s, "--kinds", "delta", "--format", "obj", "--out", obj.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&obj).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("g ")).count(), 38 + 146);

    let gamma = dir.path().join("gamma.ply");
    let o = run(&["export", "--scene", s, "--kinds", "gamma", "--level", "1", "--format", "ply", "--out", gamma.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(std::fs::read_to_string(&gamma).unwrap().starts_with("ply\n"));

    let bad = dir.path().join("x.stl");
    let o = run(&["export", "--scene", s, "--format", "stl", "--out", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(!Path::new(&bad).exists());

    let o = run(&["query", "locate", "--scene", s, "--point", "0.1", "0.3", "0.75"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("Cell"));
    let o = run(&["query", "distance", "--scene", s, "--point", "0.1", "0.3", "0.6"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("\"distance\""));
}

#[test]
fn truncated_scene_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene.json");
    let s = scene.to_str().unwrap();
    assert_eq!(code(&run(&["build", "--levels", "2", "--resolution", "16", "--out", s])), 0);
    let text = std::fs::read_to_string(&scene).unwrap();
    std::fs::write(&scene, &text[..text.len() / 3]).unwrap();
    let o = run(&["query", "locate", "--scene", s, "--point", "0.1", "0.1", "0.6"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("malformed"));
}

#[test]
fn seeded_runs_are_byte_identical() {
    let args = ["verify", "--check", "traversal", "--levels", "5", "--trials", "20", "--seed", "9"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn barrier_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("barrier.obj");
    let o = run(&["barrier", "fit", "--delta", "0.02", "--epsilon", "0.2", "--H0", "10", "--out", mesh.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["containment_violations"], 0);
    assert!(mesh.exists());
    assert_eq!(code(&run(&["barrier", "fit", "--delta", "0.05", "--epsilon", "0.2"])), 2);

    let table = dir.path().join("p.txt");
    let o = run(&["barrier", "profile", "--H", "1", "--c", "-0.1", "--s-max", "1", "--out", table.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(std::fs::read_to_string(&table).unwrap().starts_with("# s r z phi h_numeric"));

    let far = dir.path().join("far.txt");
    std::fs::write(&far, "0 0 0.1\n0 0.01 0.1\n").unwrap();
    let o = run(&["barrier", "sweep", "--curve", far.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("\"theta0\": null"));

    let o = run(&["barrier", "remark", "--levels", "3"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("max_abs_mean_curvature"));
}
