use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dynkin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dynkin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("game.cfg");
    fs::write(
        &p,
        format!("{body}\n[output]\ndir = {}\n", dir.join("out").display()),
    )
    .unwrap();
    p.to_string_lossy().into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn solve_writes_one_row_per_node() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[payoff]\ncatalog = game_call\n[grid]\nn_points = 101",
    );
    let o = dynkin(&["solve", &cfg]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("out/solution.csv")).unwrap();
    assert_eq!(csv.lines().count(), 102);
    assert_eq!(csv.lines().next(), Some("x,g1,g2,V,W_of_Fx,in_E1,in_E2"));
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["mc"]["enabled"], Value::Bool(false));
    assert_eq!(
        report["provenance"]["config_hash"].as_str().unwrap().len(),
        64
    );
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[payoff]\ncatalog = game_call\n[grid]\nn_points = 201\n[mc]\nx0 = 50\nn_paths = 400\nhalving = false\nladder_times = 0, 1",
    );
    let read = |name: &str| fs::read(dir.path().join("out").join(name)).unwrap();
    assert_eq!(code(&dynkin(&["simulate", &cfg])), 0);
    let (csv, json) = (read("solution.csv"), read("report.json"));
    assert_eq!(code(&dynkin(&["simulate", &cfg])), 0);
    assert_eq!(csv, read("solution.csv"));
    assert_eq!(json, read("report.json"));
}

#[test]
fn flags_override_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("elsewhere");
    let o = dynkin(&[
        "solve",
        "--catalog",
        "scaled_call_case1",
        "--grid-points",
        "151",
        "--format",
        "csv",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("solution.csv")).unwrap();
    assert!(csv.lines().count() >= 152);
    assert!(!out.join("report.json").exists());
}

#[test]
fn crossing_payoffs_exit_1_naming_the_interval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[model]\nfamily = gbm\nbeta = 0.05\nsigma = 0.3\n[payoff]\ng1 = call(100)\ng2 = constant(10)\n[grid]\nx_min = 10\nx_max = 1000",
    );
    let o = dynkin(&["solve", &cfg]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("g1 > g2 on knot interval [100, inf)"), "{err}");
}

#[test]
fn malformed_config_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[grid]\nn_points = lots");
    let o = dynkin(&["solve", &cfg]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn invalid_mc_parameters_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[payoff]\ncatalog = game_call\n[grid]\nn_points = 101",
    );
    let o = dynkin(&["simulate", &cfg]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("x0"));

    let o = dynkin(&["simulate", "--catalog", "game_call", "--paths", "10"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_paths"));
}

#[test]
fn check_reports_violations_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // the window ends just above the strike and is not padded
    let cfg = write_config(
        dir.path(),
        "[payoff]\ncatalog = game_call\n[grid]\nn_points = 201\nx_min = 6.25\nx_max = 101\npad_factor = 1",
    );
    let o = dynkin(&["check", &cfg]);
    assert_eq!(code(&o), 3);
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(doc["count"].as_u64().unwrap() >= 1);
    assert_eq!(doc["violations"][0]["suite"], "measure_sign");

    let o = dynkin(&["check", "--catalog", "game_call"]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
}

#[test]
fn catalog_list_names_every_entry() {
    let o = dynkin(&["catalog", "list"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8_lossy(&o.stdout);
    for name in ["game_call", "scaled_call_case1", "scaled_call_case2"] {
        assert!(text.contains(name), "{text}");
    }
}
