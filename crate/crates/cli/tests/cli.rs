use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    run_env(args, &[])
}

fn run_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ghostcheck"));
    cmd.args(args).env_remove("GHOSTCHECK_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn check_json(name: &str) -> Value {
    let path = fixture(name);
    let out = run(&["check", "--json", path.to_str().unwrap()]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    json_of(&out)
}

#[test]
fn fan_of_lines_fires() {
    let v = check_json("fan_3_4.json");
    let c = &v["components"][0];
    assert_eq!(c["theorem"]["rank"], 12);
    assert_eq!(c["points"], 12);
    assert_eq!(c["theorem"]["verdict"], "NotEventuallySmoothable");
    assert_eq!(v["verdict"], "NotEventuallySmoothable");
}

#[test]
fn zero_derivative_is_inconclusive_with_kernel_witness() {
    let v = check_json("zero_deriv.json");
    let t = &v["components"][0]["theorem"];
    assert_eq!(t["verdict"], "Inconclusive");
    assert_eq!(t["rank"], 1);
    assert_eq!(t["kernel_witness"], serde_json::json!(["1", "0"]));
    assert_eq!(
        v["components"][0]["corollary"]["witness_D"],
        serde_json::json!([0])
    );
}

#[test]
fn any_firing_component_decides_the_map() {
    let v = check_json("multi.json");
    assert_eq!(v["components"][0]["theorem"]["verdict"], "Inconclusive");
    assert_eq!(
        v["components"][1]["theorem"]["verdict"],
        "NotEventuallySmoothable"
    );
    assert_eq!(v["verdict"], "NotEventuallySmoothable");
    let human = run(&["check", fixture("multi.json").to_str().unwrap()]);
    let text = String::from_utf8(human.stdout).unwrap();
    assert!(text.contains("component 0 (quiet)"));
    assert!(text.contains("component 1 (loud)"));
}

#[test]
fn malformed_json_exits_2() {
    let path = fixture("malformed.json");
    let out = run(&["check", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.starts_with("error [json_syntax]:"), "{err}");
    assert!(out.stdout.is_empty());

    let out = run(&["check", "--json", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json_of(&out)["error"]["code"], "json_syntax");
}

#[test]
fn missing_file_exits_2() {
    let out = run(&["check", "/nonexistent/problem.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_count_exits_2() {
    let path = fixture("fan_3_4.json");
    let out = run_env(
        &["check", path.to_str().unwrap()],
        &[("GHOSTCHECK_THREADS", "zero")],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_output() {
    let path = fixture("fan_3_4.json");
    let one = run_env(
        &["check", "--json", path.to_str().unwrap()],
        &[("GHOSTCHECK_THREADS", "1")],
    );
    let four = run_env(
        &["check", "--json", path.to_str().unwrap()],
        &[("GHOSTCHECK_THREADS", "4")],
    );
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn localmodel_simple_pole_on_both_branches() {
    let out = run(&[
        "localmodel",
        "--json",
        fixture("lm_x.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["verdict"], "pass");
    assert_eq!(v["expected_residue"], serde_json::json!(["1"]));
    let residues: Vec<&Value> = v["levels"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|l| l["components"].as_array().unwrap())
        .filter(|c| c["pole_order"] == 1)
        .map(|c| &c["residue"][0])
        .collect();
    assert_eq!(residues, vec!["1", "1"]);
}

#[test]
fn localmodel_non_constant_level_is_a_finding() {
    let out = run(&[
        "localmodel",
        "--json",
        fixture("lm_nonconstant.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    assert_eq!(v["verdict"], "fail");
    let failure = v["failures"][0].as_str().unwrap();
    assert!(failure.contains("non_constant_level"), "{failure}");
    assert!(failure.contains("level 2"), "{failure}");
}

#[test]
fn localmodel_zero_map_passes() {
    let out = run(&[
        "localmodel",
        "--json",
        fixture("lm_zero.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json_of(&out)["verdict"], "pass");
}

#[test]
fn generate_round_trips_through_check() {
    let dir = tempfile::tempdir().unwrap();
    for model in ["hyperelliptic", "nodal-rational"] {
        let path = dir.path().join(format!("{model}.json"));
        let out = run(&[
            "generate",
            "--N",
            "2",
            "--h",
            "2",
            "--model",
            model,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
        let out = run(&["check", "--json", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        let v = json_of(&out);
        assert_eq!(v["components"][0]["theorem"]["rank"], 4);
        assert_eq!(v["verdict"], "NotEventuallySmoothable");
    }
    let a = run(&[
        "generate", "--N", "3", "--h", "2", "--model", "random", "--seed", "9",
    ]);
    let b = run(&[
        "generate", "--N", "3", "--h", "2", "--model", "random", "--seed", "9",
    ]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn generate_rejects_small_instances() {
    let out = run(&["generate", "--N", "1", "--h", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn dims_with_stratum() {
    let stratum = r#"{"N":2,"g":2,"d":4,"h":2,"n":4,"parts":[[0,1],[0,1],[0,1],[0,1]]}"#;
    let out = run(&[
        "dims",
        "--json",
        "--N",
        "2",
        "--g",
        "2",
        "--d",
        "4",
        "--stratum",
        stratum,
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json_of(&out);
    assert_eq!(v["dim_moduli"], 13);
    assert_eq!(v["dim_stratum"], 13);

    let out = run(&["dims", "--N", "2", "--g", "3", "--d", "4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_passes_and_is_reproducible() {
    let a = run(&["selftest"]);
    assert_eq!(
        a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&a.stdout)
    );
    let b = run(&["selftest"]);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 9);
}

#[test]
fn selftest_catches_flipped_residues() {
    let out = run(&["selftest", "--inject-fault", "residue-sign"]);
    assert_eq!(out.status.code(), Some(1));
    let text = String::from_utf8(out.stdout).unwrap();
    let failed: Vec<&str> = text.lines().filter(|l| l.starts_with("[FAIL]")).collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().any(|l| l.contains("residue")), "{text}");
}
