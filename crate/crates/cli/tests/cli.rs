//! Runs the `autoprep` binary end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_autoprep"))
}

fn running_example() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/running_example")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn predict_apply_eval_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let project = running_example();
    let out = run(&["predict", path(&project), "--mode", "precise", "--seed", "7", "--out", path(&plan)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&plan).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["format_version"], 1);
    assert_eq!(json["metadata"]["mode"], "precise");
    assert_eq!(json["joins"].as_array().unwrap().len(), 3);

    let applied = dir.path().join("applied");
    let out = run(&["apply", path(&project), path(&plan), "--out", path(&applied)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(applied.join("Fertility.csv").exists());
    assert!(applied.join("relationships.json").exists());

    let out = run(&["eval", path(&plan), path(&plan)]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["transforms"]["f1"], 1.0);
    assert_eq!(report["joins"]["f1"], 1.0);
}

#[test]
fn predict_to_stdout_matches_default_depth() {
    let out = run(&["predict", path(&running_example())]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["metadata"]["m"], 2);
    assert_eq!(json["metadata"]["mode"], "optimistic");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(running_example().join("Date.csv"), dir.path().join("Date.csv")).unwrap();
    let out = run(&["predict", path(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("at least two tables"));

    std::fs::write(dir.path().join("Empty.csv"), "a,b\n").unwrap();
    let out = run(&["predict", path(dir.path())]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Empty.csv"));

    let plan = dir.path().join("bad.json");
    std::fs::write(
        &plan,
        r#"{"format_version":1,"tables":[{"name":"Fertility","steps":[{"op":"transpose","params":{}},{"op":"split","params":{"column":"nope","delimiter":"-","select_pos":0,"output_column":"x"}}]}],"joins":[]}"#,
    )
    .unwrap();
    let out = run(&["apply", path(&running_example()), path(&plan), "--out", path(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("Fertility") && err.contains("step 1"), "{err}");

    let (p, t) = (dir.path().join("p"), dir.path().join("t"));
    std::fs::create_dir_all(&p).unwrap();
    std::fs::create_dir_all(&t).unwrap();
    std::fs::write(p.join("x.json"), r#"{"format_version":1,"tables":[],"joins":[]}"#).unwrap();
    let out = run(&["eval", path(&p), path(&t)]);
    assert_eq!(out.status.code(), Some(5));

    let out = run(&["predict"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn custom_config_is_honoured() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("weights.toml");
    std::fs::write(&config, "not = [valid").unwrap();
    let out = run(&["predict", path(&running_example()), "--config", path(&config)]);
    assert_eq!(out.status.code(), Some(1));
}
