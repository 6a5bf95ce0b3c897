use std::process::Command;

fn yangian() -> Command {
    Command::new(env!("CARGO_BIN_EXE_yangian"))
}

#[test]
fn ev_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ev.json");
    let out =
        yangian().args(["verify", "ev", "--degree", "1", "--points", "1", "--output"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("exit 0"));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["run_config"]["target"], "ev");
    assert_eq!(v["overall"]["exit_code"], 0);
    assert!(!v["suites"].as_array().unwrap().is_empty());
    assert_eq!(v["negative_controls"][0]["status"], "failed_as_expected");
    assert!(!v["module_fingerprints"].as_array().unwrap().is_empty());
}

#[test]
fn explicit_point_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ev.json");
    let out = yangian()
        .args(["verify", "ev", "--degree", "1", "--point", "1/3,2/5", "--output"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["suites"][0]["points"].as_array().unwrap().len(), 1);
}

#[test]
fn rank_below_three_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("none.json");
    let out = yangian().args(["verify", "ev", "--n", "2", "--output"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(!path.exists());
}

#[test]
fn unknown_target_exits_two() {
    let out = yangian().args(["verify", "nothing"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn basis_cap_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let out = yangian()
        .args(["verify", "psi1", "--basis-cap", "10", "--output"])
        .arg(dir.path().join("r.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}
