use std::path::PathBuf;
use std::process::Command;

fn nullgeo() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nullgeo"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("nullgeo-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn list_names_every_scenario() {
    let out = nullgeo().arg("list").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in nullgeo::scenario::SCENARIOS {
        assert!(text.contains(name));
    }
    assert!(text.contains("rel_tol"));
}

#[test]
fn cylinder_run_writes_report_and_plots() {
    let dir = scratch("cylinder");
    let report = dir.join("report.json");
    let status = nullgeo()
        .args(["run", "cylinder-embedding", "--seed", "3", "--max-param", "20", "--out"])
        .arg(&report)
        .arg("--plot-dir")
        .arg(dir.join("plots"))
        .status()
        .unwrap();
    assert!(status.success());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["exit_status"], 0);
    assert_eq!(v["parameters"]["seed"], "3");
    assert_eq!(v["parameters"]["max_param"], "20");
    assert_eq!(v["results"]["intersection_components"], 2);
    assert!(v["timestamp"].as_u64().unwrap() > 0);
    assert!(dir.join("plots/cylinder-embedding-trace.csv").exists());
}

#[test]
fn config_file_and_overrides() {
    let dir = scratch("config");
    let cfg = dir.join("contact.cfg");
    std::fs::write(&cfg, "# fewer states\nstates = 40\nseed = 5\n").unwrap();
    let out = nullgeo().args(["run", "contact-residuals", "--seed", "9", "--config"]).arg(&cfg).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["parameters"]["states"], "40");
    assert_eq!(v["parameters"]["seed"], "9");
    assert_eq!(v["results"]["states"], 40);
}

#[test]
fn usage_errors_and_failed_assertions() {
    let bad_name = nullgeo().args(["run", "nope"]).output().unwrap();
    assert_eq!(bad_name.status.code(), Some(2));
    let bad_key = nullgeo().args(["run", "cylinder-embedding", "--set", "bogus=1"]).output().unwrap();
    assert_eq!(bad_key.status.code(), Some(2));
    let malformed = nullgeo().args(["run", "cylinder-embedding", "--set", "span"]).output().unwrap();
    assert_eq!(malformed.status.code(), Some(2));
    let failing = nullgeo().args(["run", "minkowski-minus-point", "--set", "family_len=4"]).output().unwrap();
    assert_eq!(failing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&failing.stderr).contains("[FAIL] completed"));
}
