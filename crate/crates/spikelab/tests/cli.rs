use std::fs;
use std::process::Command;

fn spikelab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_spikelab"))
}

#[test]
fn analytic_writes_law_and_reports_outlier() {
    let dir = tempfile::tempdir().unwrap();
    let out = spikelab()
        .args(["analytic", "--theta", "2", "--format", "json", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    let summary: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["outlier_location"], 2.5);
    assert_eq!(summary["outlier_mass"], 0.75);
    let law = fs::read_to_string(dir.path().join("law.csv")).unwrap();
    assert!(law.starts_with("x,density\n"));
    assert!(law.ends_with("location,mass\n2.5,0.75\n"));
}

#[test]
fn negative_theta_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = spikelab()
        .args(["analytic", "--theta", "-4", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("atom,-4.25,0.9375"));
}

#[test]
fn simulate_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for sub in ["a", "b"] {
        let target = dir.path().join(sub);
        let status = spikelab()
            .args(["simulate", "--n", "150", "--seed", "9", "--out"])
            .arg(&target)
            .output()
            .unwrap();
        assert!(status.status.success());
        files.push(fs::read(target.join("spectrum-seed-9.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn exit_code_follows_checks() {
    let dir = tempfile::tempdir().unwrap();
    let ok = spikelab()
        .args(["outlier", "--n", "400", "--theta", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(ok.status.success());
    let failing = spikelab()
        .args(["accept", "--criterion", "1", "--tolerance", "0", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(failing.status.code(), Some(1));
}

#[test]
fn bad_config_exits_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[model]\nkind = \"sideways\"\n").unwrap();
    let out = spikelab().arg("simulate").arg("--config").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
