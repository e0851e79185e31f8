use std::fs;
use std::path::Path;
use std::process::Command;

fn fdiab(args: &[&str], out: &Path) {
    let o = Command::new(env!("CARGO_BIN_EXE_fdiab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs");
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn small_config(dir: &Path) -> String {
    let p = dir.join("cfg.json");
    fs::write(
        &p,
        r#"{
  "topology": {"kind": "line", "K": 1, "w": 2},
  "duplex": {"rinr_db_sweep": ["-inf", -10, 0]},
  "qos": {"lambda_min_pps": [0, 100]},
  "mc": {"n_drops": 2, "seed": 5}
}"#,
    )
    .unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn rate_sweep_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    fdiab(&["rate-sweep", "--config", &cfg, "--seed", "9"], &out);
    let csv = fs::read_to_string(out.join("rate_sweep.csv")).unwrap();
    assert!(csv.starts_with("drop,delta_s,rinr_db,hop,"));
    assert!(csv.contains(",-inf,"));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("run.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "rate-sweep");
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["n_drops"], 2);
    assert_eq!(manifest["config"]["topology"]["K"], 1);
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    fdiab(&["min-delay", "--config", &cfg], &a);
    fdiab(&["min-delay", "--config", &cfg], &b);
    assert_eq!(
        fs::read(a.join("min_delay.csv")).unwrap(),
        fs::read(b.join("min_delay.csv")).unwrap()
    );
}

#[test]
fn every_subcommand_writes_its_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    for (cmd, file) in [
        ("utility", "utility.csv"),
        ("kmax", "kmax.csv"),
        ("latency-gain", "latency_gain.csv"),
        ("delay-sweep", "delay_sweep.csv"),
    ] {
        let out = dir.path().join(cmd);
        fdiab(&[cmd, "--config", &cfg, "--drops", "1"], &out);
        let body = fs::read_to_string(out.join(file)).unwrap();
        assert!(body.lines().count() > 1, "{cmd}");
        assert!(out.join("run.json").exists());
    }
}

#[test]
fn bad_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, r#"{"qos": {"eta": 1.5}}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fdiab"))
        .args(["min-delay", "--config"])
        .arg(&p)
        .env("RUST_BACKTRACE", "0")
        .output()
        .unwrap();
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("eta"));
}
