use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use idslab::output::{verify_manifest, MANIFEST, SUMMARY};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_idslab"));
    c.env_remove("IDSLAB_OUT");
    c
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p
}

const SMALL_IDS: &str = r#"
experiment = "ids"

[model]
d = 2
sides = [6, 6]
bc = ["dirichlet", "neumann"]
field = [[0.0, 0.5], [-0.5, 0.0]]

[ensemble]
kind = "alloy"
profile = { shape = "unit-cube" }
coupling = { law = "two-point", low = -1.0, high = 1.0 }

[run]
grid = { kind = "uniform", lo = -3.0, hi = 6.0, points = 41 }
realizations = 6
master_seed = 99
"#;

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn list_experiments_prints_ten_entries() {
    let o = bin().arg("list-experiments").output().unwrap();
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 10);
    for name in ["ids", "bc-gap", "truncation", "weyl", "landau", "measure-demo"] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn validate_accepts_and_echoes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ids.toml", SMALL_IDS);
    let o = bin().arg("validate").arg(&cfg).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("OK\n"));
    assert!(text.contains("master_seed = 99"));
}

#[test]
fn negative_spacing_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &SMALL_IDS.replace("d = 2\n", "d = 2\nspacing = -1.0\n"));
    let o = bin().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("model.spacing"), "{}", stderr(&o));

    let out = dir.path().join("out");
    let o = bin().arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("model.spacing"));
    assert!(!out.join(MANIFEST).exists());
}

#[test]
fn missing_seed_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "noseed.toml", &SMALL_IDS.replace("master_seed = 99\n", ""));
    let o = bin().arg("validate").arg(&cfg).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("master_seed"), "{}", stderr(&o));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ids.toml", SMALL_IDS);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (out, workers) in [(&a, "1"), (&b, "2")] {
        let o = bin().arg("run").arg(&cfg).arg("--out").arg(out).arg("--workers").arg(workers).output().unwrap();
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let csv_a = fs::read(a.join("ids.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.join("ids.csv")).unwrap());
    assert_eq!(fs::read(a.join(SUMMARY)).unwrap(), fs::read(b.join(SUMMARY)).unwrap());
    let header = String::from_utf8(csv_a).unwrap();
    assert!(header.starts_with("bc,energy,value,stderr,std_dev\n"));
}

#[test]
fn manifest_checksums_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "ids.toml", SMALL_IDS);
    let out = dir.path().join("run");
    let o = bin().arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert!(o.status.success());
    assert!(verify_manifest(&out).unwrap().is_empty());
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(out.join(MANIFEST)).unwrap()).unwrap();
    assert_eq!(manifest["config_echo"]["run"]["master_seed"], 99);
    assert!(manifest["checksums"].get("ids.csv").is_some());

    fs::write(out.join("ids.csv"), b"tampered\n").unwrap();
    assert_eq!(verify_manifest(&out).unwrap(), vec!["ids.csv".to_string()]);
}

#[test]
fn environment_overrides_config_output() {
    let dir = tempfile::tempdir().unwrap();
    let from_config = dir.path().join("from-config");
    let body = format!("output = {:?}\n{SMALL_IDS}", from_config.to_str().unwrap());
    let cfg = write_config(dir.path(), "ids.toml", &body);
    let from_env = dir.path().join("from-env");
    let o = bin().arg("run").arg(&cfg).env("IDSLAB_OUT", &from_env).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(from_env.join(MANIFEST).exists());
    assert!(!from_config.exists());

    let o = bin().arg("run").arg(&cfg).output().unwrap();
    assert!(o.status.success());
    assert!(from_config.join(MANIFEST).exists());
}

#[test]
fn json_config_runs() {
    let dir = tempfile::tempdir().unwrap();
    let parsed: toml::Value = toml::from_str(SMALL_IDS).unwrap();
    let cfg = write_config(dir.path(), "ids.json", &serde_json::to_string(&parsed).unwrap());
    let o = bin().arg("validate").arg(&cfg).output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn numerical_failure_leaves_error_record() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL_IDS
        .replace("sides = [6, 6]", "sides = [200, 200]")
        .replace("\"dirichlet\", \"neumann\"", "\"dirichlet\"");
    let cfg = write_config(dir.path(), "big.toml", &body);
    let out = dir.path().join("out");
    let o = bin().arg("run").arg(&cfg).arg("--out").arg(&out).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(out.join("error.json").exists());
    assert!(!out.join(MANIFEST).exists());
}
