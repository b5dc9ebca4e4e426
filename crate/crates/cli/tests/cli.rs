//! Exit codes and artifacts of the `aerowrite` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn aerowrite(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aerowrite")).args(args).env("RUST_LOG", "warn").output().unwrap()
}

fn bundled(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name).to_str().unwrap().to_string()
}

#[test]
fn malformed_config_exits_2_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "[mission]\ntext = \"RSS\"\nheight = \"tall\"\n").unwrap();
    let out = aerowrite(&["run", path.to_str().unwrap(), "--out-dir", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("bad.toml:3:"), "{err}");
    assert!(!dir.path().join("o").exists());
}

#[test]
fn invalid_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("neg.toml");
    fs::write(&path, "[profile]\nv_max = -1.0\n").unwrap();
    let out = aerowrite(&["run", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("neg.toml:2:"));
}

#[test]
fn missing_config_exits_2() {
    let out = aerowrite(&["run", "/nonexistent/mission.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_sweep_value_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = aerowrite(&["sweep", &bundled("rss.toml"), "--axis", "size", "--values", "0.1,abc", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn hover_run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("hover");
    let out = aerowrite(&["run", &bundled("hover.toml"), "--out-dir", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["log.csv", "stats.csv", "overlay.svg", "report.txt", "config.toml"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("status: complete"), "{stdout}");
    assert!(stdout.contains("controller cycle: median"));
    // The written config is canonical and reloads to the same mission.
    let written = fs::read_to_string(out_dir.join("config.toml")).unwrap();
    let again = aerowrite(&["canonical", out_dir.join("config.toml").to_str().unwrap()]);
    assert_eq!(String::from_utf8_lossy(&again.stdout), written);
    // Every stats row of a perfect-sensing hover is below a micrometer.
    let mut rd = csv::Reader::from_path(out_dir.join("stats.csv")).unwrap();
    let mut rows = 0;
    for r in rd.records() {
        let r = r.unwrap();
        rows += 1;
        for v in r.iter().skip(3) {
            assert!(v.parse::<f64>().unwrap().abs() < 1e-6, "{r:?}");
        }
    }
    assert_eq!(rows, 6);
}

#[test]
fn bundled_configs_are_canonical() {
    for name in ["hover.toml", "rss.toml", "hello.toml", "emc2.toml"] {
        let out = aerowrite(&["canonical", &bundled(name)]);
        assert_eq!(out.status.code(), Some(0));
        let text = fs::read_to_string(bundled(name)).unwrap();
        let body: String = text.lines().skip_while(|l| l.starts_with('#') || l.is_empty()).map(|l| format!("{l}\n")).collect();
        assert_eq!(String::from_utf8_lossy(&out.stdout), body, "{name}");
    }
}
