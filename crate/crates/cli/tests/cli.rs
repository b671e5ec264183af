//! End-to-end runs of the binary on tiny instances the built-in solver handles.

use std::path::Path;
use std::process::{Command, Output};

fn bin(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcr-sched"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

const TINY: &str = r#"
case = "WO_FCR"
days = 2
steps_per_hour = 1
hours_per_day = 3
solver = "micro"
relax_step_binaries = true
synthetic_seed = 3
output_dir = "out"
"#;

fn tiny_dir() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), TINY).unwrap();
    dir
}

#[test]
fn micro_run_writes_checkpoints_and_report() {
    let dir = tiny_dir();
    let out = bin(dir.path(), &["run", "--config", "c.toml", "--case", "WO_FCR"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("WO_FCR_deg days=2"), "{stdout}");
    let ck = dir.path().join("out/checkpoints/WO_FCR_deg");
    assert!(ck.join("day_0000.json").is_file() && ck.join("day_0001.json").is_file());
    let log = std::fs::read_to_string(ck.join("progress.log")).unwrap();
    assert_eq!(log.lines().filter(|l| l.contains("status=Optimal")).count(), 2);
    assert!(dir.path().join("out/report/monetary.csv").is_file());
}

#[test]
fn report_from_checkpoints_is_byte_identical() {
    let dir = tiny_dir();
    assert!(bin(dir.path(), &["run", "--config", "c.toml", "--case", "WO_FCR"]).status.success());
    let out = bin(dir.path(), &["report", "--from", "out/checkpoints", "--out", "again"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in ["monetary.csv", "market_mix.csv", "manifest.json", "hist_WO_FCR_deg_soe_step.csv"] {
        let a = std::fs::read(dir.path().join("out/report").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("again").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn rerun_resumes_from_checkpoints() {
    let dir = tiny_dir();
    assert!(bin(dir.path(), &["run", "--config", "c.toml", "--case", "WO_FCR"]).status.success());
    let first = std::fs::read(dir.path().join("out/report/monetary.csv")).unwrap();
    assert!(bin(dir.path(), &["run", "--config", "c.toml", "--case", "WO_FCR"]).status.success());
    let log = std::fs::read_to_string(dir.path().join("out/checkpoints/WO_FCR_deg/progress.log")).unwrap();
    // nothing re-solved
    assert_eq!(log.lines().filter(|l| l.contains("status=")).count(), 2);
    assert_eq!(first, std::fs::read(dir.path().join("out/report/monetary.csv")).unwrap());
}

#[test]
fn export_model_writes_mps_and_names() {
    let dir = tiny_dir();
    let out = bin(dir.path(), &["export-model", "--config", "c.toml", "--day", "1", "--out", "m.mps"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mps = std::fs::read_to_string(dir.path().join("m.mps")).unwrap();
    assert!(mps.contains("ROWS") && mps.contains("ENDATA"));
    let sidecar: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with("m.mps") && n != "m.mps")
        .collect();
    assert_eq!(sidecar.len(), 1, "{sidecar:?}");
    let names = std::fs::read_to_string(dir.path().join(&sidecar[0])).unwrap();
    assert!(names.contains("soe[t=0]"));
}

#[test]
fn bad_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("c.toml"), "no_such_key = 1\n").unwrap();
    let out = bin(dir.path(), &["run", "--config", "c.toml"]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(dir.path().join("c.toml"), "soc_min = 0.95\n").unwrap();
    assert_eq!(bin(dir.path(), &["run", "--config", "c.toml"]).status.code(), Some(2));
}

#[test]
fn missing_data_file_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "frequency_file = \"nope.csv\"\nprice_file = \"nope_prices.csv\"\nsolver = \"micro\"\n",
    )
    .unwrap();
    let out = bin(dir.path(), &["run", "--config", "c.toml", "--case", "WO_FCR"]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn solver_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    // the built-in solver refuses a full day of 1-minute steps
    std::fs::write(dir.path().join("c.toml"), "solver = \"micro\"\nsynthetic_seed = 1\noutput_dir = \"out\"\n").unwrap();
    let out = bin(dir.path(), &["run", "--config", "c.toml", "--case", "MULTI"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
