//! End-to-end runs of the `meltpool` binary on tiny plates.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use meltpool::manifest::RunManifest;

const PLATE: &str = r#"
[scan]
start_mm = 0.5
length_mm = 0.5
[grid]
width_mm = 0.5
depth_mm = 0.25
length_mm = 1.5
fine_mm = 0.05
coarse_mm = 0.1
band_x_mm = [-0.1, 0.1]
band_y_mm = [-0.1, 0.0]
band_z_mm = [0.4, 1.1]
[solver]
snapshot_travels_mm = [0.25, 0.4]
[metrics]
travel_mm = 0.4
quasi_steady_travel_mm = 0.2
"#;

fn meltpool(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meltpool"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Point data of a legacy VTK file written by `run`.
fn vtk_values(path: &Path) -> Vec<f64> {
    let text = std::fs::read_to_string(path).unwrap();
    let (_, data) = text.split_once("LOOKUP_TABLE default\n").unwrap();
    data.lines().map(|l| l.parse().unwrap()).collect()
}

#[test]
fn zero_power_leaves_the_plate_at_its_initial_temperature() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "zero.toml", &format!("{PLATE}\n[source]\npower_w = 0.0\n"));
    let out = dir.path().join("out");
    let o = meltpool(&["run", "-c", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = RunManifest::read(&out.join("manifest.toml")).unwrap();
    let snaps: Vec<&String> = manifest.files.iter().filter(|f| f.ends_with(".vtk")).collect();
    assert!(!snaps.is_empty());
    for f in snaps {
        assert!(vtk_values(&out.join(f)).iter().all(|&t| t == 20.0), "{f}");
    }
}

#[test]
fn negative_time_step_is_a_configuration_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &PLATE.replace("[solver]\n", "[solver]\ntime_step_s = -1e-4\n"));
    let o = meltpool(&["run", "-c", s(&cfg), "--out", s(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("solver.time_step_s"), "{}", stderr(&o));
}

#[test]
fn misspelled_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "typo.toml", "[solver]\nemisivity = 0.3\n");
    let o = meltpool(&["run", "-c", s(&cfg), "--out", s(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("solver.emisivity"), "{}", stderr(&o));
}

#[test]
fn manifest_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "plate.toml", PLATE);
    let first = dir.path().join("first");
    let o = meltpool(&["run", "-c", s(&cfg), "--out", s(&first)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = RunManifest::read(&first.join("manifest.toml")).unwrap();
    assert_eq!(manifest.command, "run");
    assert_eq!(manifest.grid_preset, "custom");
    for f in &manifest.files {
        assert!(first.join(f).exists(), "{f}");
    }
    let echo = write(dir.path(), "echo.toml", manifest.config.as_deref().unwrap());
    let second = dir.path().join("second");
    let o = meltpool(&["run", "-c", s(&echo), "--out", s(&second)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = std::fs::read(first.join("metrics.csv")).unwrap();
    let b = std::fs::read(second.join("metrics.csv")).unwrap();
    assert_eq!(a, b);
    assert!(String::from_utf8(a).unwrap().lines().count() > 1);
}

#[test]
fn calibration_fragment_feeds_back_into_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "plate.toml", PLATE);
    let cal = dir.path().join("cal");
    let o = meltpool(&[
        "calibrate",
        "-c",
        s(&cfg),
        "--free",
        "absorptivity=0.2:0.6",
        "--target-length-um",
        "300",
        "--budget",
        "4",
        "--out",
        s(&cal),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let trace = std::fs::read_to_string(cal.join("trace.csv")).unwrap();
    assert!(trace.lines().count() >= 2);
    let o = meltpool(&["run", "-c", s(&cfg), "-c", s(&cal.join("best.toml")), "--out", s(&dir.path().join("run"))]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn unreachable_profile_url_is_a_reference_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_meltpool"))
        .env("MELTPOOL_CACHE_DIR", dir.path().join("cache"))
        .args([
            "bench",
            "--machine",
            "ammt",
            "--case",
            "b",
            "--profile",
            "http://127.0.0.1:9/profile.txt",
            "--out",
            s(&dir.path().join("out")),
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(5), "{}", stderr(&o));
    assert!(stderr(&o).contains("127.0.0.1:9"));
}
