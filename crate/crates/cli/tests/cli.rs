use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const FIG2: &str = r#"
schema_version = 1

[physical]
drive_frequency = "0.93 kHz"
modulation_amplitude = "0.56 um"
mirror_decay_length = "0.57 um"
rabi_frequency = 23.38e3

[initial_state]
z0 = "20.1 um"
dz = "0.28 um"

[time]
t_end = "5.4 s"
"#;

fn config(dir: &Path, lambda: &str) -> PathBuf {
    let path = dir.join(format!("config-{lambda}.toml"));
    fs::write(&path, FIG2.replace("0.56 um", lambda)).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_revival")).args(args).output().unwrap()
}

fn output_dir(out: &Output) -> PathBuf {
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    PathBuf::from(v["output"].as_str().unwrap())
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn checksums(dir: &Path) -> Vec<(String, String)> {
    manifest(dir)["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| (f["name"].as_str().unwrap().to_string(), f["sha256"].as_str().unwrap().to_string()))
        .collect()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn predict_flags_large_q_but_still_reports() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "0.56 um");
    let out = run(&["predict", "--config", s(&cfg), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = output_dir(&out);
    let v: Value = serde_json::from_str(&fs::read_to_string(dir.join("prediction.json")).unwrap()).unwrap();
    let p = &v["prediction"];
    assert_eq!(p["validity"]["perturbative"], false);
    assert_eq!(p["order"], 4);
    assert!((p["t0"].as_f64().unwrap() - 4.306).abs() < 1e-3);
    assert!(p["t_spectral"].as_f64().unwrap() > 0.0);
    assert!(v["soft_wall"]["t0_s"].as_f64().unwrap() > p["t0"].as_f64().unwrap());
    // manifest lists the output with its checksum
    let sums = checksums(&dir);
    let bytes = fs::read(dir.join("prediction.json")).unwrap();
    use sha2::Digest;
    assert_eq!(sums, vec![("prediction.json".to_string(), hex::encode(sha2::Sha256::digest(&bytes)))]);
}

#[test]
fn predict_without_drive_returns_t0_on_every_route() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "0 um");
    let out = run(&["predict", "--config", s(&cfg), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&fs::read_to_string(output_dir(&out).join("prediction.json")).unwrap()).unwrap();
    let p = &v["prediction"];
    let t0 = p["t0"].as_f64().unwrap();
    for route in ["t_spectral", "t_eq12", "t_eq13"] {
        assert!((p[route].as_f64().unwrap() / t0 - 1.0).abs() < 1e-9, "{route}");
    }
}

#[test]
fn errors_are_json_with_nonzero_exit() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["predict", "--config", "/nonexistent.toml", "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "io");

    let cfg = config(tmp.path(), "-1 um");
    let out = run(&["predict", "--config", s(&cfg), "--out", s(tmp.path())]);
    assert_eq!(out.status.code(), Some(1));
    let v: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(v["error"]["kind"], "validation");
    assert!(v["error"]["message"].as_str().unwrap().contains("modulation_amplitude must be ≥ 0"));
}

#[test]
fn quick_simulation_is_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "0 um");
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let first = run(&["simulate", "--quick", "--config", s(&cfg), "--out", s(a.path()), "--checkpoint", "0.01"]);
    let second = run(&["simulate", "--quick", "--config", s(&cfg), "--out", s(b.path()), "--checkpoint", "0.01"]);
    assert_eq!(first.status.code(), Some(0), "{}", String::from_utf8_lossy(&first.stdout));
    let (da, db) = (output_dir(&first), output_dir(&second));
    assert_eq!(da.file_name(), db.file_name());
    assert_eq!(checksums(&da), checksums(&db));
    let names: Vec<String> = checksums(&da).into_iter().map(|(n, _)| n).collect();
    assert_eq!(names, ["autocorr.csv", "psi_000.bin", "summary.json"]);
    let csv = fs::read_to_string(da.join("autocorr.csv")).unwrap();
    assert!(csv.starts_with("t_s,re_C,im_C,abs_C,norm,mean_z_m,mean_p,mean_E_J\n"));
    let summary: Value = serde_json::from_str(&fs::read_to_string(da.join("summary.json")).unwrap()).unwrap();
    let t = summary["revival"]["t_detected"].as_f64().unwrap();
    let expected = summary["expected_revival_s"].as_f64().unwrap();
    assert!((t / expected - 1.0).abs() < 0.05);
}

#[test]
fn sweep_is_identical_serial_and_parallel_and_compares() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "0 um");
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let lambdas = "0,20nm,40nm";
    let serial = run(&["sweep", "--quick", "--config", s(&cfg), "--out", s(a.path()), "--lambdas", lambdas, "--jobs", "1"]);
    let parallel = run(&["sweep", "--quick", "--config", s(&cfg), "--out", s(b.path()), "--lambdas", lambdas, "--jobs", "4"]);
    assert!(serial.status.code() == Some(0) || serial.status.code() == Some(3));
    let (da, db) = (output_dir(&serial), output_dir(&parallel));
    assert_eq!(checksums(&da), checksums(&db));
    let csv = fs::read_to_string(da.join("sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("lambda_m,T_lambda_s,ratio,peak_height,predicted_ratio_eq12,predicted_ratio_eq13,deviation")
    );
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first[0], "0");
    assert_eq!(first[2], "1");
    assert_eq!(lines.count(), 2);

    let sweep_json = da.join("sweep.json");
    let cmp = run(&["compare", "--quick", "--config", s(&cfg), "--out", s(a.path()), "--sweep", s(&sweep_json)]);
    assert!(cmp.status.code() == Some(0) || cmp.status.code() == Some(3));
    let v: Value = serde_json::from_str(&fs::read_to_string(output_dir(&cmp).join("comparison.json")).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 3);
    assert_eq!(v["rows"][0]["deviation"], 0.0);
}

#[test]
fn singleton_sweep_has_no_fit() {
    let tmp = TempDir::new().unwrap();
    let cfg = config(tmp.path(), "0 um");
    let out = run(&["sweep", "--quick", "--config", s(&cfg), "--out", s(tmp.path()), "--lambdas", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let v: Value = serde_json::from_str(&fs::read_to_string(output_dir(&out).join("sweep.json")).unwrap()).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 1);
    assert_eq!(v["rows"][0]["ratio"], 1.0);
    assert!(v["fit"].is_null());
}

#[test]
fn mathieu_table() {
    let tmp = TempDir::new().unwrap();
    let out = run(&["mathieu", "--out", s(tmp.path()), "--orders", "1.5:3.5:1", "--q", "0,0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let csv = fs::read_to_string(output_dir(&out).join("mathieu.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "nu,q,a_numeric,a_perturbative");
    assert_eq!(rows.len(), 7);
    assert!(rows[1].starts_with("1.5,0,2.25,2.25"));
    let bad = run(&["mathieu", "--out", s(tmp.path()), "--orders", "3:1:1"]);
    assert_eq!(bad.status.code(), Some(1));
    let integer = run(&["mathieu", "--out", s(tmp.path()), "--orders", "2:2:1", "--q", "0.1"]);
    assert_eq!(integer.status.code(), Some(3));
}
