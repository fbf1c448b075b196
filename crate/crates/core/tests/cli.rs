mod common;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

fn tactile(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tactile"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> Vec<u8> {
    let out = tactile(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn linear_model_toml() -> String {
    tactile_core::calibration::CalibratedModel {
        model: tactile_core::calibration::PolynomialModel::new(vec![-0.065, 0.0889]).unwrap(),
        signal_units: tactile_core::calibration::SignalUnits::adc_code(),
        fit: None,
    }
    .to_toml()
}

const PRESSES: &str = "t,force_n,quadrants\n0,0,\n1,0.49,1\n3,0,\n4,0.98,1+2\n6,0,\n7,0,\n";

#[test]
fn full_workflow_through_files() {
    let dir = TempDir::new().unwrap();
    write(&dir, "press.csv", PRESSES);
    ok(dir.path(), &["protocol", "-o", "protocol.csv"]);
    ok(
        dir.path(),
        &[
            "calibrate",
            "--dataset",
            "protocol.csv",
            "--repeats",
            "5",
            "-o",
            "model.toml",
        ],
    );
    ok(
        dir.path(),
        &["simulate", "--scenario", "press.csv", "-o", "stream.csv"],
    );
    ok(
        dir.path(),
        &[
            "estimate",
            "--model",
            "model.toml",
            "--input",
            "stream.csv",
            "-o",
            "frames.csv",
        ],
    );
    let report = String::from_utf8(ok(
        dir.path(),
        &[
            "report",
            "--frames",
            "frames.csv",
            "--truth",
            "press.csv",
            "--rmse",
        ],
    ))
    .unwrap();
    assert!(report.contains("rmse_n = "), "{report}");
    assert!(report.contains("pattern_line = "), "{report}");
    let frames = fs::read_to_string(dir.path().join("frames.csv")).unwrap();
    let stream = fs::read_to_string(dir.path().join("stream.csv")).unwrap();
    assert_eq!(frames.lines().count(), stream.lines().count());
}

#[test]
fn estimate_reads_stdin() {
    let dir = TempDir::new().unwrap();
    write(&dir, "model.toml", &linear_model_toml());
    let mut child = Command::new(env!("CARGO_BIN_EXE_tactile"))
        .current_dir(dir.path())
        .args(["estimate", "--model", "model.toml"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(b"0,0,0,0,0,0\n0.1,0,0,0,0,0\n")
        .unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);
}

#[test]
fn underdetermined_dataset_exits_three_without_model() {
    let dir = TempDir::new().unwrap();
    write(&dir, "tiny.csv", "v,force_n\n1,0.1\n2,0.2\n3,0.3\n");
    let out = tactile(
        dir.path(),
        &["calibrate", "--dataset", "tiny.csv", "-o", "model.toml"],
    );
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(!dir.path().join("model.toml").exists());
}

#[test]
fn noise_free_linear_dataset_persists_reference_coefficients() {
    let dir = TempDir::new().unwrap();
    let d = common::synthetic_protocol_dataset(0.0, 0);
    let mut csv = Vec::new();
    d.write_csv(&mut csv).unwrap();
    fs::write(dir.path().join("clean.csv"), csv).unwrap();
    ok(
        dir.path(),
        &["calibrate", "--dataset", "clean.csv", "-o", "model.toml"],
    );
    let m =
        tactile_core::calibration::CalibratedModel::load(&dir.path().join("model.toml")).unwrap();
    let c = m.model.coefficients();
    assert_eq!(c.len(), 2);
    assert!(
        (c[0] + 0.065).abs() < 1e-9 && (c[1] - 0.0889).abs() < 1e-9,
        "{c:?}"
    );
}

#[test]
fn exit_codes_by_error_class() {
    let dir = TempDir::new().unwrap();
    write(&dir, "model.toml", &linear_model_toml());
    write(
        &dir,
        "back.csv",
        "0,0,0,0,0,0\n0.2,0,0,0,0,0\n0.1,0,0,0,0,0\n",
    );
    write(&dir, "short.csv", "0,0,0\n");
    write(&dir, "bad.cfg", "gain = -3\n");

    let code = |args: &[&str]| tactile(dir.path(), args).status.code();
    assert_eq!(
        code(&["estimate", "--model", "model.toml", "--input", "back.csv"]),
        Some(2)
    );
    assert_eq!(
        code(&["estimate", "--model", "model.toml", "--input", "short.csv"]),
        Some(2)
    );
    assert_eq!(
        code(&[
            "estimate",
            "--model",
            "model.toml",
            "--input",
            "missing.csv"
        ]),
        Some(2)
    );
    assert_eq!(code(&["--config", "bad.cfg", "protocol"]), Some(1));
    assert_eq!(code(&["report", "--frames", "back.csv", "--rmse"]), Some(1));
    assert_eq!(code(&["calibrate", "--dataset", "x.csv"]), Some(1));
    assert_eq!(code(&["--help"]), Some(0));

    let err = tactile(
        dir.path(),
        &["estimate", "--model", "model.toml", "--input", "back.csv"],
    );
    assert!(
        String::from_utf8_lossy(&err.stderr).contains("line 3"),
        "{}",
        String::from_utf8_lossy(&err.stderr)
    );
}

#[test]
fn empty_second_gives_ten_lines() {
    let dir = TempDir::new().unwrap();
    write(&dir, "idle.csv", "t,force_n,quadrants\n0,0,\n1,0,\n");
    let out = ok(dir.path(), &["simulate", "--scenario", "idle.csv"]);
    assert_eq!(String::from_utf8(out).unwrap().lines().count(), 10);
}

#[test]
fn gain_flag_changes_sensing_range() {
    let dir = TempDir::new().unwrap();
    write(&dir, "frames.csv", "0,0,0,0,0,0,0,none\n");
    let fine = String::from_utf8(ok(dir.path(), &["report", "--frames", "frames.csv"])).unwrap();
    let wide = String::from_utf8(ok(
        dir.path(),
        &["--gain", "22", "report", "--frames", "frames.csv"],
    ))
    .unwrap();
    assert!(fine.contains("sensing_range_n = 1.000000"), "{fine}");
    assert!(wide.contains("sensing_range_n = 1.500000"), "{wide}");
}
