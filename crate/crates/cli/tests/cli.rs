//! End-to-end tests of the `lorenzlab` binary: flag parsing, the exit-code
//! contract, config precedence, and the stability guarantees of the file
//! outputs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lorenzlab"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

#[test]
fn classify_reports_the_candidate_label() {
    let out = run(&["henon", "--m1", "0", "--m2", "0.85", "--b", "0.7", "classify"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("label: lorenz-candidate"), "{}", stdout(&out));
}

#[test]
fn missing_coefficient_is_a_usage_error() {
    let out = run(&["henon", "classify", "--m2", "0.85", "--b", "0.7"]);
    assert_eq!(code(&out), 2);
    let err = stderr(&out);
    assert!(err.contains("m1") && err.contains("usage"), "{err}");
}

#[test]
fn missing_action_is_a_usage_error() {
    let out = run(&["henon", "--m1", "0", "--m2", "0.85", "--b", "0.7"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn inverse_of_a_noninvertible_map_is_refused() {
    let out = run(&["henon", "--m1", "0", "--m2", "0", "--b", "0", "--inverse", "classify"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("non-invertible"), "{}", stderr(&out));
}

#[test]
fn orbit_writes_indexed_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("orbit.csv");
    let out = run(&[
        "henon", "--m1", "0", "--m2", "0.85", "--b", "0.7", "orbit", "--n-transient", "100",
        "--keep", "50", "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,x,y,z");
    assert_eq!(lines.len(), 51);
    assert!(lines[1].starts_with("0,"));
}

#[test]
fn powers_grid_passes_even_at_larger_k() {
    let out = run(&["powers", "--k-max", "64"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("max deviation"), "{}", stdout(&out));
}

#[test]
fn powers_outside_the_rotation_regime_exits_2() {
    let out = run(&["powers", "--mu2", "0.5", "--lambda", "0.5"]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("no rotation phase"), "{}", stderr(&out));
}

#[test]
fn powers_unreachable_tolerance_is_a_numerical_failure() {
    let out = run(&["powers", "--tol", "1e-30"]);
    assert_eq!(code(&out), 3);
    assert!(stderr(&out).contains("verification failed"), "{}", stderr(&out));
}

/// Config that keeps sweep cells cheap without changing any threshold.
fn write_screening_config(dir: &Path) -> String {
    let path = dir.join("run.cfg");
    fs::write(
        &path,
        "[protocol]\nn_transient = 500\nn_lyapunov = 20000\n",
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

fn sweep_args<'a>(cfg: &'a str, out: &'a str) -> Vec<&'a str> {
    vec![
        "sweep",
        "--config",
        cfg,
        "--out",
        out,
        "--axis",
        "m1=-0.1:0.1:3",
        "--axis",
        "m2=0.7:0.9:3",
        "--fixed",
        "b=0.7",
    ]
}

#[test]
fn sweep_writes_then_resumes_idempotently() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_screening_config(dir.path());
    let csv = dir.path().join("grid.csv");
    let csv_s = csv.to_str().unwrap().to_string();

    let first = run(&sweep_args(&cfg, &csv_s));
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let bytes = fs::read(&csv).unwrap();
    assert!(stdout(&first).contains("\"cells_computed\": 9"));

    // A finished file is not recomputed and not changed.
    let second = run(&sweep_args(&cfg, &csv_s));
    assert_eq!(code(&second), 0);
    assert!(stdout(&second).contains("\"cells_computed\": 0"));
    assert_eq!(fs::read(&csv).unwrap(), bytes);

    // A truncated file is completed to the same bytes.
    let text = String::from_utf8(bytes.clone()).unwrap();
    let prefix: String = text.lines().take(3).map(|l| format!("{l}\n")).collect();
    fs::write(&csv, prefix).unwrap();
    let resumed = run(&sweep_args(&cfg, &csv_s));
    assert_eq!(code(&resumed), 0);
    assert!(stdout(&resumed).contains("\"cells_computed\": 7"));
    assert_eq!(fs::read(&csv).unwrap(), bytes);
}

#[test]
fn sweep_bytes_do_not_depend_on_the_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_screening_config(dir.path());
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let csv = dir.path().join(format!("grid_{threads}.csv"));
        let csv_s = csv.to_str().unwrap().to_string();
        let out = bin()
            .args(sweep_args(&cfg, &csv_s))
            .env("LORENZLAB_THREADS", threads)
            .output()
            .expect("binary runs");
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        outputs.push(fs::read(&csv).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("point.cfg");
    fs::write(&path, "[henon]\nm1 = 0\nm2 = 0\nb = 0.5\n").unwrap();
    let cfg = path.to_str().unwrap();

    let from_config = run(&["henon", "--config", cfg, "classify"]);
    assert_eq!(code(&from_config), 0, "{}", stderr(&from_config));
    assert!(stdout(&from_config).contains("label: fixed-point"));

    let overridden = run(&[
        "henon", "--config", cfg, "--m2", "0.85", "--b", "0.7", "classify",
    ]);
    assert_eq!(code(&overridden), 0, "{}", stderr(&overridden));
    assert!(stdout(&overridden).contains("label: lorenz-candidate"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.cfg");
    fs::write(&path, "[henon]\nbogus = 1\n").unwrap();
    let out = run(&[
        "henon", "--config", path.to_str().unwrap(), "--m1", "0", "--m2", "0.85", "--b",
        "0.7", "classify",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("bogus"), "{}", stderr(&out));
}

#[test]
fn rescale_ladder_has_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ladder.csv");
    let out = run(&[
        "rescale", "--case", "i", "--k-min", "10", "--k-max", "14", "--k-step", "2",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "case,k,j,mu1,mu2,mu3,M1,M2,B,dev_C0,dev_C1");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("I,10,0,"));
}

#[test]
fn rescale_positive_branch_emits_the_diagnostic() {
    let out = run(&[
        "rescale", "--case", "i", "--mu2", "1e-6", "--k-min", "10", "--k-max", "12",
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("\"rungs\"") && text.contains("x1_sup"), "{text}");
}

#[test]
fn scan_delta_reports_candidate_bands() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.json");
    let out = run(&[
        "scan-delta", "--k-min", "12", "--k-max", "14", "--samples", "2", "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let bands = report["bands"].as_array().unwrap();
    assert_eq!(bands.len(), 2);
    assert!(bands.iter().all(|b| b["skipped"].is_null()));
    assert!(bands.iter().any(|b| b["candidates"].as_u64().unwrap() > 0));
}
