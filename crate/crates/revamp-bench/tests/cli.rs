//! End-to-end CLI checks: exit codes, diagnostics, and output files.

use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_revamp-bench"))
}

fn temp_dir(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("revamp-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

const SMOKE_CONFIG: &str = "scenario = bpsk\n\
    m = 6\n\
    n = 4\n\
    snr_grid_db = 0,10\n\
    instances_per_snr = 3\n\
    strategies = lmmse,acrevamp,clip\n\
    master_seed = 9\n\
    max_sweeps = 60\n\
    tol = 1e-8\n";

#[test]
fn missing_config_exits_1_and_names_the_path() {
    let out = bin()
        .args(["run", "--config", "/nonexistent/missing.cfg"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("/nonexistent/missing.cfg"),
        "stderr: {stderr}"
    );
}

#[test]
fn malformed_config_exits_1_and_names_the_field() {
    let dir = temp_dir("badfield");
    let cfg = write_config(
        &dir,
        "bad.cfg",
        "scenario = sparse\ninstances_per_snr = many\n",
    );
    let out = bin().args(["run", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("instances_per_snr"), "stderr: {stderr}");
}

#[test]
fn run_writes_csv_outputs_and_optional_chart() {
    let dir = temp_dir("smoke");
    let cfg = write_config(&dir, "smoke.cfg", SMOKE_CONFIG);
    let out_dir = dir.join("results");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--threads", "2", "--svg", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let runs = std::fs::read_to_string(out_dir.join("runs.csv")).unwrap();
    // 2 SNR levels x 3 instances x 3 estimators, plus the header.
    assert_eq!(runs.lines().count(), 1 + 2 * 3 * 3);
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2 * 3);
    assert!(summary.starts_with("snr_db,strategy,nmse,nmse_db,n_instances,n_failed,n_nonconverged"));
    assert!(out_dir.join("nmse.svg").exists());
}

#[test]
fn strategies_flag_overrides_the_config_list() {
    let dir = temp_dir("override");
    let cfg = write_config(&dir, "smoke.cfg", SMOKE_CONFIG);
    let out_dir = dir.join("results");
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--strategies", "lmmse", "--out"])
        .arg(&out_dir)
        .output()
        .unwrap();
    assert!(out.status.success());
    let summary = std::fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 2);
    assert!(summary.contains(",lmmse,"));

    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--strategies", "warp-drive"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unwritable_output_exits_2() {
    let dir = temp_dir("unwritable");
    let cfg = write_config(&dir, "smoke.cfg", SMOKE_CONFIG);
    // /dev/null is a file, so creating a directory underneath it fails.
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--out", "/dev/null/results"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_passes_on_a_clean_build() {
    let out = bin().args(["verify", "--seed", "7"]).output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 10);
    assert!(
        stdout.lines().all(|l| l.contains("pass")),
        "stdout: {stdout}"
    );
}

#[test]
fn oracle_subcommand_reports_timing() {
    let dir = temp_dir("oracle");
    let cfg = write_config(&dir, "smoke.cfg", SMOKE_CONFIG);
    let out = bin()
        .args(["oracle", "--config"])
        .arg(&cfg)
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("ms/instance"), "stdout: {stdout}");
}

#[test]
fn thread_env_var_overrides_the_flag() {
    let dir = temp_dir("env");
    let cfg = write_config(&dir, "smoke.cfg", SMOKE_CONFIG);
    let out = bin()
        .args(["run", "--config"])
        .arg(&cfg)
        .args(["--threads", "2", "--out"])
        .arg(dir.join("results"))
        .env("REVAMP_THREADS", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("REVAMP_THREADS"), "stderr: {stderr}");
}
