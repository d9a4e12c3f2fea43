use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sqg_sheets::cli::{parse_config, Format};
use sqg_sheets::solver::ContinuationRecord;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqg-sheets"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn no_arguments_prints_usage() {
    let out = Command::new(env!("CARGO_BIN_EXE_sqg-sheets")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--bogus", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["solve", "--eps", "abc"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn solve_at_zero_gives_trivial_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--eps", "0", "--d", "1"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("magnitude 1/(2d)^2"), "{text}");
    assert!(text.contains("5.0000000000000000e-1") && text.contains("2.5000000000000000e-1"));
    let records: Vec<ContinuationRecord> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("records.json")).unwrap()).unwrap();
    assert_eq!(records.len(), 1);
    assert!(records[0].p_coeffs.iter().chain(&records[0].q_coeffs).all(|&c| c == 0.0));
    assert_eq!(records[0].w, 0.25);
    let curve = fs::read_to_string(dir.path().join("curve_0.000000.csv")).unwrap();
    assert!(curve.starts_with("x,z1,z2,r,gamma,kappa\n"));
    assert_eq!(curve.lines().count(), 257);
}

#[test]
fn records_json_field_names() {
    let dir = tempfile::tempdir().unwrap();
    run(&["solve", "--eps", "0.02", "--modes", "8", "--grid", "64"], dir.path());
    let value: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("records.json")).unwrap()).unwrap();
    let obj = value[0].as_object().unwrap();
    let mut keys: Vec<&str> = obj.keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        ["K", "W", "d", "eps", "iterations", "min_curvature", "p_coeffs", "q_coeffs", "residual_sup", "wall_ms"]
    );
}

#[test]
fn continue_writes_ten_records_and_wtable() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["continue", "--eps-max", "0.1", "--eps-step", "0.01", "--d", "1", "--modes", "16", "--grid", "128"];
    let out = run(&args, dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let records: Vec<ContinuationRecord> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("records.json")).unwrap()).unwrap();
    assert_eq!(records.len(), 10);
    let table = fs::read_to_string(dir.path().join("wtable.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("eps,W,W_ref_4d2,W_ref_2d2"));
    assert_eq!(lines.count(), 10);
    for r in &records {
        assert!(dir.path().join(format!("curve_{:.6}.csv", r.eps)).exists());
    }
    let again = tempfile::tempdir().unwrap();
    run(&args, again.path());
    for name in ["records.json", "wtable.csv", "curve_0.050000.csv"] {
        assert_eq!(fs::read(dir.path().join(name)).unwrap(), fs::read(again.path().join(name)).unwrap());
    }
}

#[test]
fn probe_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["probe-multipliers", "--modes", "8", "--grid", "64"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let mult = fs::read_to_string(dir.path().join("multipliers.csv")).unwrap();
    assert!(mult.starts_with("j,lambda_j,mu_j,C_j,lambda_closed,mu_closed\n"));
    assert_eq!(mult.lines().count(), 9);
    let blocks = fs::read_to_string(dir.path().join("blocks.csv")).unwrap();
    assert!(blocks.starts_with("j,q11,q12,q21,q22,det,source\n"));
    assert_eq!(blocks.lines().filter(|l| l.ends_with(",closed_form")).count(), 8);
    assert_eq!(blocks.lines().filter(|l| l.ends_with(",measured")).count(), 8);
}

#[test]
fn point_vortex_reports_quarter() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["point-vortex", "--m", "2", "--d", "1", "--stride", "100"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("wstar = 2.5000000000000000e-1"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("wstar.json")).unwrap()).unwrap();
    assert_eq!(report["wstar"], 0.25);
    let traj = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t,i,z1,z2\n"));
    assert_eq!(traj.lines().count(), 1 + 2 * 101);
    let out = run(&["point-vortex", "--m", "1"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["verify", "--eps", "0.04", "--modes", "16", "--grid", "128"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert!(report["tangency_sup"].as_f64().unwrap() < 1e-7);
    assert!(report["strength_relative_spread"].as_f64().unwrap() < 1e-6);
    assert!(report["display_f_gap"].is_null());
}

#[test]
fn non_convergence_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--eps", "0.05", "--tol", "1e-30", "--max-iter", "1"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn file_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# sweep\nd = 2\nmodes = 8\ngrid = 64\nformat = csv\neps_step = 0.02\n").unwrap();
    let c = cfg.to_str().unwrap();
    let parsed = parse_config(["sqg-sheets", "continue", "--config", c, "--d", "1.5"]).unwrap();
    assert_eq!(parsed.d, 1.5);
    assert_eq!(parsed.solver.n, 8);
    assert_eq!(parsed.solver.m, 64);
    assert_eq!(parsed.eps_step, 0.02);
    assert_eq!(parsed.format, Format::Csv);
    assert_eq!(parsed.solver.tol, 1e-9);
    assert_eq!(parsed.solver.max_iter, 25);

    fs::write(&cfg, "colour = blue\n").unwrap();
    assert!(parse_config(["sqg-sheets", "solve", "--config", c]).is_err());
    fs::write(&cfg, "modes = many\n").unwrap();
    assert!(parse_config(["sqg-sheets", "solve", "--config", c]).is_err());
}

#[test]
fn conflicting_eps_rejected() {
    assert!(parse_config(["sqg-sheets", "solve", "--eps", "0.1", "--eps-max", "0.2"]).is_err());
    assert!(parse_config(["sqg-sheets", "continue", "--eps", "0.1"]).is_err());
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--eps", "0.1", "--eps-max", "0.2"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_records_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["solve", "--eps", "0.02", "--modes", "4", "--grid", "32", "--format", "csv"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert!(text.starts_with("eps,d,W,residual_sup,iterations,min_curvature,K,wall_ms,p_1,p_2,p_3,p_4,q_1"));
}
