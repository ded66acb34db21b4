use std::path::Path;
use std::process::{Command, Output};

use wasp_mpc::bench::{read_csv_records, read_json, CSV_HEADER};

fn wasp_mpc(args: &[&str], env_out: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wasp-mpc"));
    cmd.args(args).env_remove("WASP_MPC_OUT");
    if let Some(dir) = env_out {
        cmd.env("WASP_MPC_OUT", dir);
    }
    cmd.output().expect("binary runs")
}

fn files(dir: &Path) -> Vec<String> {
    let mut names: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    names
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(wasp_mpc(&["list"], None).status.code(), Some(0));
    assert_eq!(wasp_mpc(&["verify"], None).status.code(), Some(0));
    assert_eq!(
        wasp_mpc(&["plan", "--task", "nope"], None).status.code(),
        Some(2)
    );
    assert_eq!(
        wasp_mpc(&["plan", "--frac-x", "NaN", "--out", out], None)
            .status
            .code(),
        Some(2)
    );
    assert_eq!(wasp_mpc(&["bench"], None).status.code(), Some(2));
    assert_eq!(wasp_mpc(&["frobnicate"], None).status.code(), Some(2));

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let args = [
        "plan",
        "--task",
        "pendulum",
        "--sim-seconds",
        "0.05",
        "--out",
        blocker.to_str().unwrap(),
    ];
    assert_eq!(wasp_mpc(&args, None).status.code(), Some(1));
}

#[test]
fn out_of_range_knobs_are_clamped_with_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "plan",
        "--task",
        "pendulum",
        "--sim-seconds",
        "0.05",
        "--frac-x",
        "4",
        "--tol-u",
        "-1",
        "--out",
        dir.path().to_str().unwrap(),
    ];
    let output = wasp_mpc(&args, None);
    assert_eq!(output.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("clamped"), "{stderr}");
    let report = read_json(&dir.path().join("plan_pendulum_ilqg_wasp_0.json")).unwrap();
    let wasp = report.config.wasp.unwrap();
    assert_eq!((wasp.frac_x, wasp.tol_u), (1.0, 0.0));
}

#[test]
fn output_directory_precedence() {
    let env_dir = tempfile::tempdir().unwrap();
    let flag_dir = tempfile::tempdir().unwrap();
    let base = ["plan", "--task", "pendulum", "--sim-seconds", "0.05"];
    assert!(wasp_mpc(&base, Some(env_dir.path())).status.success());
    assert_eq!(files(env_dir.path()).len(), 2);

    let mut with_flag = base.to_vec();
    with_flag.extend(["--seed", "4", "--out", flag_dir.path().to_str().unwrap()]);
    assert!(wasp_mpc(&with_flag, Some(env_dir.path())).status.success());
    assert_eq!(
        files(flag_dir.path()),
        [
            "plan_pendulum_ilqg_wasp_4.csv",
            "plan_pendulum_ilqg_wasp_4.json"
        ]
    );
    assert_eq!(files(env_dir.path()).len(), 2);
}

#[test]
fn plan_report_matches_csv() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "plan",
        "--task",
        "quadrotor",
        "--planner",
        "gd",
        "--sim-seconds",
        "0.3",
        "--seed",
        "2",
    ];
    let output = wasp_mpc(&args, Some(dir.path()));
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).contains("avg executed cost"));
    let json = read_json(&dir.path().join("plan_quadrotor_gd_wasp_2.json")).unwrap();
    let csv_path = dir.path().join("plan_quadrotor_gd_wasp_2.csv");
    let rows = read_csv_records(&csv_path).unwrap();
    assert_eq!(rows.len(), 30);
    assert_eq!(json.records.len(), 30);
    for (row, rec) in rows.iter().zip(&json.records) {
        assert_eq!(row.executed_cost, rec.executed_cost);
        assert_eq!(row.dynamics_calls, rec.md_calls + rec.rollout_calls);
    }
    let header = std::fs::read_to_string(&csv_path).unwrap();
    assert!(header.starts_with(&CSV_HEADER.join(",")));
}

#[test]
fn fd_equivalent_settings_track_fd() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let common = [
        "plan",
        "--task",
        "chain",
        "--sim-seconds",
        "0.5",
        "--no-timing",
        "--out",
        out,
    ];
    let mut fd = common.to_vec();
    fd.extend(["--backend", "fd"]);
    let mut wasp = common.to_vec();
    wasp.extend([
        "--backend",
        "wasp",
        "--frac-x",
        "1",
        "--tol-x",
        "0",
        "--frac-u",
        "1",
        "--tol-u",
        "0",
    ]);
    assert!(wasp_mpc(&fd, None).status.success());
    assert!(wasp_mpc(&wasp, None).status.success());
    let a = read_json(&dir.path().join("plan_chain_ilqg_fd_0.json")).unwrap();
    let b = read_json(&dir.path().join("plan_chain_ilqg_wasp_0.json")).unwrap();
    assert_eq!(a.aggregates.total_md_calls, b.aggregates.total_md_calls);
    // Random tangent directions change the finite-difference truncation error only.
    for (x, y) in a.records.iter().zip(&b.records) {
        assert!((x.executed_cost - y.executed_cost).abs() <= 1e-5 * x.executed_cost.abs().max(1.0));
    }
}

#[test]
fn exp3_writes_six_report_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "bench",
        "exp3",
        "--tasks",
        "lq",
        "--sim-seconds",
        "0.2",
        "--seeds",
        "5",
        "--no-timing",
    ];
    assert!(wasp_mpc(&args, Some(dir.path())).status.success());
    let names = files(dir.path());
    assert_eq!(
        names.iter().filter(|n| n.ends_with(".json")).count(),
        6,
        "{names:?}"
    );
    assert_eq!(
        names.iter().filter(|n| n.ends_with(".csv")).count(),
        7,
        "{names:?}"
    );
    assert!(names.contains(&"exp3_lq_sweep_5.csv".to_string()));
    assert!(names.contains(&"exp3_lq_ilqg_fd_5.json".to_string()));
    assert!(names.contains(&"exp3-fx0.1-fu0.5_lq_ilqg_wasp_5.json".to_string()));
}

#[test]
fn exp1_and_exp2_print_tables() {
    let dir = tempfile::tempdir().unwrap();
    let exp1 = [
        "bench",
        "exp1",
        "--tasks",
        "pendulum",
        "--sim-seconds",
        "0.2",
        "--fixed-frac",
        "--no-timing",
    ];
    let output = wasp_mpc(&exp1, Some(dir.path()));
    assert!(output.status.success());
    assert!(String::from_utf8_lossy(&output.stdout).contains("perf_ratio"));
    assert!(dir.path().join("exp1_summary.json").exists());

    let exp2 = [
        "bench",
        "exp2",
        "--tasks",
        "pendulum",
        "--sim-seconds",
        "0.2",
        "--samples",
        "8",
        "--no-timing",
    ];
    let output = wasp_mpc(&exp2, Some(dir.path()));
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    for name in ["predictive", "robust", "cem", "sample-gradient"] {
        assert!(stdout.contains(name), "{stdout}");
    }
}
