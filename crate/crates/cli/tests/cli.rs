use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn peakon(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_peakon"))
        .args(args)
        .current_dir(cwd)
        .env_remove("PEAKON_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const FIG1A: &str = include_str!("../scenarios/fig1a.toml");

#[test]
fn fig1a_writes_all_artifacts_with_a_merge() {
    let dir = TempDir::new().unwrap();
    let o = peakon(&["run", "--scenario", "fig1a", "--out-dir", "out"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("out");
    let csv = fs::read_to_string(out.join("fig1a_trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,x_1,x_2,x_3,H"));
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(last[0], 2.0);
    // merged peakons share a column value after the event
    assert_eq!(last[2], last[3]);

    let events: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fig1a_events.json")).unwrap()).unwrap();
    let events = events.as_array().unwrap();
    assert!(!events.is_empty());
    assert_eq!(events[0]["groups"], serde_json::json!([[2, 3]]));
    assert_eq!(events[0]["momenta_after"], serde_json::json!([15.0, 5.0]));
    let t = events[0]["t"].as_f64().unwrap();
    assert!((t - 0.129341404752864).abs() < 1e-9);

    let energy = fs::read_to_string(out.join("fig1a_energy.csv")).unwrap();
    assert!(energy.starts_with("t,H,rel_drift\n"));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("fig1a_report.json")).unwrap()).unwrap();
    assert!(report["energy"]["max_relative_drift"].as_f64().unwrap() < 1e-6);
}

#[test]
fn fig1b_merges_the_right_pair() {
    let dir = TempDir::new().unwrap();
    let o = peakon(&["run", "--scenario", "fig1b", "--out-dir", "."], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let events: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fig1b_events.json")).unwrap()).unwrap();
    assert_eq!(events[0]["groups"], serde_json::json!([[2, 3]]));
    assert_eq!(events[0]["momenta_after"], serde_json::json!([5.0, 4.0]));
}

#[test]
fn outputs_are_bit_identical_across_runs() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for d in [&a, &b] {
        assert_eq!(code(&peakon(&["run", "--scenario", "fig1a", "--out-dir", "."], d.path())), 0);
        assert_eq!(code(&peakon(&["study", "--scenario", "fig2", "--eps", "0.2,0.1", "--out-dir", "."], d.path())), 0);
    }
    for f in ["fig1a_trajectory.csv", "fig1a_energy.csv", "fig1a_events.json", "fig1a_report.json", "fig2_study.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn out_dir_falls_back_to_env() {
    let dir = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_peakon"))
        .args(["run", "--scenario", "fig1a", "--t-end", "0.05"])
        .current_dir(dir.path())
        .env("PEAKON_OUT_DIR", dir.path().join("env_out"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("env_out/fig1a_trajectory.csv").exists());
}

#[test]
fn unordered_positions_exit_with_invariant_code() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.toml"), FIG1A.replace("[-2.0, -1.0, 0.0]", "[0.0, 0.0, 1.0]")).unwrap();
    let o = peakon(&["run", "--scenario", "bad.toml"], dir.path());
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("strictly increasing"), "{}", stderr(&o));
    assert!(!dir.path().join("fig1a_trajectory.csv").exists());
}

#[test]
fn schema_errors_exit_with_code_2() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("typo.toml"), FIG1A.replace("merge_gap_tol", "merge_gap_tl")).unwrap();
    let o = peakon(&["run", "--scenario", "typo.toml"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("merge_gap_tl"));

    fs::write(dir.path().join("version.toml"), FIG1A.replace("schema_version = 1", "schema_version = 2")).unwrap();
    assert_eq!(code(&peakon(&["run", "--scenario", "version.toml"], dir.path())), 2);

    fs::write(dir.path().join("moll.toml"), format!("{FIG1A}\n[mollifier]\neps = 0.1\n")).unwrap();
    assert_eq!(code(&peakon(&["run", "--scenario", "moll.toml"], dir.path())), 2);

    assert_eq!(code(&peakon(&["run", "--scenario", "fig1a", "--eps", "0.1"], dir.path())), 2);
}

#[test]
fn oversized_step_is_an_integrator_failure() {
    let dir = TempDir::new().unwrap();
    let text = FIG1A.replace("dt = 1e-3", "dt = 0.5").replace("bisect_tol = 1e-13", "bisect_tol = 0.3");
    fs::write(dir.path().join("coarse.toml"), text).unwrap();
    let o = peakon(&["run", "--scenario", "coarse.toml"], dir.path());
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&peakon(&["run", "--scenario", "absent.toml"], dir.path())), 5);
}

#[test]
fn nonconservative_run_stops_with_diagnostic() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("nc.toml"), FIG1A.replace("mch_conservative", "mch_nonconservative")).unwrap();
    let o = peakon(&["run", "--scenario", "nc.toml", "--out-dir", "."], dir.path());
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("stopped at the first collision"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("fig1a_report.json")).unwrap()).unwrap();
    assert!(report["halted"]["t_event"].as_f64().unwrap() < 2.0);
}

#[test]
fn study_rows_shrink_with_eps() {
    let dir = TempDir::new().unwrap();
    let o = peakon(&["study", "--scenario", "fig2", "--eps", "0.2,0.1,0.05", "--out-dir", "."], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("fig2_study.csv")).unwrap();
    let rows: Vec<Vec<f64>> =
        csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[1][1] < w[0][1]));
}

#[test]
fn fig3_study_json() {
    let dir = TempDir::new().unwrap();
    let o = peakon(&["study", "--scenario", "fig3", "--eps", "0.2,0.1,0.05", "--format", "json", "--out-dir", "."], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("fig3_study.json")).unwrap()).unwrap();
    let d: Vec<f64> = r["sup_distances"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert!(d.windows(2).all(|w| w[1] <= w[0]), "{d:?}");
}

#[test]
fn single_peakon_study_is_trivial() {
    let dir = TempDir::new().unwrap();
    let text = "schema_version = 1\nname = \"one\"\nmomenta = [2.0]\npositions = [0.0]\neps = [0.2, 0.1]\n\n[sim]\nt_end = 1.0\n";
    fs::write(dir.path().join("one.toml"), text).unwrap();
    let o = peakon(&["study", "--scenario", "one.toml", "--format", "json", "--out-dir", "."], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("one_study.json")).unwrap()).unwrap();
    for v in r["sup_distances"].as_array().unwrap() {
        assert!(v.as_f64().unwrap() <= 1e-12);
    }
}

#[test]
fn check_suites_pass_and_write_report() {
    let dir = TempDir::new().unwrap();
    let o = peakon(&["check", "--suite", "identities,splitting-demo,ch-splitting", "--seed", "42", "--out-dir", "."], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("identities") && text.contains("3 of 3 suites passed"), "{text}");
    let r: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("check_report.json")).unwrap()).unwrap();
    assert_eq!(r["passed"], serde_json::json!(true));
}

#[test]
fn check_all_json() {
    let dir = TempDir::new().unwrap();
    let o = peakon(&["check", "--format", "json"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(r["suites"].as_array().unwrap().len(), 6);
}

#[test]
fn ch_scenario_keeps_hamiltonian() {
    let dir = TempDir::new().unwrap();
    let text = "schema_version = 1\nname = \"pair\"\nsystem = \"ch\"\nmomenta = [2.0, 1.0]\npositions = [0.0, 1.0]\n\n[sim]\nt_end = 1.0\nsample_every = 100\n";
    fs::write(dir.path().join("pair.toml"), text).unwrap();
    let o = peakon(&["run", "--scenario", "pair.toml", "--out-dir", "."], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("pair_trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x_1,x_2,p_1,p_2,H\n"));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("pair_report.json")).unwrap()).unwrap();
    assert!(r["max_hamiltonian_drift"].as_f64().unwrap() < 1e-10);
}
