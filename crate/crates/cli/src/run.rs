//! `run` and `study` subcommands.

use std::path::{Path, PathBuf};

use peakon_core::verify::{energy_audit, max_sample_speed, EnergyAudit};
use peakon_core::{
    ch_hamiltonian, ch_rhs, convergence_study_with_probe, evolve_nonconservative, evolve_regularized,
    evolve_sticky, ConvergenceReport, EventReport, MollifierSpec, PeakonState, SimConfig, Trajectory,
};
use serde::Serialize;

use crate::error::{CliError, Result};
use crate::output::{prepare_dir, to_json, write_file, Format, Table};
use crate::scenario::{Output, Scenario, StudyFile, System};

/// Command-line overrides applied on top of a scenario's `[sim]` table.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
    pub eps: Option<Vec<f64>>,
}

impl Overrides {
    fn apply(&self, mut sim: SimConfig) -> SimConfig {
        if let Some(dt) = self.dt {
            sim.dt = dt;
        }
        if let Some(t) = self.t_end {
            sim.t_end = t;
        }
        sim
    }
}

#[derive(Debug, Serialize)]
struct EventRecord {
    t: f64,
    /// 1-based original indices of each merged group.
    groups: Vec<Vec<usize>>,
    momenta_before: Vec<f64>,
    momenta_after: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct RunReport<'a> {
    name: &'a str,
    system: &'a str,
    peakons: usize,
    m0: f64,
    dt: f64,
    sim: SimConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    mollifier: Option<MollifierSpec>,
    t_end: f64,
    samples: usize,
    events: usize,
    energy: EnergyAudit,
    max_sample_speed: f64,
    speed_bound: f64,
    /// Set when a non-conservative run reached a collision and stopped.
    halted: Option<EventReport>,
}

#[derive(Debug, Serialize)]
struct ChReport<'a> {
    name: &'a str,
    system: &'a str,
    peakons: usize,
    dt: f64,
    t_end: f64,
    samples: usize,
    hamiltonian: f64,
    max_hamiltonian_drift: f64,
}

fn system_name(s: System) -> &'static str {
    match s {
        System::MchConservative => "mch_conservative",
        System::MchNonconservative => "mch_nonconservative",
        System::MchRegularized => "mch_regularized",
        System::Ch => "ch",
    }
}

fn x_columns(n: usize, prefix: &str) -> impl Iterator<Item = String> + '_ {
    (1..=n).map(move |i| format!("{prefix}_{i}"))
}

/// Runs a scenario and writes the requested artifacts; returns their paths.
pub fn run(scenario: &Scenario, overrides: &Overrides, out_dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    let sim = overrides.apply(scenario.sim);
    let mut mollifier = scenario.mollifier;
    if let Some(eps) = &overrides.eps {
        match (&mut mollifier, eps.as_slice()) {
            (Some(m), [e]) => m.eps = *e,
            (Some(_), _) => return Err(CliError::Schema("run takes a single --eps value".into())),
            (None, _) => return Err(CliError::Schema("--eps only applies to mch_regularized scenarios".into())),
        }
    }
    let initial = scenario.initial_state()?;
    if scenario.system == System::Ch {
        sim.validate(initial.positions().iter().fold(0.0, |m: f64, x| m.max(x.abs())))?;
        return run_ch(scenario, &initial, &sim, out_dir, format);
    }
    let traj = match scenario.system {
        System::MchConservative => evolve_sticky(&initial, &sim)?,
        System::MchNonconservative => evolve_nonconservative(&initial, &sim)?,
        System::MchRegularized => evolve_regularized(&initial, mollifier.expect("checked at parse"), &sim)?,
        System::Ch => unreachable!(),
    };
    if let Some(h) = &traj.halted {
        eprintln!(
            "warning: non-conservative run stopped at the first collision, t = {:.16e}; no continuation is defined",
            h.t_event
        );
    }
    write_trajectory(scenario, &traj, mollifier, out_dir, format)
}

fn write_trajectory(
    scenario: &Scenario,
    traj: &Trajectory,
    mollifier: Option<MollifierSpec>,
    out_dir: &Path,
    format: Format,
) -> Result<Vec<PathBuf>> {
    prepare_dir(out_dir)?;
    let name = &scenario.name;
    let n = traj.n_original();
    let rows = traj.resolved_rows();
    let mut written = Vec::new();

    if scenario.wants(Output::TrajectoryCsv) {
        let mut t = Table::new(std::iter::once("t".to_string()).chain(x_columns(n, "x")).chain(["H".into()]).collect());
        for (time, xs, h) in &rows {
            t.push(std::iter::once(*time).chain(xs.iter().copied()).chain([*h]).collect());
        }
        written.push(write_file(out_dir, &format!("{name}_trajectory.{}", format.extension()), &t.render(format)?)?);
    }
    let audit = energy_audit(traj);
    if scenario.wants(Output::EnergyCsv) {
        let h0 = audit.initial;
        let scale = if h0 != 0.0 { h0.abs() } else { 1.0 };
        let mut t = Table::new(vec!["t".into(), "H".into(), "rel_drift".into()]);
        for (time, _, h) in &rows {
            t.push(vec![*time, *h, (h - h0) / scale]);
        }
        written.push(write_file(out_dir, &format!("{name}_energy.{}", format.extension()), &t.render(format)?)?);
    }
    if scenario.wants(Output::EventsJson) {
        let events: Vec<EventRecord> = traj
            .events
            .iter()
            .map(|e| EventRecord {
                t: e.t,
                groups: e
                    .original_groups
                    .iter()
                    .filter(|g| g.len() > 1)
                    .map(|g| g.iter().map(|i| i + 1).collect())
                    .collect(),
                momenta_before: e.pre_state.momenta().to_vec(),
                momenta_after: e.post_state.momenta().to_vec(),
            })
            .collect();
        written.push(write_file(out_dir, &format!("{name}_events.json"), &to_json(&events)?)?);
    }
    if scenario.wants(Output::ReportJson) {
        let initial = traj.initial();
        let report = RunReport {
            name,
            system: system_name(scenario.system),
            peakons: n,
            m0: initial.m0(),
            dt: traj.dt,
            sim: traj.config,
            mollifier,
            t_end: traj.t_end(),
            samples: rows.len(),
            events: traj.events.len(),
            energy: audit,
            max_sample_speed: max_sample_speed(traj),
            speed_bound: initial.speed_bound(),
            halted: traj.halted.clone(),
        };
        written.push(write_file(out_dir, &format!("{name}_report.json"), &to_json(&report)?)?);
    }
    Ok(written)
}

/// Camassa-Holm peakons: plain RK4 on (x, p), no merging. Columns are
/// t, x_1..x_N, p_1..p_N, H.
fn run_ch(scenario: &Scenario, initial: &PeakonState, sim: &SimConfig, out_dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    let n = initial.len();
    let t0 = initial.t();
    let steps = ((sim.t_end - t0) / sim.dt).round().max(0.0) as u64;
    let mut y: Vec<f64> = initial.positions().iter().chain(initial.momenta()).copied().collect();
    let h0 = ch_hamiltonian(initial.positions(), initial.momenta());
    let mut rows = vec![(t0, y.clone(), h0)];
    let mut drift = 0.0f64;
    for k in 1..=steps {
        y = peakon_core::integrate::rk4_vec(
            |s, out| {
                let (dx, dp) = ch_rhs(&s[..n], &s[n..]);
                out[..n].copy_from_slice(&dx);
                out[n..].copy_from_slice(&dp);
            },
            &y,
            sim.dt,
        );
        if y.iter().any(|v| !v.is_finite()) {
            return Err(peakon_core::PeakonError::StepSize(format!("non-finite state at step {k}")).into());
        }
        let h = ch_hamiltonian(&y[..n], &y[n..]);
        drift = drift.max((h - h0).abs());
        if k % sim.sample_every as u64 == 0 || k == steps {
            rows.push((t0 + k as f64 * sim.dt, y.clone(), h));
        }
    }

    prepare_dir(out_dir)?;
    let name = &scenario.name;
    let mut written = Vec::new();
    if scenario.wants(Output::TrajectoryCsv) {
        let cols = std::iter::once("t".to_string()).chain(x_columns(n, "x")).chain(x_columns(n, "p")).chain(["H".into()]);
        let mut t = Table::new(cols.collect());
        for (time, y, h) in &rows {
            t.push(std::iter::once(*time).chain(y.iter().copied()).chain([*h]).collect());
        }
        written.push(write_file(out_dir, &format!("{name}_trajectory.{}", format.extension()), &t.render(format)?)?);
    }
    if scenario.wants(Output::EnergyCsv) {
        let scale = if h0 != 0.0 { h0.abs() } else { 1.0 };
        let mut t = Table::new(vec!["t".into(), "H".into(), "rel_drift".into()]);
        for (time, _, h) in &rows {
            t.push(vec![*time, *h, (h - h0) / scale]);
        }
        written.push(write_file(out_dir, &format!("{name}_energy.{}", format.extension()), &t.render(format)?)?);
    }
    if scenario.wants(Output::EventsJson) {
        written.push(write_file(out_dir, &format!("{name}_events.json"), "[]\n")?);
    }
    if scenario.wants(Output::ReportJson) {
        let report = ChReport {
            name,
            system: "ch",
            peakons: n,
            dt: sim.dt,
            t_end: rows.last().expect("initial row").0,
            samples: rows.len(),
            hamiltonian: h0,
            max_hamiltonian_drift: drift,
        };
        written.push(write_file(out_dir, &format!("{name}_report.json"), &to_json(&report)?)?);
    }
    Ok(written)
}

/// Runs a convergence study and writes `<name>_study.{csv,json}`.
pub fn study(file: &StudyFile, overrides: &Overrides, out_dir: &Path, format: Format) -> Result<(ConvergenceReport, PathBuf)> {
    let sim = overrides.apply(file.sim);
    let eps = overrides.eps.clone().unwrap_or_else(|| file.eps.clone());
    let initial = file.initial_state()?;
    let report = convergence_study_with_probe(&initial, &eps, file.family, &sim, file.probe_offset)?;
    prepare_dir(out_dir)?;
    let body = match format {
        Format::Json => to_json(&report)?,
        Format::Csv => study_table(&report).to_csv(),
    };
    let path = write_file(out_dir, &format!("{}_study.{}", file.name, format.extension()), &body)?;
    Ok((report, path))
}

/// One row per ε. Probe columns are named by the 1-based pair that merged.
pub fn study_table(r: &ConvergenceReport) -> Table {
    let mut cols: Vec<String> =
        ["eps", "sup_distance", "min_gap", "min_log_gap", "matched_samples"].map(String::from).to_vec();
    for &(a, b) in &r.probe_pairs {
        cols.push(format!("scaled_gap_{}_{}", a + 1, b + 1));
        cols.push(format!("log_scaled_gap_{}_{}", a + 1, b + 1));
    }
    let mut t = Table::new(cols);
    for i in 0..r.eps_values.len() {
        let mut row = vec![r.eps_values[i], r.sup_distances[i], r.min_gaps[i], r.min_log_gaps[i], r.matched_samples[i] as f64];
        for (s, l) in r.scaled_gaps[i].iter().zip(&r.log_scaled_gaps[i]) {
            row.push(*s);
            row.push(*l);
        }
        t.push(row);
    }
    t
}
