//! Verification suites behind `peakon check`.

use std::collections::BTreeMap;

use clap::ValueEnum;
use peakon_core::verify::{
    ch_splitting_demo, energy_audit, identity_sweep, random_state, regularized_field_quadrature, splitting_demo,
    weak_residual, QuadratureConfig, TestFunction,
};
use peakon_core::{
    evolve_sticky, midpoint_property_residual, regularized_field, MollifierFamily, MollifierSpec, PeakonState,
    SimConfig, StepFunction,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identities,
    Energy,
    Residual,
    SplittingDemo,
    ChSplitting,
    Mollifier,
    All,
}

impl Suite {
    const EACH: [Suite; 6] =
        [Suite::Identities, Suite::Energy, Suite::Residual, Suite::SplittingDemo, Suite::ChSplitting, Suite::Mollifier];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Identities => "identities",
            Suite::Energy => "energy",
            Suite::Residual => "residual",
            Suite::SplittingDemo => "splitting-demo",
            Suite::ChSplitting => "ch-splitting",
            Suite::Mollifier => "mollifier",
            Suite::All => "all",
        }
    }
}

pub const DEFAULT_SEED: u64 = 42;

const IDENTITY_TOL: f64 = 1e-12;
const ENERGY_TOL: f64 = 1e-6;
const RESIDUAL_TOL: f64 = 1e-4;
const SPLIT_DISTANCE: f64 = 1e-3;
const MIDPOINT_TOL: f64 = 1e-15;
const FIELD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub suite: &'static str,
    pub passed: bool,
    pub detail: String,
    pub metrics: BTreeMap<&'static str, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
}

impl CheckReport {
    pub fn failures(&self) -> usize {
        self.suites.iter().filter(|s| !s.passed).count()
    }

    pub fn human(&self) -> String {
        let mut s = String::new();
        for r in &self.suites {
            s.push_str(&format!("{:<15} {}  {}\n", r.suite, if r.passed { "PASS" } else { "FAIL" }, r.detail));
        }
        s.push_str(&format!("{} of {} suites passed\n", self.suites.len() - self.failures(), self.suites.len()));
        s
    }
}

pub fn run_suites(selected: &[Suite], seed: u64) -> Result<CheckReport> {
    let mut list: Vec<Suite> = Vec::new();
    for &s in selected {
        let expanded: &[Suite] = if s == Suite::All { &Suite::EACH } else { std::slice::from_ref(&s) };
        for &e in expanded {
            if !list.contains(&e) {
                list.push(e);
            }
        }
    }
    list.sort_by_key(|s| Suite::EACH.iter().position(|e| e == s));
    let suites = list
        .into_iter()
        .map(|s| match s {
            Suite::Identities => identities(seed),
            Suite::Energy => energy(),
            Suite::Residual => residual(),
            Suite::SplittingDemo => splitting(),
            Suite::ChSplitting => ch_splitting(seed),
            Suite::Mollifier => mollifier(seed),
            Suite::All => unreachable!(),
        })
        .collect::<Result<Vec<_>>>()?;
    let passed = suites.iter().all(|s| s.passed);
    Ok(CheckReport { seed, passed, suites })
}

fn result(suite: Suite, passed: bool, detail: String, metrics: &[(&'static str, f64)]) -> SuiteResult {
    SuiteResult { suite: suite.name(), passed, detail, metrics: metrics.iter().copied().collect() }
}

fn three_peakon_cases() -> Vec<(&'static str, PeakonState)> {
    vec![
        ("fig1a", PeakonState::new(vec![-2.0, -1.0, 0.0], vec![15.0, 2.0, 3.0]).expect("valid")),
        ("fig1b", PeakonState::new(vec![-1.0, 0.0, 1.0], vec![5.0, 5.0, -1.0]).expect("valid")),
    ]
}

fn identities(seed: u64) -> Result<SuiteResult> {
    let s = identity_sweep(seed, 1000)?;
    let pass = s.alternating <= IDENTITY_TOL && s.energy <= IDENTITY_TOL && s.rhs_mismatch <= IDENTITY_TOL;
    Ok(result(
        Suite::Identities,
        pass,
        format!(
            "1000 random states: alternating {:.1e}, energy {:.1e}, speeds {:.1e}",
            s.alternating, s.energy, s.rhs_mismatch
        ),
        &[("alternating", s.alternating), ("energy", s.energy), ("rhs_mismatch", s.rhs_mismatch)],
    ))
}

fn energy() -> Result<SuiteResult> {
    let mut worst_drift = 0.0f64;
    let mut worst_jump = 0.0f64;
    let mut events = 0;
    for (_, s) in three_peakon_cases() {
        let tr = evolve_sticky(&s, &SimConfig::default().with_t_end(2.0))?;
        let a = energy_audit(&tr);
        worst_drift = worst_drift.max(a.max_relative_drift);
        worst_jump = a.jumps.iter().map(|j| j.jump / a.initial.abs()).fold(worst_jump, f64::max);
        events += tr.events.len();
    }
    Ok(result(
        Suite::Energy,
        worst_drift <= ENERGY_TOL && worst_jump <= ENERGY_TOL && events > 0,
        format!("{events} merges: max drift {worst_drift:.1e}, max jump {worst_jump:.1e}"),
        &[("max_relative_drift", worst_drift), ("max_relative_jump", worst_jump)],
    ))
}

fn residual() -> Result<SuiteResult> {
    let (_, s) = three_peakon_cases().swap_remove(0);
    let tr = evolve_sticky(&s, &SimConfig::default().with_t_end(2.0))?;
    let mut worst = 0.0f64;
    for (c, r, t) in [(-1.0, 3.0, 1.0), (1.0, 4.0, 1.5), (3.0, 5.0, 2.0)] {
        let phi = TestFunction::new(c, r, t, 6)?;
        worst = worst.max(weak_residual(&tr, &phi, &QuadratureConfig::default())?.value);
    }
    Ok(result(
        Suite::Residual,
        worst <= RESIDUAL_TOL,
        format!("3 test functions across the merges: max |residual| {worst:.1e}"),
        &[("max_residual", worst)],
    ))
}

fn splitting() -> Result<SuiteResult> {
    let rep = splitting_demo(&SimConfig::default().with_t_end(2.0))?;
    let r0 = rep.rows[0];
    let later = rep.rows.iter().filter(|r| r.t >= 0.5).map(|r| r.field_distance).fold(f64::INFINITY, f64::min);
    let e_err = rep
        .rows
        .iter()
        .map(|r| (r.energy_single - 8.0).abs().max((r.energy_split - 8.0).abs()))
        .fold(0.0, f64::max);
    let pass = r0.field_distance == 0.0 && later >= SPLIT_DISTANCE && e_err <= ENERGY_TOL;
    Ok(result(
        Suite::SplittingDemo,
        pass,
        format!("same data at t=0, field distance ≥ {later:.3e} from t=0.5, energy error {e_err:.1e}"),
        &[("initial_distance", r0.field_distance), ("min_later_distance", later), ("energy_error", e_err)],
    ))
}

fn ch_splitting(seed: u64) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fails = 0;
    let (mut sep, mut dev, mut drift) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let c: f64 = rng.random_range(-5.0..=5.0);
        let p1: f64 = rng.random_range(-5.0..=5.0);
        let x0: f64 = rng.random_range(-3.0..=3.0);
        let r = ch_splitting_demo(p1, c - p1, x0, 2.0, 1e-3);
        fails += usize::from(!r.passed);
        sep = sep.max(r.separation);
        dev = dev.max(r.exact_deviation);
        drift = drift.max(r.hamiltonian_drift);
    }
    Ok(result(
        Suite::ChSplitting,
        fails == 0,
        format!("20 split pairs stay together: max separation {sep:.1e}, max |x - ct - x0| {dev:.1e}"),
        &[("max_separation", sep), ("max_exact_deviation", dev), ("max_hamiltonian_drift", drift)],
    ))
}

fn mollifier(seed: u64) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mid = 0.0f64;
    for fam in MollifierFamily::ALL {
        for _ in 0..200 {
            let spec = MollifierSpec::new(fam, rng.random_range(1e-3..2.0))?;
            let f = StepFunction { left: rng.random_range(-10.0..10.0), right: rng.random_range(-10.0..10.0) };
            mid = mid.max(midpoint_property_residual(&spec, f));
        }
    }
    let mut field = 0.0f64;
    for i in 0..300 {
        let s = random_state(&mut rng);
        let spec = MollifierSpec::new(MollifierFamily::ALL[i % 3], rng.random_range(0.01..1.0))?;
        let k = rng.random_range(0..s.len());
        let x = s.positions()[k] + rng.random_range(-1.0..1.0) * spec.eps;
        field = field.max((regularized_field(&s, &spec, x)? - regularized_field_quadrature(&s, &spec, x)?).abs());
    }
    Ok(result(
        Suite::Mollifier,
        mid <= MIDPOINT_TOL && field <= FIELD_TOL,
        format!("midpoint residual {mid:.1e}, closed form vs quadrature {field:.1e}"),
        &[("midpoint_residual", mid), ("field_vs_quadrature", field)],
    ))
}
