//! Mollified (collision-free) evolution and its comparison with sticky runs.
//!
//! The regularized system is integrated in the chart (x_1, ln g_1, …,
//! ln g_{N-1}) with g_k = x_{k+1} - x_k. After a sticky collision the
//! regularized gaps shrink like e^{-ct/ε}, far below the spacing of
//! representable positions, so only the log-gaps keep them resolved.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::constants_direct;
use crate::error::{PeakonError, Result};
use crate::integrate::{evolve_segment, max_abs, SimConfig, TimeGrid, VectorField};
use crate::mollifier::{MollifierFamily, MollifierSpec};
use crate::state::PeakonState;
use crate::sticky::evolve_sticky;
use crate::trajectory::{Dynamics, Epoch, Sample, Trajectory};

/// Time after the first sticky collision at which scaled gaps are probed.
pub const DEFAULT_PROBE_OFFSET: f64 = 0.5;

/// Regularized velocity field in anchor + log-gap coordinates.
#[derive(Debug, Clone)]
pub struct RegularizedField {
    momenta: Vec<f64>,
    m0: f64,
    spec: MollifierSpec,
}

impl RegularizedField {
    pub fn new(state: &PeakonState, spec: MollifierSpec) -> Self {
        Self { momenta: state.momenta().to_vec(), m0: state.m0(), spec }
    }

    /// Offsets r_k - r_m as sums of the gaps between them.
    fn offsets(gaps: &[f64]) -> Vec<Vec<f64>> {
        let n = gaps.len() + 1;
        let mut off = vec![vec![0.0; n]; n];
        for k in 0..n {
            let mut s = 0.0;
            for m in (0..k).rev() {
                s += gaps[m];
                off[k][m] = s;
                off[m][k] = -s;
            }
        }
        off
    }

    fn rel_positions(gaps: &[f64]) -> Vec<f64> {
        let mut r = Vec::with_capacity(gaps.len() + 1);
        r.push(0.0);
        let mut acc = 0.0;
        for g in gaps {
            acc += g;
            r.push(acc);
        }
        r
    }
}

impl VectorField for RegularizedField {
    fn encode(&self, state: &PeakonState) -> Vec<f64> {
        let mut y = vec![state.positions()[0]];
        y.extend(state.gaps().into_iter().map(f64::ln));
        y
    }

    fn encode_sample(&self, sample: &Sample) -> Vec<f64> {
        let mut y = vec![sample.state.positions()[0]];
        y.extend_from_slice(&sample.log_gaps);
        y
    }

    fn decode(&self, t: f64, y: &[f64]) -> PeakonState {
        let gaps: Vec<f64> = y[1..].iter().map(|l| l.exp()).collect();
        let x: Vec<f64> = Self::rel_positions(&gaps).into_iter().map(|r| y[0] + r).collect();
        PeakonState::from_parts_unchecked(t, x, self.momenta.clone()).with_m0(self.m0)
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        let n = self.momenta.len();
        let gaps: Vec<f64> = y[1..].iter().map(|l| l.exp()).collect();
        let rel = Self::rel_positions(&gaps);
        let off = Self::offsets(&gaps);
        let mut c = vec![0.0; n + 1];
        constants_direct(&rel, &self.momenta, &mut c);
        // interval m (1..n-1) spans (r_{m-1}, r_m) and carries c[m]
        let mut v0 = 0.0;
        for m in 1..n {
            v0 += c[m] * self.spec.mass(off[0][m], gaps[m - 1]);
        }
        out[0] = v0;
        for k in 0..n - 1 {
            let g = gaps[k];
            let mut s = 0.0;
            for m in 1..n {
                s += c[m] * (self.spec.mean_density(off[k][m - 1], g) - self.spec.mean_density(off[k][m], g));
            }
            out[k + 1] = s;
        }
    }

    fn gaps(&self, y: &[f64]) -> Vec<f64> {
        y[1..].iter().map(|l| l.exp()).collect()
    }

    fn log_gaps(&self, y: &[f64]) -> Vec<f64> {
        y[1..].to_vec()
    }

    fn gap_rates(&self, y: &[f64], dy: &[f64]) -> Vec<f64> {
        y[1..].iter().zip(&dy[1..]).map(|(l, d)| l.exp() * d).collect()
    }

    fn can_collide(&self) -> bool {
        false
    }
}

/// Integer refinement of `dt` so that each step is at most ε/(10·M0²).
pub fn regularized_substeps(dt: f64, spec: &MollifierSpec, m0: f64) -> usize {
    let cap = spec.eps / (10.0 * (m0 * m0).max(1e-300));
    (dt / cap).ceil().max(1.0) as usize
}

/// RK4 evolution of the regularized system. The output cadence of `config`
/// is kept; the integration step is refined as needed for the given ε.
pub fn evolve_regularized(initial: &PeakonState, spec: MollifierSpec, config: &SimConfig) -> Result<Trajectory> {
    spec.validate()?;
    initial.require_ordered()?;
    config.validate(max_abs(initial.positions()))?;
    let field = RegularizedField::new(initial, spec);
    let m = regularized_substeps(config.dt, &spec, initial.m0());
    let grid = TimeGrid::new(initial.t(), config).with_substeps(m);
    let seg = evolve_segment(&field, &field.encode(initial), initial.t(), config, &grid)?;
    if let Some(bad) = seg.samples.iter().find(|s| s.log_gaps.iter().any(|l| !l.is_finite())) {
        return Err(PeakonError::OrderingLost { t: bad.t() });
    }
    Ok(Trajectory {
        dynamics: Dynamics::Regularized(spec),
        dt: grid.fine_dt(),
        config: *config,
        epochs: vec![Epoch { owner: (0..initial.len()).collect(), samples: seg.samples }],
        events: Vec::new(),
        halted: None,
    })
}

/// Regularized-vs-sticky comparison over a decreasing list of widths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub family: MollifierFamily,
    pub eps_values: Vec<f64>,
    /// Per ε: sup over matched samples of max_i |x_i^ε - x_i^sticky|.
    pub sup_distances: Vec<f64>,
    /// Per ε: smallest regularized gap seen at any sample (may underflow to 0
    /// for very small ε; see `min_log_gaps`).
    pub min_gaps: Vec<f64>,
    pub min_log_gaps: Vec<f64>,
    /// First sticky collision time, if any.
    pub first_collision: Option<f64>,
    /// Sample time at which scaled gaps were taken.
    pub probe_time: Option<f64>,
    /// Pairs (original indices) merged at the first collision.
    pub probe_pairs: Vec<(usize, usize)>,
    /// Per ε, per probe pair: gap/ε at `probe_time`.
    pub scaled_gaps: Vec<Vec<f64>>,
    /// Same as `scaled_gaps` but as ln(gap/ε), immune to underflow.
    pub log_scaled_gaps: Vec<Vec<f64>>,
    /// Number of sample times compared per ε.
    pub matched_samples: Vec<usize>,
}

/// Runs the sticky reference once and one regularized run per ε (in
/// parallel) and compares them on their common sample times.
pub fn convergence_study(
    initial: &PeakonState,
    eps_list: &[f64],
    family: MollifierFamily,
    config: &SimConfig,
) -> Result<ConvergenceReport> {
    convergence_study_with_probe(initial, eps_list, family, config, DEFAULT_PROBE_OFFSET)
}

pub fn convergence_study_with_probe(
    initial: &PeakonState,
    eps_list: &[f64],
    family: MollifierFamily,
    config: &SimConfig,
    probe_offset: f64,
) -> Result<ConvergenceReport> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(PeakonError::InvalidConfig("eps list must be non-empty and strictly decreasing".into()));
    }
    let specs = eps_list.iter().map(|&e| MollifierSpec::new(family, e)).collect::<Result<Vec<_>>>()?;
    let sticky = evolve_sticky(initial, config)?;
    let runs = specs
        .par_iter()
        .map(|spec| evolve_regularized(initial, *spec, config))
        .collect::<Result<Vec<_>>>()?;

    let reference = sticky.resolved_rows();
    let first_collision = sticky.events.first().map(|e| e.t);
    let probe_pairs: Vec<(usize, usize)> = sticky.events.first().map(|e| e.report.pairs.clone()).unwrap_or_default();
    let probe_time = first_collision.and_then(|t1| {
        runs[0].samples().map(|s| s.t()).find(|&t| t >= t1 + probe_offset - 1e-12)
    });

    let mut report = ConvergenceReport {
        family,
        eps_values: eps_list.to_vec(),
        sup_distances: Vec::new(),
        min_gaps: Vec::new(),
        min_log_gaps: Vec::new(),
        first_collision,
        probe_time,
        probe_pairs: probe_pairs.clone(),
        scaled_gaps: Vec::new(),
        log_scaled_gaps: Vec::new(),
        matched_samples: Vec::new(),
    };
    for (run, spec) in runs.iter().zip(&specs) {
        let mut sup = 0.0f64;
        let mut matched = 0;
        let mut j = 0;
        for s in run.samples() {
            while j < reference.len() && reference[j].0 < s.t() - 1e-9 {
                j += 1;
            }
            if j < reference.len() && (reference[j].0 - s.t()).abs() <= 1e-9 {
                matched += 1;
                for (a, b) in s.state.positions().iter().zip(&reference[j].1) {
                    sup = sup.max((a - b).abs());
                }
            }
        }
        let min_log = run.samples().flat_map(|s| s.log_gaps.iter().copied()).fold(f64::INFINITY, f64::min);
        let mut scaled = Vec::new();
        let mut log_scaled = Vec::new();
        if let Some(tp) = probe_time {
            let s = run.samples().find(|s| s.t() == tp).expect("probe time is a sample time");
            for &(k, _) in &probe_pairs {
                let l = s.log_gaps[k] - spec.eps.ln();
                log_scaled.push(l);
                scaled.push(l.exp());
            }
        }
        report.sup_distances.push(sup);
        report.matched_samples.push(matched);
        report.min_log_gaps.push(min_log);
        report.min_gaps.push(min_log.exp());
        report.scaled_gaps.push(scaled);
        report.log_scaled_gaps.push(log_scaled);
    }
    Ok(report)
}
