//! Sampled trajectories with merge history and lineage.

use crate::dispersive::RegularizedField;
use crate::error::{PeakonError, Result};
use crate::integrate::{rk4_field, EventReport, MchField, SimConfig, VectorField};
use crate::kernel::energy;
use crate::mollifier::MollifierSpec;
use crate::state::PeakonState;
use crate::sticky::MergeEvent;

/// Which system produced a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Dynamics {
    /// Conservative system, continued through collisions by merging.
    Sticky,
    /// Non-conservative system, stopped at the first collision.
    NonConservative,
    Regularized(MollifierSpec),
}

/// A stored point of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub state: PeakonState,
    /// ln of the adjacent gaps; authoritative when gaps are below the
    /// resolution of the positions.
    pub log_gaps: Vec<f64>,
}

impl Sample {
    pub fn t(&self) -> f64 {
        self.state.t()
    }

    /// Smallest gap, recovered from the log-gaps.
    pub fn min_gap(&self) -> Option<f64> {
        self.log_gaps.iter().copied().reduce(f64::min).map(f64::exp)
    }
}

/// Stretch between merges with a fixed number of live peakons.
#[derive(Debug, Clone, PartialEq)]
pub struct Epoch {
    /// For each original peakon, the index of the live peakon carrying it.
    pub owner: Vec<usize>,
    pub samples: Vec<Sample>,
}

impl Epoch {
    pub fn start(&self) -> f64 {
        self.samples[0].t()
    }

    /// Original indices carried by each live peakon.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let live = self.samples[0].state.len();
        let mut m = vec![Vec::new(); live];
        for (orig, &o) in self.owner.iter().enumerate() {
            m[o].push(orig);
        }
        m
    }

    /// Positions indexed by original peakon.
    pub fn resolve(&self, sample: &Sample) -> Vec<f64> {
        self.owner.iter().map(|&o| sample.state.positions()[o]).collect()
    }
}

/// Time-resolved solution plus its collision history.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dynamics: Dynamics,
    /// Integration step actually used (after any refinement).
    pub dt: f64,
    pub config: SimConfig,
    pub epochs: Vec<Epoch>,
    pub events: Vec<MergeEvent>,
    /// Set when a run was stopped at a collision it cannot continue through.
    pub halted: Option<EventReport>,
}

impl Trajectory {
    pub fn initial(&self) -> &PeakonState {
        &self.epochs[0].samples[0].state
    }

    pub fn n_original(&self) -> usize {
        self.epochs[0].owner.len()
    }

    pub fn samples(&self) -> impl Iterator<Item = &Sample> {
        self.epochs.iter().flat_map(|e| e.samples.iter())
    }

    /// (epoch, sample) pairs in time order.
    pub fn indexed_samples(&self) -> impl Iterator<Item = (&Epoch, &Sample)> {
        self.epochs.iter().flat_map(|e| e.samples.iter().map(move |s| (e, s)))
    }

    pub fn final_state(&self) -> &PeakonState {
        &self.epochs.last().expect("non-empty").samples.last().expect("non-empty").state
    }

    pub fn t_end(&self) -> f64 {
        self.final_state().t()
    }

    /// (t, positions by original index, energy) for every sample.
    pub fn resolved_rows(&self) -> Vec<(f64, Vec<f64>, f64)> {
        self.indexed_samples().map(|(e, s)| (s.t(), e.resolve(s), energy(&s.state))).collect()
    }

    /// Index of the epoch in force at time `t` (the later one at an event time).
    pub fn epoch_index_at(&self, t: f64) -> usize {
        self.epochs.iter().rposition(|e| e.start() <= t).unwrap_or(0)
    }

    /// State at an arbitrary time, re-integrated from the preceding sample.
    pub fn state_at(&self, t: f64) -> Result<PeakonState> {
        let t0 = self.initial().t();
        if !(t >= t0 && t <= self.t_end()) {
            return Err(PeakonError::InvalidConfig(format!("t = {t} outside [{t0}, {}]", self.t_end())));
        }
        let e = &self.epochs[self.epoch_index_at(t)];
        let i = e.samples.partition_point(|s| s.t() <= t).max(1) - 1;
        let from = &e.samples[i];
        if from.t() == t {
            return Ok(from.state.clone());
        }
        match self.dynamics {
            Dynamics::Sticky => self.reintegrate(&MchField::conservative(&from.state), from, t),
            Dynamics::NonConservative => self.reintegrate(&MchField::nonconservative(&from.state), from, t),
            Dynamics::Regularized(spec) => self.reintegrate(&RegularizedField::new(&from.state, spec), from, t),
        }
    }

    fn reintegrate<F: VectorField>(&self, field: &F, from: &Sample, t: f64) -> Result<PeakonState> {
        let span = t - from.t();
        let n = (span / self.dt).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let mut y = field.encode_sample(from);
        for _ in 0..n {
            y = rk4_field(field, &y, h);
        }
        Ok(field.decode(t, &y))
    }

    /// Positions by original index at time `t`.
    pub fn resolved_at(&self, t: f64) -> Result<Vec<f64>> {
        let e = &self.epochs[self.epoch_index_at(t)];
        let s = self.state_at(t)?;
        Ok(e.owner.iter().map(|&o| s.positions()[o]).collect())
    }
}
