//! Fixed-step RK4 with collision detection and bisection localization.
//!
//! Runs are laid on a global time grid `origin + n·dt`; after an event the
//! next step is shortened so that sampling stays on the grid.

use serde::{Deserialize, Serialize};

use crate::dynamics::conservative_velocities;
use crate::error::{PeakonError, Result};
use crate::state::PeakonState;
use crate::trajectory::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub merge_gap_tol: f64,
    pub bisect_tol: f64,
    pub sample_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { dt: 1e-3, t_end: 1.0, merge_gap_tol: 1e-9, bisect_tol: 1e-13, sample_every: 1 }
    }
}

impl SimConfig {
    pub fn with_t_end(mut self, t_end: f64) -> Self {
        self.t_end = t_end;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_sample_every(mut self, n: usize) -> Self {
        self.sample_every = n;
        self
    }

    /// Checks the config against the largest |position| of the run.
    pub fn validate(&self, position_scale: f64) -> Result<()> {
        let bad = |m: String| Err(PeakonError::InvalidConfig(m));
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !self.t_end.is_finite() || self.dt > self.t_end {
            return bad(format!("dt = {} must not exceed t_end = {}", self.dt, self.t_end));
        }
        let floor = 1e2 * f64::EPSILON * position_scale.abs().max(1.0);
        if !(self.merge_gap_tol >= floor) {
            return bad(format!("merge_gap_tol = {:e} is below {:e}", self.merge_gap_tol, floor));
        }
        if !(self.bisect_tol > 0.0 && self.bisect_tol < self.dt) {
            return bad(format!("bisect_tol = {:e} must lie in (0, dt)", self.bisect_tol));
        }
        if self.sample_every == 0 {
            return bad("sample_every must be at least 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    OrderingBreach,
    GapBelowTol,
}

/// A localized collision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventReport {
    pub kind: EventKind,
    pub t_event: f64,
    /// Adjacent index pairs (k, k+1) with gap ≤ merge_gap_tol at `t_event`.
    pub pairs: Vec<(usize, usize)>,
    /// d(gap)/dt of each reported pair, evaluated at the end of the bracket.
    pub closing_rates: Vec<f64>,
}

/// A vector field in some coordinate chart of the peakon configuration.
pub trait VectorField {
    fn encode(&self, state: &PeakonState) -> Vec<f64>;

    /// Re-entry point from a stored sample.
    fn encode_sample(&self, sample: &Sample) -> Vec<f64> {
        self.encode(&sample.state)
    }

    fn decode(&self, t: f64, y: &[f64]) -> PeakonState;

    fn eval(&self, y: &[f64], out: &mut [f64]);

    /// Adjacent gaps x_{k+1} - x_k.
    fn gaps(&self, y: &[f64]) -> Vec<f64>;

    fn log_gaps(&self, y: &[f64]) -> Vec<f64> {
        self.gaps(y).into_iter().map(f64::ln).collect()
    }

    /// Time derivatives of the gaps.
    fn gap_rates(&self, y: &[f64], dy: &[f64]) -> Vec<f64>;

    /// False for fields whose exact flow never collides.
    fn can_collide(&self) -> bool {
        true
    }
}

/// Conservative or non-conservative mCH field in position coordinates.
///
/// Uses the index-ordered interval sums, which stay analytic when an RK4
/// stage overshoots a collision.
#[derive(Debug, Clone)]
pub struct MchField {
    momenta: Vec<f64>,
    m0: f64,
    self_term: bool,
}

impl MchField {
    pub fn conservative(state: &PeakonState) -> Self {
        Self { momenta: state.momenta().to_vec(), m0: state.m0(), self_term: false }
    }

    pub fn nonconservative(state: &PeakonState) -> Self {
        Self { momenta: state.momenta().to_vec(), m0: state.m0(), self_term: true }
    }
}

impl VectorField for MchField {
    fn encode(&self, state: &PeakonState) -> Vec<f64> {
        state.positions().to_vec()
    }

    fn decode(&self, t: f64, y: &[f64]) -> PeakonState {
        PeakonState::from_parts_unchecked(t, y.to_vec(), self.momenta.clone()).with_m0(self.m0)
    }

    fn eval(&self, y: &[f64], out: &mut [f64]) {
        let mut scratch = Vec::with_capacity(y.len() + 1);
        conservative_velocities(y, &self.momenta, &mut scratch, out);
        if self.self_term {
            for (v, p) in out.iter_mut().zip(&self.momenta) {
                *v += p * p / 6.0;
            }
        }
    }

    fn gaps(&self, y: &[f64]) -> Vec<f64> {
        y.windows(2).map(|w| w[1] - w[0]).collect()
    }

    fn gap_rates(&self, _y: &[f64], dy: &[f64]) -> Vec<f64> {
        dy.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// One classical RK4 step of `y' = f(y)`.
pub fn rk4_vec<F: FnMut(&[f64], &mut [f64])>(mut f: F, y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    f(y, &mut k1);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    f(&tmp, &mut k2);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    f(&tmp, &mut k3);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    f(&tmp, &mut k4);
    (0..n).map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
}

pub fn rk4_field<F: VectorField + ?Sized>(field: &F, y: &[f64], h: f64) -> Vec<f64> {
    rk4_vec(|a, b| field.eval(a, b), y, h)
}

/// One RK4 step of the positions under `rhs`. Stage states are not
/// re-validated here; an `rhs` that rejects them propagates its error.
pub fn rk4_step<F>(rhs: F, state: &PeakonState, dt: f64) -> Result<PeakonState>
where
    F: Fn(&PeakonState) -> Result<Vec<f64>>,
{
    let x = state.positions();
    let stage = |y: Vec<f64>| PeakonState::from_parts_unchecked(state.t(), y, state.momenta().to_vec());
    let k1 = rhs(state)?;
    let k2 = rhs(&stage(x.iter().zip(&k1).map(|(a, k)| a + 0.5 * dt * k).collect()))?;
    let k3 = rhs(&stage(x.iter().zip(&k2).map(|(a, k)| a + 0.5 * dt * k).collect()))?;
    let k4 = rhs(&stage(x.iter().zip(&k3).map(|(a, k)| a + dt * k).collect()))?;
    let y: Vec<f64> =
        (0..x.len()).map(|i| x[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect();
    Ok(PeakonState::from_parts_unchecked(state.t() + dt, y, state.momenta().to_vec()).with_m0(state.m0()))
}

/// Time grid shared by all segments of one run. Each coarse step `dt` is
/// split into `substeps` equal integration steps; samples are taken every
/// `sample_every` coarse steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub origin: f64,
    pub dt: f64,
    pub substeps: usize,
    pub sample_every: usize,
    pub t_end: f64,
}

impl TimeGrid {
    pub fn new(origin: f64, config: &SimConfig) -> Self {
        Self { origin, dt: config.dt, substeps: 1, sample_every: config.sample_every, t_end: config.t_end }
    }

    pub fn with_substeps(mut self, m: usize) -> Self {
        self.substeps = m.max(1);
        self
    }

    pub fn fine_dt(&self) -> f64 {
        self.dt / self.substeps as f64
    }

    /// Time of fine grid index `n`; coarse grid points are hit exactly.
    pub fn time(&self, n: u64) -> f64 {
        let m = self.substeps as u64;
        self.origin + (n / m) as f64 * self.dt + (n % m) as f64 * self.fine_dt()
    }

    fn is_sample(&self, n: u64) -> bool {
        n % (self.substeps as u64 * self.sample_every as u64) == 0
    }

    /// First fine index strictly after `t` (times within a tiny fraction of a
    /// step below a grid point count as that point).
    fn next_index(&self, t: f64) -> u64 {
        let r = (t - self.origin) / self.fine_dt();
        (r + 1e-6).floor().max(-1.0) as u64 + 1
    }
}

/// Output of one event-free stretch of integration.
#[derive(Debug, Clone)]
pub struct Segment {
    /// Start state plus every grid sample reached.
    pub samples: Vec<Sample>,
    /// State at `t_end`, or the clamped pre-event state at `t_event`.
    pub end: PeakonState,
    pub event: Option<EventReport>,
}

fn make_sample<F: VectorField + ?Sized>(field: &F, t: f64, y: &[f64]) -> Sample {
    Sample { state: field.decode(t, y), log_gaps: field.log_gaps(y) }
}

fn triggered<F: VectorField + ?Sized>(field: &F, y: &[f64], tol: f64) -> Option<EventKind> {
    let g = field.gaps(y);
    if g.iter().any(|v| !(*v > 0.0)) {
        return Some(EventKind::OrderingBreach);
    }
    if g.iter().any(|&v| v <= tol) {
        let mut dy = vec![0.0; y.len()];
        field.eval(y, &mut dy);
        let r = field.gap_rates(y, &dy);
        if g.iter().zip(&r).any(|(&v, &rate)| v <= tol && rate < 0.0) {
            return Some(EventKind::GapBelowTol);
        }
    }
    None
}

/// [`evolve_segment`] on the grid anchored at the state's own time.
pub fn evolve_until_event<F: VectorField + ?Sized>(
    field: &F,
    state: &PeakonState,
    config: &SimConfig,
) -> Result<Segment> {
    config.validate(max_abs(state.positions()))?;
    evolve_segment(field, &field.encode(state), state.t(), config, &TimeGrid::new(state.t(), config))
}

/// Steps `y` from `t0` until `grid.t_end` or the first collision.
pub fn evolve_segment<F: VectorField + ?Sized>(
    field: &F,
    y0: &[f64],
    t0: f64,
    config: &SimConfig,
    grid: &TimeGrid,
) -> Result<Segment> {
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut samples = vec![make_sample(field, t, &y)];
    let mut n = grid.next_index(t);
    let collide = field.can_collide();
    while t < grid.t_end {
        let grid_t = grid.time(n);
        let t_next = if grid_t >= grid.t_end { grid.t_end } else { grid_t };
        let h = t_next - t;
        let y_new = rk4_field(field, &y, h);
        if collide {
            if triggered(field, &y_new, config.merge_gap_tol).is_some() {
                let (end, report) = localize(field, &y, t, h, config)?;
                return Ok(Segment { samples, end, event: Some(report) });
            }
        } else if y_new.iter().any(|v| !v.is_finite()) {
            return Err(PeakonError::OrderingLost { t: t_next });
        }
        y = y_new;
        t = t_next;
        if grid.is_sample(n) || t == grid.t_end {
            samples.push(make_sample(field, t, &y));
        }
        n += 1;
    }
    let end = field.decode(t, &y);
    Ok(Segment { samples, end, event: None })
}

fn localize<F: VectorField + ?Sized>(
    field: &F,
    y: &[f64],
    t: f64,
    h: f64,
    config: &SimConfig,
) -> Result<(PeakonState, EventReport)> {
    let tol = config.merge_gap_tol;
    let (mut lo, mut hi) = (0.0, h);
    while hi - lo > config.bisect_tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if triggered(field, &rk4_field(field, y, mid), tol).is_some() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let y_hi = rk4_field(field, y, hi);
    let kind = triggered(field, &y_hi, tol).unwrap_or(EventKind::GapBelowTol);
    let gaps = field.gaps(&y_hi);
    if let Some((k, g)) = gaps.iter().enumerate().find(|(_, g)| **g < -tol) {
        return Err(PeakonError::StepSize(format!(
            "gap {k} is {g:e} at the end of the bisection bracket near t = {}",
            t + hi
        )));
    }
    let mut dy = vec![0.0; y_hi.len()];
    field.eval(&y_hi, &mut dy);
    let rates = field.gap_rates(&y_hi, &dy);
    let t_event = t + hi;
    let raw = field.decode(t_event, &y_hi);
    let mut x = raw.positions().to_vec();
    for k in 0..x.len().saturating_sub(1) {
        if !(x[k + 1] - x[k] > 0.0) {
            x[k + 1] = x[k] + 0.5 * tol;
        }
    }
    let end = PeakonState::at_time(t_event, x, raw.momenta().to_vec())?.with_m0(raw.m0());
    let mut pairs = Vec::new();
    let mut closing_rates = Vec::new();
    for (k, g) in end.gaps().iter().enumerate() {
        if *g <= tol {
            pairs.push((k, k + 1));
            closing_rates.push(rates[k]);
        }
    }
    Ok((end, EventReport { kind, t_event, pairs, closing_rates }))
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
