//! Merging of coinciding peakons and global sticky evolution.

use crate::error::{PeakonError, Result};
use crate::integrate::{evolve_segment, max_abs, EventReport, MchField, SimConfig, TimeGrid, VectorField};
use crate::kernel::eval_field;
use crate::state::PeakonState;
use crate::trajectory::{Dynamics, Epoch, Trajectory};

/// Contiguous groups of coinciding peakons; each group is represented by
/// its first (minimal) index.
#[derive(Debug, Clone, PartialEq)]
pub struct MergePartition {
    pub groups: Vec<Vec<usize>>,
    pub tol: f64,
}

impl MergePartition {
    pub fn representatives(&self) -> Vec<usize> {
        self.groups.iter().map(|g| g[0]).collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.groups.iter().all(|g| g.len() == 1)
    }
}

/// Groups indices whose adjacent gaps are ≤ `tol`, closed transitively.
pub fn detect_groups(state: &PeakonState, tol: f64) -> MergePartition {
    let x = state.positions();
    let mut groups = vec![vec![0]];
    for k in 1..x.len() {
        if x[k] - x[k - 1] <= tol {
            groups.last_mut().expect("non-empty").push(k);
        } else {
            groups.push(vec![k]);
        }
    }
    MergePartition { groups, tol }
}

/// Sums the momenta of each group and places the merged peakon at the
/// representative's position.
pub fn merge(state: &PeakonState, partition: &MergePartition) -> Result<PeakonState> {
    let bad = |m: String| Err(PeakonError::InvalidPartition(m));
    let x = state.positions();
    let p = state.momenta();
    let mut next = 0;
    for g in &partition.groups {
        if g.is_empty() {
            return bad("empty group".into());
        }
        for &i in g {
            if i != next {
                return bad(format!("groups must list 0..{} contiguously; expected {next}, found {i}", x.len()));
            }
            next += 1;
        }
        for w in g.windows(2) {
            let gap = x[w[1]] - x[w[0]];
            if gap > partition.tol {
                return bad(format!("peakons {} and {} are {gap:e} apart", w[0], w[1]));
            }
        }
    }
    if next != x.len() {
        return bad(format!("partition covers {next} of {} peakons", x.len()));
    }
    for w in partition.groups.windows(2) {
        let (a, b) = (*w[0].last().expect("non-empty"), w[1][0]);
        if x[b] - x[a] <= partition.tol {
            return bad(format!("groups ending at {a} and starting at {b} should be joined"));
        }
    }
    if partition.is_trivial() {
        return bad("nothing to merge".into());
    }
    let positions = partition.groups.iter().map(|g| x[g[0]]).collect();
    let momenta = partition.groups.iter().map(|g| g.iter().map(|&i| p[i]).sum()).collect();
    Ok(PeakonState::at_time(state.t(), positions, momenta)?.with_m0(state.m0()))
}

/// One application of the merge rule during a run.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeEvent {
    pub t: f64,
    pub partition: MergePartition,
    /// Groups expressed in original peakon indices.
    pub original_groups: Vec<Vec<usize>>,
    pub pre_state: PeakonState,
    pub post_state: PeakonState,
    pub report: EventReport,
}

/// Conservative evolution, merging peakons at every collision, up to `t_end`.
pub fn evolve_sticky(initial: &PeakonState, config: &SimConfig) -> Result<Trajectory> {
    initial.require_ordered()?;
    config.validate(max_abs(initial.positions()))?;
    let grid = TimeGrid::new(initial.t(), config);
    let mut state = initial.clone();
    let mut owner: Vec<usize> = (0..initial.len()).collect();
    let mut epochs = Vec::new();
    let mut events = Vec::new();
    loop {
        let field = MchField::conservative(&state);
        let seg = evolve_segment(&field, &field.encode(&state), state.t(), config, &grid)?;
        epochs.push(Epoch { owner: owner.clone(), samples: seg.samples });
        let Some(report) = seg.event else { break };
        let pre = seg.end;
        let partition = detect_groups(&pre, config.merge_gap_tol);
        let post = merge(&pre, &partition)?;
        let mut group_of = vec![0; pre.len()];
        for (gi, g) in partition.groups.iter().enumerate() {
            for &i in g {
                group_of[i] = gi;
            }
        }
        let mut original_groups = vec![Vec::new(); post.len()];
        for (orig, o) in owner.iter_mut().enumerate() {
            *o = group_of[*o];
            original_groups[*o].push(orig);
        }
        events.push(MergeEvent {
            t: pre.t(),
            partition,
            original_groups,
            pre_state: pre,
            post_state: post.clone(),
            report,
        });
        state = post;
    }
    Ok(Trajectory { dynamics: Dynamics::Sticky, dt: config.dt, config: *config, epochs, events, halted: None })
}

/// Non-conservative evolution up to `t_end` or the first collision, where it
/// stops: no continuation rule is defined for that system.
pub fn evolve_nonconservative(initial: &PeakonState, config: &SimConfig) -> Result<Trajectory> {
    initial.require_ordered()?;
    config.validate(max_abs(initial.positions()))?;
    let field = MchField::nonconservative(initial);
    let grid = TimeGrid::new(initial.t(), config);
    let seg = evolve_segment(&field, &field.encode(initial), initial.t(), config, &grid)?;
    let epochs = vec![Epoch { owner: (0..initial.len()).collect(), samples: seg.samples }];
    Ok(Trajectory {
        dynamics: Dynamics::NonConservative,
        dt: config.dt,
        config: *config,
        epochs,
        events: Vec::new(),
        halted: seg.event,
    })
}

/// Largest mismatch between central-difference speeds and u² - bar(u_x²)
/// at the peakons, over `sample_count` evenly spread times that keep a
/// safe distance from merge events.
pub fn speed_consistency(traj: &Trajectory, sample_count: usize) -> f64 {
    let t0 = traj.initial().t();
    let t1 = traj.t_end();
    let h = 0.1 * traj.dt;
    let events: Vec<f64> = traj.events.iter().map(|e| e.t).collect();
    let mut worst = 0.0f64;
    for j in 0..sample_count {
        let t = t0 + (t1 - t0) * (j as f64 + 0.5) / sample_count as f64;
        if t - h < t0 || t + h > t1 || events.iter().any(|&te| (te - t).abs() <= 2.0 * h) {
            continue;
        }
        let (Ok(a), Ok(b), Ok(c)) = (traj.state_at(t - h), traj.state_at(t), traj.state_at(t + h)) else {
            continue;
        };
        if a.len() != c.len() {
            continue;
        }
        for i in 0..b.len() {
            let fd = (c.positions()[i] - a.positions()[i]) / (2.0 * h);
            let f = eval_field(&b, b.positions()[i]);
            let v = f.u * f.u - f.avg_ux_sq();
            worst = worst.max((fd - v).abs());
        }
    }
    worst
}
