//! Peakon solutions of the modified Camassa-Holm equation.
//!
//! Conservative N-peakon trajectories are evolved with a fixed-step RK4
//! integrator, continued through collisions by merging coinciding peakons,
//! and compared against a mollified, collision-free approximation.

pub mod dispersive;
pub mod dynamics;
pub mod error;
pub mod integrate;
pub mod kernel;
pub mod mollifier;
pub mod quadrature;
pub mod state;
pub mod sticky;
pub mod trajectory;
pub mod verify;

pub use dispersive::{
    convergence_study, convergence_study_with_probe, evolve_regularized, ConvergenceReport, RegularizedField,
};
pub use dynamics::{
    alternating_identity_residual, ch_hamiltonian, ch_rhs, energy_identity_residual, interval_constants,
    interval_constants_fast, mch_conservative_rhs, mch_nonconservative_rhs, IntervalConstants, PairCouplings,
};
pub use error::{PeakonError, Result};
pub use integrate::{
    evolve_until_event, rk4_step, EventKind, EventReport, MchField, Segment, SimConfig, TimeGrid, VectorField,
};
pub use kernel::{avg_ux_sq, energy, energy_of, eval_field, field_at, green, FieldSample};
pub use mollifier::{
    midpoint_property_residual, regularized_field, regularized_rhs, MollifierFamily, MollifierSpec, StepFunction,
};
pub use state::{PeakonFlag, PeakonState};
pub use sticky::{detect_groups, evolve_nonconservative, evolve_sticky, merge, speed_consistency, MergeEvent, MergePartition};
pub use trajectory::{Dynamics, Epoch, Sample, Trajectory};
pub use verify::{
    ch_splitting_demo, energy_audit, identity_sweep, max_sample_speed, splitting_demo, weak_residual, ChSplitReport,
    EnergyAudit, IdentitySweep, QuadratureConfig, ResidualReport, SplittingReport, TestFunction,
};
