//! Weak-form residual, energy audits, speed checks and the splitting
//! demonstrations for mCH (non-unique) and CH (unique).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dynamics::{
    alternating_identity_residual, ch_hamiltonian, ch_rhs_into, energy_identity_residual, interval_constants,
    mch_conservative_rhs, PairCouplings,
};
use crate::error::{PeakonError, Result};
use crate::integrate::{rk4_vec, SimConfig};
use crate::kernel::{energy, energy_of, field_at};
use crate::mollifier::MollifierSpec;
use crate::quadrature::GaussLegendre;
use crate::state::PeakonState;
use crate::sticky::evolve_sticky;
use crate::trajectory::Trajectory;

/// Polynomial bump (1 - s²)^k on [-1, 1] with its derivatives.
#[derive(Debug, Clone, PartialEq)]
struct PolyBump {
    /// coefficients of the derivatives 0..=3 in powers of s
    coeffs: [Vec<f64>; 4],
}

impl PolyBump {
    fn new(k: u32) -> Self {
        let mut c = vec![0.0; 2 * k as usize + 1];
        let mut binom = 1.0;
        for j in 0..=k as usize {
            c[2 * j] = if j % 2 == 0 { binom } else { -binom };
            binom = binom * (k as usize - j) as f64 / (j + 1) as f64;
        }
        let d = |v: &Vec<f64>| -> Vec<f64> { (1..v.len()).map(|i| i as f64 * v[i]).collect() };
        let c1 = d(&c);
        let c2 = d(&c1);
        let c3 = d(&c2);
        Self { coeffs: [c, c1, c2, c3] }
    }

    fn eval(&self, order: usize, s: f64) -> f64 {
        if s.abs() >= 1.0 {
            return 0.0;
        }
        self.coeffs[order].iter().rev().fold(0.0, |acc, c| acc * s + c)
    }
}

/// Separable test function φ(x, t) = χ(t) ψ(x) with χ = (1 - t/T)^k on
/// [0, T) and ψ = (1 - ((x - c)/r)²)^k.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunction {
    pub center: f64,
    pub radius: f64,
    pub horizon: f64,
    pub power: u32,
    bump: PolyBump,
}

impl TestFunction {
    /// `power` must be at least 4 so that every derivative used is continuous.
    pub fn new(center: f64, radius: f64, horizon: f64, power: u32) -> Result<Self> {
        if !(radius > 0.0 && horizon > 0.0 && center.is_finite()) || power < 4 {
            return Err(PeakonError::InvalidConfig(format!(
                "test function needs radius > 0, horizon > 0 and power >= 4 (got r={radius}, T={horizon}, k={power})"
            )));
        }
        Ok(Self { center, radius, horizon, power, bump: PolyBump::new(power) })
    }

    /// d^order χ / dt^order for order 0 or 1.
    pub fn chi(&self, t: f64, order: usize) -> f64 {
        let q = 1.0 - t / self.horizon;
        if !(0.0..1.0 + f64::EPSILON).contains(&(t / self.horizon)) || q <= 0.0 {
            return 0.0;
        }
        let k = self.power as i32;
        match order {
            0 => q.powi(k),
            _ => -(k as f64) / self.horizon * q.powi(k - 1),
        }
    }

    /// d^order ψ / dx^order, order 0..=3.
    pub fn psi(&self, x: f64, order: usize) -> f64 {
        self.bump.eval(order, (x - self.center) / self.radius) / self.radius.powi(order as i32)
    }

    pub fn phi(&self, x: f64, t: f64) -> f64 {
        self.chi(t, 0) * self.psi(x, 0)
    }

    fn support(&self) -> (f64, f64) {
        (self.center - self.radius, self.center + self.radius)
    }
}

/// Panelled Gauss-Legendre settings for the space-time integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadratureConfig {
    pub nodes: usize,
    pub space_panel: f64,
    pub time_panel: f64,
    /// Largest accepted difference between this level and the refined one.
    pub tolerance: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self { nodes: 16, space_panel: 0.25, time_panel: 0.02, tolerance: 1e-6 }
    }
}

impl QuadratureConfig {
    /// Same rule on panels of half the width.
    pub fn refined(&self) -> Self {
        Self { space_panel: 0.5 * self.space_panel, time_panel: 0.5 * self.time_panel, ..*self }
    }
}

/// Weak-form residual and its parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualReport {
    /// |L(u, φ) + Σ p_i φ(c_i, 0)|
    pub value: f64,
    /// ∫∫ u (φ_t - φ_txx)
    pub transport: f64,
    /// ∫∫ (u³ + 2 u u_x²) φ_x
    pub cubic: f64,
    /// -(1/3) ∫∫ u³ φ_xxx
    pub third_derivative: f64,
    /// -∫ Σ p_i bar(u_x²)(x_i) φ_x(x_i) dt
    pub singular: f64,
    /// Σ p_i φ(c_i, 0)
    pub initial: f64,
    /// |value(refined panels) - value(given panels)|
    pub quadrature_error: f64,
}

struct Terms {
    transport: f64,
    cubic: f64,
    third: f64,
    singular: f64,
}

fn residual_terms(traj: &Trajectory, phi: &TestFunction, quad: &QuadratureConfig, g: &GaussLegendre) -> Result<Terms> {
    let t_hi = phi.horizon.min(traj.t_end());
    let t0 = traj.initial().t();
    let events: Vec<f64> = traj.events.iter().map(|e| e.t).collect();
    let (a, b) = phi.support();
    let mut terms = Terms { transport: 0.0, cubic: 0.0, third: 0.0, singular: 0.0 };
    for (lo, hi) in crate::quadrature::panels(t0, t_hi, &events, quad.time_panel) {
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        for (z, w) in g.nodes().iter().zip(g.weights()) {
            let t = mid + half * z;
            let wt = w * half;
            let s = traj.state_at(t)?;
            let (x, p) = (s.positions(), s.momenta());
            let chi = phi.chi(t, 0);
            let dchi = phi.chi(t, 1);
            let (mut tr, mut cu, mut th) = (0.0, 0.0, 0.0);
            for (l, r) in crate::quadrature::panels(a, b, x, quad.space_panel) {
                let hh = 0.5 * (r - l);
                let mm = 0.5 * (r + l);
                for (zz, ww) in g.nodes().iter().zip(g.weights()) {
                    let xx = mm + hh * zz;
                    let f = field_at(x, p, xx);
                    let (u, ux) = (f.u, f.ux_left);
                    let wx = ww * hh;
                    tr += wx * u * (phi.psi(xx, 0) - phi.psi(xx, 2));
                    cu += wx * (u * u * u + 2.0 * u * ux * ux) * phi.psi(xx, 1);
                    th += wx * u * u * u * phi.psi(xx, 3);
                }
            }
            let mut sg = 0.0;
            for (&xi, &pi) in x.iter().zip(p) {
                sg += pi * field_at(x, p, xi).avg_ux_sq() * phi.psi(xi, 1);
            }
            terms.transport += wt * dchi * tr;
            terms.cubic += wt * chi * cu;
            terms.third -= wt * chi * th / 3.0;
            terms.singular -= wt * chi * sg;
        }
    }
    Ok(terms)
}

/// Evaluates the weak form against `phi` at the given panel level and at
/// the refined level; fails if the two disagree by more than the tolerance.
pub fn weak_residual(traj: &Trajectory, phi: &TestFunction, quad: &QuadratureConfig) -> Result<ResidualReport> {
    let g = GaussLegendre::new(quad.nodes);
    let init = traj.initial();
    let initial: f64 = init.positions().iter().zip(init.momenta()).map(|(&c, &p)| p * phi.phi(c, init.t())).sum();
    let total = |t: &Terms| t.transport + t.cubic + t.third + t.singular + initial;
    let coarse = residual_terms(traj, phi, quad, &g)?;
    let fine = residual_terms(traj, phi, &quad.refined(), &g)?;
    let quadrature_error = (total(&fine) - total(&coarse)).abs();
    if !(quadrature_error <= quad.tolerance) {
        return Err(PeakonError::Quadrature { estimate: quadrature_error, tolerance: quad.tolerance });
    }
    Ok(ResidualReport {
        value: total(&fine).abs(),
        transport: fine.transport,
        cubic: fine.cubic,
        third_derivative: fine.third,
        singular: fine.singular,
        initial,
        quadrature_error,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyJump {
    pub t: f64,
    pub before: f64,
    pub after: f64,
    pub jump: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyAudit {
    pub initial: f64,
    /// max_t |H(t) - H(0)| / |H(0)| over all samples (0 when H(0) = 0).
    pub max_relative_drift: f64,
    pub jumps: Vec<EnergyJump>,
}

pub fn energy_audit(traj: &Trajectory) -> EnergyAudit {
    let h0 = energy(traj.initial());
    let scale = if h0 != 0.0 { h0.abs() } else { 1.0 };
    let drift = traj.samples().map(|s| (energy(&s.state) - h0).abs()).fold(0.0, f64::max);
    let jumps = traj
        .events
        .iter()
        .map(|e| {
            let (before, after) = (energy(&e.pre_state), energy(&e.post_state));
            EnergyJump { t: e.t, before, after, jump: (after - before).abs() }
        })
        .collect();
    EnergyAudit { initial: h0, max_relative_drift: if h0 != 0.0 { drift / scale } else { drift }, jumps }
}

/// max |Δx_i/Δt| between consecutive samples, positions resolved by lineage.
pub fn max_sample_speed(traj: &Trajectory) -> f64 {
    let rows: Vec<(f64, Vec<f64>)> =
        traj.indexed_samples().map(|(e, s)| (s.t(), e.resolve(s))).collect();
    let mut worst = 0.0f64;
    for w in rows.windows(2) {
        let dt = w[1].0 - w[0].0;
        for (a, b) in w[0].1.iter().zip(&w[1].1) {
            worst = worst.max(((b - a) / dt).abs());
        }
    }
    worst
}

/// ∫ (u_a - u_b)² dx for two raw configurations.
pub fn field_l2_distance(a: (&[f64], &[f64]), b: (&[f64], &[f64])) -> f64 {
    let mut br: Vec<f64> = a.0.iter().chain(b.0).copied().collect();
    br.sort_by(f64::total_cmp);
    let lo = br[0] - 40.0;
    let hi = br[br.len() - 1] + 40.0;
    let g = GaussLegendre::new(16);
    g.integrate_composite(lo, hi, &br, 0.25, |x| {
        let d = field_at(a.0, a.1, x).u - field_at(b.0, b.1, x).u;
        d * d
    })
    .sqrt()
}

/// Merges exactly coincident atoms of a (sorted) discrete measure.
pub fn canonicalize(positions: &[f64], momenta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut x: Vec<f64> = Vec::new();
    let mut p: Vec<f64> = Vec::new();
    for (&xi, &pi) in positions.iter().zip(momenta) {
        match x.last() {
            Some(&last) if last == xi => *p.last_mut().expect("paired") += pi,
            _ => {
                x.push(xi);
                p.push(pi);
            }
        }
    }
    (x, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitRow {
    pub t: f64,
    pub field_distance: f64,
    pub energy_single: f64,
    pub energy_split: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SplittingReport {
    pub single_momentum: f64,
    pub split_momenta: Vec<f64>,
    pub seed_gap: f64,
    /// Velocities of the seeded split state.
    pub initial_velocities: Vec<f64>,
    pub split_events: usize,
    pub rows: Vec<SplitRow>,
}

/// Times at which the splitting demo reports.
pub const SPLIT_TIMES: [f64; 6] = [0.1, 0.25, 0.5, 1.0, 1.5, 2.0];

/// One peakon of momentum 4 at the origin versus the triple (5, -4, 3)
/// released from the same point. Both start from the same measure.
pub fn splitting_demo(config: &SimConfig) -> Result<SplittingReport> {
    let single = PeakonState::new(vec![0.0], vec![4.0])?;
    let split_p = vec![5.0, -4.0, 3.0];
    let delta = 10.0 * config.merge_gap_tol;
    let split = PeakonState::new(vec![-delta, 0.0, delta], split_p.clone())?;
    let t_end = config.t_end.max(SPLIT_TIMES[SPLIT_TIMES.len() - 1]);
    let cfg = config.with_t_end(t_end);
    let ta = evolve_sticky(&single, &cfg)?;
    let tb = evolve_sticky(&split, &cfg)?;

    // t = 0: both are the same measure 4δ_0 once coincident atoms are merged
    let (ax, ap) = canonicalize(&[0.0], &[4.0]);
    let (bx, bp) = canonicalize(&[0.0, 0.0, 0.0], &split_p);
    let mut rows = vec![SplitRow {
        t: 0.0,
        field_distance: field_l2_distance((&ax, &ap), (&bx, &bp)),
        energy_single: energy_of(&[0.0], &[4.0]),
        energy_split: energy_of(&[0.0, 0.0, 0.0], &split_p),
    }];
    for &t in SPLIT_TIMES.iter().filter(|&&t| t <= t_end) {
        let a = ta.state_at(t)?;
        let b = tb.state_at(t)?;
        rows.push(SplitRow {
            t,
            field_distance: field_l2_distance((a.positions(), a.momenta()), (b.positions(), b.momenta())),
            energy_single: energy(&a),
            energy_split: energy(&b),
        });
    }
    Ok(SplittingReport {
        single_momentum: 4.0,
        split_momenta: split_p,
        seed_gap: delta,
        initial_velocities: mch_conservative_rhs(&split)?,
        split_events: tb.events.len(),
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChSplitReport {
    pub momenta: (f64, f64),
    pub x0: f64,
    pub t_end: f64,
    /// |x_1(T) - x_2(T)|
    pub separation: f64,
    /// max_i |x_i(T) - cT - x0|
    pub exact_deviation: f64,
    /// |p_1(T) + p_2(T) - c|
    pub momentum_error: f64,
    /// max_t |H0(t) - H0(0)| over the run
    pub hamiltonian_drift: f64,
    pub passed: bool,
}

/// Two CH peakons released from one point with momenta summing to c.
pub fn ch_splitting_demo(p1: f64, p2: f64, x0: f64, t_end: f64, dt: f64) -> ChSplitReport {
    let c = p1 + p2;
    let mut y = vec![x0, x0, p1, p2];
    let h0 = ch_hamiltonian(&y[..2], &y[2..]);
    let n = (t_end / dt).ceil().max(1.0) as usize;
    let h = t_end / n as f64;
    let mut drift = 0.0f64;
    for _ in 0..n {
        y = rk4_vec(
            |s, out| {
                let (dx, dp) = out.split_at_mut(2);
                ch_rhs_into(&s[..2], &s[2..], dx, dp);
            },
            &y,
            h,
        );
        drift = drift.max((ch_hamiltonian(&y[..2], &y[2..]) - h0).abs());
    }
    let exact = x0 + c * t_end;
    let separation = (y[0] - y[1]).abs();
    let exact_deviation = (y[0] - exact).abs().max((y[1] - exact).abs());
    let momentum_error = (y[2] + y[3] - c).abs();
    let passed = separation <= 1e-8 && exact_deviation <= 1e-6 && drift <= 1e-8;
    ChSplitReport {
        momenta: (p1, p2),
        x0,
        t_end,
        separation,
        exact_deviation,
        momentum_error,
        hamiltonian_drift: drift,
        passed,
    }
}

/// Worst normalized residuals over a seeded batch of random configurations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentitySweep {
    pub seed: u64,
    pub count: usize,
    /// max |Σ(-1)^{j+1} A_j| / M0²
    pub alternating: f64,
    /// max |Σ a_ij (A_i - A_j)| / M0⁴
    pub energy: f64,
    /// max |interval-constant speeds - pair-sum speeds| / M0²
    pub rhs_mismatch: f64,
}

/// Random ordered state: N in 2..=10, |p| ≤ 5, positions uniform in [-5, 5].
pub fn random_state<R: Rng>(rng: &mut R) -> PeakonState {
    loop {
        let n = rng.random_range(2..=10);
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..=5.0)).collect();
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..=5.0)).collect();
        x.sort_by(f64::total_cmp);
        if let Ok(s) = PeakonState::new(x, p) {
            return s;
        }
    }
}

pub fn identity_sweep(seed: u64, count: usize) -> Result<IdentitySweep> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = IdentitySweep { seed, count, alternating: 0.0, energy: 0.0, rhs_mismatch: 0.0 };
    for _ in 0..count {
        let s = random_state(&mut rng);
        let m2 = s.m0() * s.m0();
        if m2 == 0.0 {
            continue;
        }
        out.alternating = out.alternating.max(alternating_identity_residual(&s)?.abs() / m2);
        out.energy = out.energy.max(energy_identity_residual(&s)?.abs() / (m2 * m2));
        let v = interval_constants(&s)?.velocities();
        let a = PairCouplings::new(&s).speeds();
        for (x, y) in v.iter().zip(&a) {
            out.rhs_mismatch = out.rhs_mismatch.max((x - y).abs() / m2);
        }
    }
    Ok(out)
}

/// (ρ_ε ∗ U)(x) by panelled Gauss-Legendre quadrature, independent of the
/// closed-form CDF path.
pub fn regularized_field_quadrature(state: &PeakonState, spec: &MollifierSpec, x: f64) -> Result<f64> {
    spec.validate()?;
    let c = interval_constants(state)?.values;
    let pos = state.positions();
    let g = GaussLegendre::new(24);
    let mut br: Vec<f64> = pos.to_vec();
    br.push(x);
    Ok(g.integrate_composite(x - spec.eps, x + spec.eps, &br, spec.eps / 16.0, |y| {
        let k = pos.partition_point(|&p| p < y);
        spec.density(x - y) * c[k]
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mollifier::{regularized_field, MollifierFamily};

    #[test]
    fn poly_bump_derivatives_match_finite_differences() {
        let phi = TestFunction::new(0.3, 1.7, 2.0, 6).unwrap();
        let h = 1e-5;
        for &x in &[-1.0, -0.2, 0.3, 1.1, 1.9] {
            for order in 0..3 {
                let fd = (phi.psi(x + h, order) - phi.psi(x - h, order)) / (2.0 * h);
                assert!((fd - phi.psi(x + 0.0, order + 1)).abs() < 1e-6 * (1.0 + fd.abs()), "x={x} order={order}");
            }
        }
        assert_eq!(phi.psi(2.0 + 0.3, 0), 0.0);
        assert_eq!(phi.psi(0.3, 0), 1.0);
        let fd = (phi.chi(0.5 + h, 0) - phi.chi(0.5 - h, 0)) / (2.0 * h);
        assert!((fd - phi.chi(0.5, 1)).abs() < 1e-8);
        assert_eq!(phi.chi(2.0, 0), 0.0);
        assert!(TestFunction::new(0.0, 1.0, 1.0, 3).is_err());
    }

    #[test]
    fn stationary_peakon_residual() {
        let s = PeakonState::new(vec![0.2], vec![1.5]).unwrap();
        let tr = evolve_sticky(&s, &SimConfig::default().with_t_end(1.0).with_sample_every(10)).unwrap();
        let phi = TestFunction::new(0.0, 2.0, 1.0, 6).unwrap();
        let r = weak_residual(&tr, &phi, &QuadratureConfig::default()).unwrap();
        assert!(r.value <= 1e-6, "{r:?}");
        assert!(r.value <= r.transport.abs() + r.cubic.abs() + r.third_derivative.abs() + r.singular.abs() + r.initial.abs());
    }

    #[test]
    fn constant_gap_pair_residual() {
        let s = PeakonState::new(vec![0.0, 2f64.ln()], vec![1.0, 1.0]).unwrap();
        let tr = evolve_sticky(&s, &SimConfig::default().with_t_end(1.0).with_sample_every(10)).unwrap();
        let phi = TestFunction::new(0.3, 2.5, 1.0, 6).unwrap();
        let q = QuadratureConfig { nodes: 64, ..QuadratureConfig::default() };
        let r = weak_residual(&tr, &phi, &q).unwrap();
        assert!(r.value <= 1e-5, "{r:?}");
    }

    #[test]
    fn coarse_quadrature_is_rejected() {
        let s = PeakonState::new(vec![-2.0, -1.0, 0.0], vec![15.0, 2.0, 3.0]).unwrap();
        let tr = evolve_sticky(&s, &SimConfig::default().with_t_end(1.0).with_sample_every(10)).unwrap();
        let phi = TestFunction::new(-1.0, 3.0, 1.0, 6).unwrap();
        let q = QuadratureConfig { nodes: 2, space_panel: 3.0, time_panel: 0.5, tolerance: 1e-12 };
        assert!(matches!(weak_residual(&tr, &phi, &q), Err(PeakonError::Quadrature { .. })));
    }

    #[test]
    fn energy_audit_of_single_peakon() {
        let s = PeakonState::new(vec![0.0], vec![4.0]).unwrap();
        let tr = evolve_sticky(&s, &SimConfig::default().with_t_end(1.0)).unwrap();
        let a = energy_audit(&tr);
        assert_eq!((a.initial, a.max_relative_drift), (8.0, 0.0));
        assert!(a.jumps.is_empty());
    }

    #[test]
    fn canonical_measure_merges_exact_ties() {
        let (x, p) = canonicalize(&[0.0, 0.0, 0.0, 1.0], &[5.0, -4.0, 3.0, 2.0]);
        assert_eq!(x, vec![0.0, 1.0]);
        assert_eq!(p, vec![4.0, 2.0]);
    }

    #[test]
    fn ch_split_examples() {
        let r = ch_splitting_demo(3.0, 1.0, 0.0, 2.0, 1e-3);
        assert!(r.passed, "{r:?}");
        assert!((r.separation) <= 1e-12 && (r.exact_deviation) < 1e-9);
        assert!(ch_splitting_demo(4.0, 0.0, 0.0, 2.0, 1e-3).passed);
        assert!(ch_splitting_demo(5.0, -1.0, 0.5, 2.0, 1e-3).passed);
    }

    #[test]
    fn identity_sweep_small() {
        let s = identity_sweep(7, 50).unwrap();
        assert!(s.alternating <= 1e-12 && s.energy <= 1e-12 && s.rhs_mismatch <= 1e-14);
    }

    #[test]
    fn quadrature_oracle_agrees() {
        let s = PeakonState::new(vec![-0.3, 0.0, 0.05], vec![2.0, -1.0, 3.0]).unwrap();
        let spec = MollifierSpec::new(MollifierFamily::SmoothExpBump, 0.2).unwrap();
        for x in [-0.4, -0.1, 0.0, 0.02, 0.2] {
            let a = regularized_field(&s, &spec, x).unwrap();
            let b = regularized_field_quadrature(&s, &spec, x).unwrap();
            assert!((a - b).abs() < 1e-10);
        }
    }
}
