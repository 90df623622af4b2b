//! Right-hand sides of the conservative and non-conservative mCH peakon
//! systems, the CH peakon system, and the pairwise speed identities.

use crate::error::{PeakonError, Result};
use crate::state::PeakonState;

/// Values C_0..C_N of u² - u_x² on the open intervals between peakons.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalConstants {
    pub values: Vec<f64>,
}

impl IntervalConstants {
    /// Conservative velocities (C_{k-1} + C_k)/2.
    pub fn velocities(&self) -> Vec<f64> {
        self.values.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    /// Value on the interval to the right of peakon `k` (0-based), i.e. C_{k+1}.
    pub fn right_of(&self, k: usize) -> f64 {
        self.values[k + 1]
    }
}

/// Table a_ij = p_i p_j e^{-|x_i - x_j|}/2.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCouplings {
    n: usize,
    a: Vec<f64>,
}

impl PairCouplings {
    pub fn new(state: &PeakonState) -> Self {
        let (x, p) = (state.positions(), state.momenta());
        let n = x.len();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = 0.5 * p[i] * p[j] * (-(x[j] - x[i]).abs()).exp();
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        Self { n, a }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    /// A_k = Σ_{j≠k} a_jk + 2 Σ_{m<k<n} a_mn, evaluated term by term.
    pub fn speeds(&self) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|k| {
                let mut s = 0.0;
                for j in 0..n {
                    if j != k {
                        s += self.get(j, k);
                    }
                }
                for m in 0..k {
                    for q in (k + 1)..n {
                        s += 2.0 * self.get(m, q);
                    }
                }
                s
            })
            .collect()
    }
}

/// Robust O(N²) path: C_k = L_k R_k with both factors referenced to x_k.
pub fn interval_constants(state: &PeakonState) -> Result<IntervalConstants> {
    state.require_ordered()?;
    let mut values = vec![0.0; state.len() + 1];
    constants_direct(state.positions(), state.momenta(), &mut values);
    Ok(IntervalConstants { values })
}

/// O(N) path: the same factors by running recursion, each step renormalized
/// to the current peakon so that no exponent is positive.
pub fn interval_constants_fast(state: &PeakonState) -> Result<IntervalConstants> {
    state.require_ordered()?;
    let mut values = vec![0.0; state.len() + 1];
    constants_recursive(state.positions(), state.momenta(), &mut values);
    Ok(IntervalConstants { values })
}

/// C_k (1 ≤ k ≤ N-1) into `out[k]`; `out[0] = out[N] = 0`.
/// Defined for any position vector, ordered or not.
pub(crate) fn constants_direct(x: &[f64], p: &[f64], out: &mut [f64]) {
    let n = x.len();
    out[0] = 0.0;
    out[n] = 0.0;
    for k in 1..n {
        let xk = x[k - 1];
        let mut left = 0.0;
        for i in 0..k {
            left += p[i] * (x[i] - xk).exp();
        }
        let mut right = 0.0;
        for j in k..n {
            right += p[j] * (xk - x[j]).exp();
        }
        out[k] = left * right;
    }
}

pub(crate) fn constants_recursive(x: &[f64], p: &[f64], out: &mut [f64]) {
    let n = x.len();
    out[0] = 0.0;
    out[n] = 0.0;
    if n < 2 {
        return;
    }
    // out[k] temporarily holds R for the interval right of peakon k-1
    let mut r = 0.0;
    for k in (1..n).rev() {
        r = (r + p[k]) * (x[k - 1] - x[k]).exp();
        out[k] = r;
    }
    let mut l = 0.0;
    for k in 1..n {
        l = if k == 1 { p[0] } else { l * (x[k - 2] - x[k - 1]).exp() + p[k - 1] };
        out[k] *= l;
    }
}

/// Conservative velocities for raw data, no ordering check.
pub(crate) fn conservative_velocities(x: &[f64], p: &[f64], scratch: &mut Vec<f64>, out: &mut [f64]) {
    scratch.resize(x.len() + 1, 0.0);
    constants_direct(x, p, scratch);
    for k in 0..x.len() {
        out[k] = 0.5 * (scratch[k] + scratch[k + 1]);
    }
}

pub fn mch_conservative_rhs(state: &PeakonState) -> Result<Vec<f64>> {
    Ok(interval_constants(state)?.velocities())
}

pub fn mch_nonconservative_rhs(state: &PeakonState) -> Result<Vec<f64>> {
    let mut v = mch_conservative_rhs(state)?;
    for (vk, pk) in v.iter_mut().zip(state.momenta()) {
        *vk += pk * pk / 6.0;
    }
    Ok(v)
}

/// CH peakon system with sgn(0) = 0; positions need not be ordered.
pub fn ch_rhs(positions: &[f64], momenta: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = positions.len();
    let mut dx = vec![0.0; n];
    let mut dp = vec![0.0; n];
    ch_rhs_into(positions, momenta, &mut dx, &mut dp);
    (dx, dp)
}

pub(crate) fn ch_rhs_into(x: &[f64], p: &[f64], dx: &mut [f64], dp: &mut [f64]) {
    let n = x.len();
    for i in 0..n {
        let mut sx = 0.0;
        let mut sp = 0.0;
        for j in 0..n {
            let d = x[i] - x[j];
            let e = (-d.abs()).exp();
            sx += p[j] * e;
            if d > 0.0 {
                sp += p[j] * e;
            } else if d < 0.0 {
                sp -= p[j] * e;
            }
        }
        dx[i] = sx;
        dp[i] = p[i] * sp;
    }
}

/// CH Hamiltonian Σ p_i p_j G(x_i - x_j).
pub fn ch_hamiltonian(positions: &[f64], momenta: &[f64]) -> f64 {
    crate::kernel::energy_of(positions, momenta)
}

fn require_pairs(state: &PeakonState) -> Result<()> {
    if state.len() < 2 {
        return Err(PeakonError::TooFew { needed: 2, got: state.len() });
    }
    state.require_ordered()
}

/// Σ_j (-1)^{j+1} A_j with A_j from the term-by-term pair sums.
pub fn alternating_identity_residual(state: &PeakonState) -> Result<f64> {
    require_pairs(state)?;
    let a = PairCouplings::new(state).speeds();
    Ok(a.iter().enumerate().map(|(j, v)| if j % 2 == 0 { *v } else { -*v }).sum())
}

/// Σ_{i<j} a_ij (A_i - A_j), the time derivative of the energy.
pub fn energy_identity_residual(state: &PeakonState) -> Result<f64> {
    require_pairs(state)?;
    let pc = PairCouplings::new(state);
    let a = pc.speeds();
    let n = state.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            s += pc.get(i, j) * (a[i] - a[j]);
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn st(x: &[f64], p: &[f64]) -> PeakonState {
        PeakonState::new(x.to_vec(), p.to_vec()).unwrap()
    }

    /// Triple sum written out with the three groups of terms kept apart.
    fn literal_rhs(x: &[f64], p: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                let mut s = 0.0;
                for j in 0..k {
                    s += 0.5 * p[k] * p[j] * (x[j] - x[k]).exp();
                }
                for j in (k + 1)..n {
                    s += 0.5 * p[k] * p[j] * (x[k] - x[j]).exp();
                }
                for m in 0..k {
                    for q in (k + 1)..n {
                        s += p[m] * p[q] * (x[m] - x[q]).exp();
                    }
                }
                s
            })
            .collect()
    }

    fn brute_constants(x: &[f64], p: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..=n)
            .map(|k| {
                let mut s = 0.0;
                for i in 0..k {
                    for j in k..n {
                        s += p[i] * p[j] * (x[i] - x[j]).exp();
                    }
                }
                s
            })
            .collect()
    }

    #[test]
    fn single_peakon() {
        let s = st(&[0.3], &[7.0]);
        assert_eq!(interval_constants(&s).unwrap().values, vec![0.0, 0.0]);
        assert_eq!(mch_conservative_rhs(&s).unwrap(), vec![0.0]);
        assert_eq!(mch_nonconservative_rhs(&s).unwrap(), vec![49.0 / 6.0]);
    }

    #[test]
    fn two_peakons_constant_gap() {
        let s = st(&[0.0, 2f64.ln()], &[1.0, 1.0]);
        let c = interval_constants(&s).unwrap();
        assert_eq!(c.values[0], 0.0);
        assert!((c.values[1] - 0.5).abs() < 1e-16);
        assert_eq!(c.values[2], 0.0);
        let v = mch_conservative_rhs(&s).unwrap();
        assert!((v[0] - 0.25).abs() < 1e-16 && (v[1] - 0.25).abs() < 1e-16);
    }

    #[test]
    fn coincident_limit_of_split_triple() {
        let d = 1e-12;
        let s = st(&[-d, 0.0, d], &[5.0, -4.0, 3.0]);
        let v = mch_conservative_rhs(&s).unwrap();
        for (a, b) in v.iter().zip([-2.5, -1.0, 1.5]) {
            assert!((a - b).abs() < 1e-9, "{v:?}");
        }
        let r = alternating_identity_residual(&s).unwrap();
        assert!(r.abs() < 1e-12);
    }

    #[test]
    fn doubled_momentum_speed() {
        // u = p e^{-|x - 2p²t/3|} is a peakon of momentum 2p
        let p = 1.7;
        let v = mch_nonconservative_rhs(&st(&[0.0], &[2.0 * p])).unwrap();
        assert!((v[0] - 2.0 * p * p / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_unordered_and_short() {
        let s = PeakonState::from_parts_unchecked(0.0, vec![0.0, 0.0], vec![1.0, 1.0]);
        assert!(mch_conservative_rhs(&s).is_err());
        assert!(interval_constants_fast(&s).is_err());
        let one = st(&[0.0], &[1.0]);
        assert!(matches!(alternating_identity_residual(&one), Err(PeakonError::TooFew { .. })));
        assert!(energy_identity_residual(&one).is_err());
    }

    #[test]
    fn ch_examples() {
        let (dx, dp) = ch_rhs(&[1.0], &[3.0]);
        assert_eq!((dx[0], dp[0]), (3.0, 0.0));
        let (dx, dp) = ch_rhs(&[0.5, 0.5], &[3.0, 1.0]);
        assert_eq!(dx, vec![4.0, 4.0]);
        assert_eq!(dp, vec![0.0, 0.0]);
    }

    #[test]
    fn couplings_diagonal_and_symmetry() {
        let s = st(&[-1.0, 0.5, 2.0], &[2.0, -1.0, 3.0]);
        let a = PairCouplings::new(&s);
        assert_eq!(a.get(0, 0), 2.0);
        assert_eq!(a.get(2, 1), a.get(1, 2));
        assert_eq!(a.len(), 3);
    }

    fn config() -> impl Strategy<Value = PeakonState> {
        (1usize..=10).prop_flat_map(|n| {
            (prop::collection::vec(-5.0f64..5.0, n), prop::collection::vec(-5.0f64..5.0, n)).prop_map(
                |(mut x, p)| {
                    x.sort_by(f64::total_cmp);
                    for k in 1..x.len() {
                        if x[k] <= x[k - 1] {
                            x[k] = x[k - 1] + 1e-6;
                        }
                    }
                    PeakonState::new(x, p).unwrap()
                },
            )
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn constants_match_brute_force(s in config()) {
            let c = interval_constants(&s).unwrap().values;
            let f = interval_constants_fast(&s).unwrap().values;
            let b = brute_constants(s.positions(), s.momenta());
            let scale = s.m0() * s.m0();
            prop_assert_eq!(c[0], 0.0);
            prop_assert_eq!(c[s.len()], 0.0);
            for k in 0..c.len() {
                prop_assert!((c[k] - b[k]).abs() <= 1e-14 * scale.max(1.0));
                prop_assert!((f[k] - b[k]).abs() <= 1e-14 * scale.max(1.0));
            }
        }

        #[test]
        fn rhs_matches_triple_sum(s in config()) {
            let v = mch_conservative_rhs(&s).unwrap();
            let l = literal_rhs(s.positions(), s.momenta());
            let a = PairCouplings::new(&s).speeds();
            let scale = (s.m0() * s.m0()).max(1.0);
            for k in 0..v.len() {
                prop_assert!((v[k] - l[k]).abs() <= 1e-14 * scale);
                prop_assert!((v[k] - a[k]).abs() <= 1e-14 * scale);
                prop_assert!(v[k].abs() <= s.speed_bound() * (1.0 + 1e-14));
            }
        }

        #[test]
        fn nonconservative_differs_by_self_term(s in config()) {
            let c = mch_conservative_rhs(&s).unwrap();
            let n = mch_nonconservative_rhs(&s).unwrap();
            for k in 0..c.len() {
                let pk = s.momenta()[k];
                prop_assert!((n[k] - c[k] - pk * pk / 6.0).abs() <= 1e-14 * (1.0 + n[k].abs()));
            }
        }

        #[test]
        fn identities_vanish(s in config()) {
            prop_assume!(s.len() >= 2);
            let m2 = s.m0() * s.m0();
            prop_assert!(alternating_identity_residual(&s).unwrap().abs() <= 1e-12 * m2);
            prop_assert!(energy_identity_residual(&s).unwrap().abs() <= 1e-12 * m2 * m2);
        }

        #[test]
        fn translation_invariant(s in config(), c in -4.0f64..4.0) {
            let a = mch_conservative_rhs(&s).unwrap();
            let b = mch_conservative_rhs(&s.shifted(c)).unwrap();
            let scale = (s.m0() * s.m0()).max(1.0);
            for k in 0..a.len() {
                prop_assert!((a[k] - b[k]).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn ch_total_momentum_is_conserved(s in config()) {
            let (_, dp) = ch_rhs(s.positions(), s.momenta());
            let total: f64 = dp.iter().sum();
            prop_assert!(total.abs() <= 1e-12 * (s.m0() * s.m0()).max(1.0));
        }

        #[test]
        fn ch_hamiltonian_is_stationary(s in config()) {
            let (x, p) = (s.positions(), s.momenta());
            let (dx, dp) = ch_rhs(x, p);
            let h = 1e-8;
            let step = |sgn: f64| {
                let xs: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + sgn * h * b).collect();
                let ps: Vec<f64> = p.iter().zip(&dp).map(|(a, b)| a + sgn * h * b).collect();
                ch_hamiltonian(&xs, &ps)
            };
            let rate = (step(1.0) - step(-1.0)) / (2.0 * h);
            let m = s.m0().max(1.0);
            prop_assert!(rate.abs() <= 1e-6 * m * m * m, "rate {rate}");
        }
    }
}
