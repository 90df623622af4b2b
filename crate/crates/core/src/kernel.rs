//! Green-function field reconstruction and the energy of a configuration.

use crate::state::PeakonState;

/// G(x) = e^{-|x|}/2.
pub fn green(x: f64) -> f64 {
    0.5 * (-x.abs()).exp()
}

/// Field value and one-sided slopes at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub x: f64,
    pub u: f64,
    pub ux_left: f64,
    pub ux_right: f64,
}

impl FieldSample {
    /// Mean of the squared one-sided slopes.
    pub fn avg_ux_sq(&self) -> f64 {
        0.5 * (self.ux_left * self.ux_left + self.ux_right * self.ux_right)
    }
}

pub fn eval_field(state: &PeakonState, x: f64) -> FieldSample {
    field_at(state.positions(), state.momenta(), x)
}

/// Same as [`eval_field`] on raw slices; positions may be unordered or coincide.
pub fn field_at(positions: &[f64], momenta: &[f64], x: f64) -> FieldSample {
    let mut u = 0.0;
    let mut smooth = 0.0;
    let mut jump = 0.0;
    for (&xi, &pi) in positions.iter().zip(momenta) {
        let d = x - xi;
        let g = pi * green(d);
        u += g;
        if d > 0.0 {
            smooth -= g;
        } else if d < 0.0 {
            smooth += g;
        } else {
            jump += g;
        }
    }
    FieldSample { x, u, ux_left: smooth + jump, ux_right: smooth - jump }
}

pub fn avg_ux_sq(state: &PeakonState, x: f64) -> f64 {
    eval_field(state, x).avg_ux_sq()
}

/// H = Σ_{i,j} p_i p_j G(x_i - x_j).
pub fn energy(state: &PeakonState) -> f64 {
    energy_of(state.positions(), state.momenta())
}

/// Energy of raw data; coincident positions are allowed.
pub fn energy_of(positions: &[f64], momenta: &[f64]) -> f64 {
    let n = positions.len();
    let mut diag = 0.0;
    let mut off = 0.0;
    for i in 0..n {
        diag += momenta[i] * momenta[i];
        for j in (i + 1)..n {
            off += momenta[i] * momenta[j] * (-(positions[j] - positions[i]).abs()).exp();
        }
    }
    0.5 * diag + off
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;
    use proptest::prelude::*;

    fn st(x: &[f64], p: &[f64]) -> PeakonState {
        PeakonState::new(x.to_vec(), p.to_vec()).unwrap()
    }

    #[test]
    fn green_values() {
        assert_eq!(green(0.0), 0.5);
        assert!((green(2f64.ln()) - 0.25).abs() < 1e-16);
        assert_eq!(green(-(2f64.ln())), green(2f64.ln()));
    }

    #[test]
    fn single_peakon_field() {
        let s = st(&[0.0], &[2.0]);
        let f = eval_field(&s, 0.0);
        assert_eq!((f.u, f.ux_left, f.ux_right), (1.0, 1.0, -1.0));
        assert_eq!(avg_ux_sq(&s, 0.0), 1.0);
        let f = eval_field(&s, 1.0);
        let e = (-1f64).exp();
        assert!((f.u - e).abs() < 1e-16);
        assert_eq!(f.ux_left, f.ux_right);
        assert!((f.ux_left + e).abs() < 1e-16);
    }

    #[test]
    fn two_peakon_field_by_hand() {
        // 1·G(0) + 1·G(-ln 2) = 1/2 + 1/4
        let s = st(&[0.0, 2f64.ln()], &[1.0, 1.0]);
        let f = eval_field(&s, 0.0);
        assert!((f.u - 0.75).abs() < 1e-15);
        // left slope: +1/2 (own) + 1/4 (neighbour on the right), right: -1/2 + 1/4
        assert!((f.ux_left - 0.75).abs() < 1e-15);
        assert!((f.ux_right + 0.25).abs() < 1e-15);
        assert!((energy(&s) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn energy_examples() {
        assert_eq!(energy(&st(&[0.0], &[4.0])), 8.0);
        assert_eq!(energy_of(&[0.0, 0.0, 0.0], &[5.0, -4.0, 3.0]), 8.0);
    }

    #[test]
    fn avg_slope_matches_finite_difference_limits() {
        let s = st(&[-1e-3, 0.0, 1e-3], &[5.0, -4.0, 3.0]);
        let h = 1e-7;
        let u = |x: f64| eval_field(&s, x).u;
        let left = (u(0.0) - u(-h)) / h;
        let right = (u(h) - u(0.0)) / h;
        let expect = 0.5 * (left * left + right * right);
        assert!((avg_ux_sq(&s, 0.0) - expect).abs() < 1e-5 * expect.max(1.0));
    }

    fn quad_energy(x: &[f64], p: &[f64]) -> f64 {
        let g = GaussLegendre::new(32);
        let a = x[0] - 40.0;
        let b = x[x.len() - 1] + 40.0;
        g.integrate_composite(a, b, x, 0.25, |y| {
            let f = field_at(x, p, y);
            f.u * f.u + f.ux_left * f.ux_left
        })
    }

    fn sorted_config() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (1usize..=10).prop_flat_map(|n| {
            (
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(-5.0f64..5.0, n),
            )
                .prop_map(|(mut x, p)| {
                    x.sort_by(f64::total_cmp);
                    for k in 1..x.len() {
                        if x[k] <= x[k - 1] {
                            x[k] = x[k - 1] + 1e-3;
                        }
                    }
                    (x, p)
                })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn energy_matches_quadrature((x, p) in sorted_config()) {
            let h = energy_of(&x, &p);
            let q = quad_energy(&x, &p);
            let scale = p.iter().map(|v| v * v).sum::<f64>().max(1e-12);
            prop_assert!((h - q).abs() <= 1e-8 * scale, "h={h} q={q}");
        }

        #[test]
        fn jump_equals_momentum((x, p) in sorted_config()) {
            let s = PeakonState::new(x.clone(), p.clone()).unwrap();
            for i in 0..x.len() {
                let f = eval_field(&s, x[i]);
                let tol = 8.0 * f64::EPSILON * (f.ux_left.abs() + f.ux_right.abs());
                prop_assert!((f.ux_left - f.ux_right - p[i]).abs() <= tol);
            }
        }

        #[test]
        fn translation_covariant((x, p) in sorted_config(), c in -3.0f64..3.0, q in -6.0f64..6.0) {
            let s = PeakonState::new(x, p).unwrap();
            let a = eval_field(&s, q);
            let b = eval_field(&s.shifted(c), q + c);
            prop_assert!((a.u - b.u).abs() <= 1e-12 * (1.0 + a.u.abs()));
        }

        #[test]
        fn green_even_and_bounded(x in -50.0f64..50.0) {
            prop_assert_eq!(green(x), green(-x));
            prop_assert!(green(x) <= 0.5);
        }
    }
}
