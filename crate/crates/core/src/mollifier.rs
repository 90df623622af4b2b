//! Compactly supported even mollifiers and the exact regularized vector field.
//!
//! Every family is described on unit width; `ρ_ε(s) = ρ(s/ε)/ε`.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::dynamics::interval_constants;
use crate::error::{PeakonError, Result};
use crate::quadrature::GaussLegendre;
use crate::state::PeakonState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MollifierFamily {
    /// (1 + cos πs)/2
    #[default]
    CosineBump,
    /// 3(1 - s²)/4
    QuadraticBump,
    /// K exp(-1/(1 - s²))
    SmoothExpBump,
}

impl MollifierFamily {
    pub const ALL: [MollifierFamily; 3] =
        [MollifierFamily::CosineBump, MollifierFamily::QuadraticBump, MollifierFamily::SmoothExpBump];

    /// Unit-width density.
    pub fn density(self, s: f64) -> f64 {
        if s.abs() >= 1.0 {
            return 0.0;
        }
        match self {
            MollifierFamily::CosineBump => 0.5 * (1.0 + (PI * s).cos()),
            MollifierFamily::QuadraticBump => 0.75 * (1.0 - s * s),
            MollifierFamily::SmoothExpBump => exp_table().norm * exp_bump(s),
        }
    }

    /// Unit-width antiderivative, 0 at -1 and 1 at 1.
    pub fn cdf(self, s: f64) -> f64 {
        if s <= -1.0 {
            return 0.0;
        }
        if s >= 1.0 {
            return 1.0;
        }
        match self {
            MollifierFamily::CosineBump => 0.5 + 0.5 * s + (PI * s).sin() / (2.0 * PI),
            MollifierFamily::QuadraticBump => 0.5 + 0.25 * (3.0 * s - s * s * s),
            MollifierFamily::SmoothExpBump => {
                if s < 0.0 {
                    1.0 - exp_table().eval(-s)
                } else {
                    exp_table().eval(s)
                }
            }
        }
    }

    /// Mean of the unit density over [a, a + len], `len >= 0`, computed
    /// without subtracting nearby CDF values. Returns `density(a)` for `len = 0`.
    pub fn mean_density(self, a: f64, len: f64) -> f64 {
        if len <= 0.0 {
            return self.density(a);
        }
        let clamped = a < -1.0 || a + len > 1.0;
        let lo = a.max(-1.0);
        let hi = (a + len).min(1.0);
        if hi <= lo {
            return 0.0;
        }
        let l = if clamped { hi - lo } else { len };
        let mid = lo + 0.5 * l;
        let inner = match self {
            MollifierFamily::CosineBump => {
                let z = 0.5 * PI * l;
                let sinc = if z < 1e-4 { 1.0 - z * z / 6.0 } else { z.sin() / z };
                0.5 * (1.0 + (PI * mid).cos() * sinc)
            }
            MollifierFamily::QuadraticBump => 0.75 * (1.0 - mid * mid - l * l / 12.0),
            MollifierFamily::SmoothExpBump => {
                if l < 1e-3 {
                    let g = &exp_table().short;
                    0.5 * g.integrate(-1.0, 1.0, |z| self.density(mid + 0.5 * l * z))
                } else {
                    (self.cdf(hi) - self.cdf(lo)) / l
                }
            }
        };
        if !clamped {
            inner
        } else {
            inner * (l / len)
        }
    }

    /// Unit mass over [a, a + len].
    pub fn mass(self, a: f64, len: f64) -> f64 {
        if len <= 0.0 {
            return 0.0;
        }
        let lo = a.max(-1.0);
        let hi = (a + len).min(1.0);
        if hi <= lo {
            return 0.0;
        }
        if hi - lo < 0.25 {
            (hi - lo) * self.mean_density(lo, hi - lo)
        } else {
            self.cdf(hi) - self.cdf(lo)
        }
    }
}

/// A mollifier family at width `eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MollifierSpec {
    #[serde(default)]
    pub family: MollifierFamily,
    pub eps: f64,
}

impl MollifierSpec {
    pub fn new(family: MollifierFamily, eps: f64) -> Result<Self> {
        let s = Self { family, eps };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps > 0.0 && self.eps.is_finite() {
            Ok(())
        } else {
            Err(PeakonError::InvalidWidth(self.eps))
        }
    }

    /// ρ_ε(s).
    pub fn density(&self, s: f64) -> f64 {
        self.family.density(s / self.eps) / self.eps
    }

    /// Φ_ε(s).
    pub fn cdf(&self, s: f64) -> f64 {
        self.family.cdf(s / self.eps)
    }

    /// ∫_a^{a+len} ρ_ε.
    pub fn mass(&self, a: f64, len: f64) -> f64 {
        self.family.mass(a / self.eps, len / self.eps)
    }

    /// (1/len) ∫_a^{a+len} ρ_ε, with the `len → 0` limit ρ_ε(a).
    pub fn mean_density(&self, a: f64, len: f64) -> f64 {
        self.family.mean_density(a / self.eps, len / self.eps) / self.eps
    }
}

/// Φ_ε(s) for a validated spec.
pub fn cdf(spec: &MollifierSpec, s: f64) -> Result<f64> {
    spec.validate()?;
    Ok(spec.cdf(s))
}

/// (ρ_ε ∗ U)(x) where U is the piecewise-constant field C_k on (x_k, x_{k+1}).
pub fn regularized_field(state: &PeakonState, spec: &MollifierSpec, x: f64) -> Result<f64> {
    spec.validate()?;
    let c = interval_constants(state)?;
    Ok(field_from_constants(state.positions(), &c.values, spec, x))
}

fn field_from_constants(pos: &[f64], c: &[f64], spec: &MollifierSpec, x: f64) -> f64 {
    let mut acc = 0.0;
    for k in 1..pos.len() {
        let gap = pos[k] - pos[k - 1];
        acc += c[k] * spec.mass(x - pos[k], gap);
    }
    acc
}

/// Velocities of the regularized system: the regularized field at each peakon.
pub fn regularized_rhs(state: &PeakonState, spec: &MollifierSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let c = interval_constants(state)?;
    let pos = state.positions();
    Ok(pos.iter().map(|&x| field_from_constants(pos, &c.values, spec, x)).collect())
}

/// Piecewise-constant function with a single jump at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepFunction {
    pub left: f64,
    pub right: f64,
}

/// |(ρ_ε ∗ f)(0) - (f(0-) + f(0+))/2| for a one-jump step function.
pub fn midpoint_property_residual(spec: &MollifierSpec, f: StepFunction) -> f64 {
    // the part of ρ_ε(-y) over y < 0 is Φ_ε(0)
    let w_left = spec.cdf(0.0);
    let w_right = 1.0 - spec.cdf(0.0);
    let conv = f.left * w_left + f.right * w_right;
    (conv - 0.5 * (f.left + f.right)).abs()
}

fn exp_bump(s: f64) -> f64 {
    let q = 1.0 - s * s;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

const TABLE_CELLS: usize = 10_000;

struct ExpTable {
    norm: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
    short: GaussLegendre,
}

impl ExpTable {
    fn build() -> Self {
        let g = GaussLegendre::new(8);
        let h = 1.0 / TABLE_CELLS as f64;
        let mut cum = Vec::with_capacity(TABLE_CELLS + 1);
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        cum.push(0.0);
        for i in 0..TABLE_CELLS {
            let a = i as f64 * h;
            let b = if i + 1 == TABLE_CELLS { 1.0 } else { (i + 1) as f64 * h };
            let piece = g.integrate(a, b, exp_bump);
            // Neumaier compensated sum
            let t = sum + piece;
            if sum.abs() >= piece.abs() {
                comp += (sum - t) + piece;
            } else {
                comp += (piece - t) + sum;
            }
            sum = t;
            cum.push(sum + comp);
        }
        let half = sum + comp;
        let norm = 0.5 / half;
        let mut values: Vec<f64> = cum.iter().map(|c| 0.5 + norm * c).collect();
        values[TABLE_CELLS] = 1.0;
        let mut slopes: Vec<f64> =
            (0..=TABLE_CELLS).map(|i| norm * exp_bump(i as f64 * h)).collect();
        // Fritsch-Carlson guard
        for i in 0..TABLE_CELLS {
            let delta = (values[i + 1] - values[i]) / h;
            if delta <= 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let alpha = slopes[i] / delta;
            let beta = slopes[i + 1] / delta;
            let r = alpha * alpha + beta * beta;
            if r > 9.0 {
                let tau = 3.0 / r.sqrt();
                slopes[i] = tau * alpha * delta;
                slopes[i + 1] = tau * beta * delta;
            }
        }
        Self { norm, values, slopes, short: g }
    }

    /// Φ on [0, 1] by cubic Hermite interpolation.
    fn eval(&self, s: f64) -> f64 {
        let h = 1.0 / TABLE_CELLS as f64;
        let pos = s * TABLE_CELLS as f64;
        let i = (pos.floor() as usize).min(TABLE_CELLS - 1);
        let t = pos - i as f64;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.slopes[i] * h, self.slopes[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }
}

fn exp_table() -> &'static ExpTable {
    static TABLE: OnceLock<ExpTable> = OnceLock::new();
    TABLE.get_or_init(ExpTable::build)
}
