//! Gauss-Legendre rules and composite integration with breakpoints.

use std::f64::consts::PI;

/// An n-point Gauss-Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Nodes are found by Newton iteration on the three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "need at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, z);
            if d.is_finite() {
                dp = d;
            }
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[n - 1 - i] = z;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Integral of `f` over [a, b].
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (z, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * z);
        }
        acc * half
    }

    /// Composite rule over [a, b]: each interval between consecutive
    /// breakpoints is cut into panels no wider than `max_panel`.
    pub fn integrate_composite<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        breakpoints: &[f64],
        max_panel: f64,
        mut f: F,
    ) -> f64 {
        let mut acc = 0.0;
        for (lo, hi) in panels(a, b, breakpoints, max_panel) {
            acc += self.integrate(lo, hi, &mut f);
        }
        acc
    }
}

/// Legendre polynomial P_n(z) and its derivative.
fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Splits [a, b] at the breakpoints strictly inside it, then subdivides
/// each piece uniformly so no panel is wider than `max_panel`.
pub fn panels(a: f64, b: f64, breakpoints: &[f64], max_panel: f64) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = breakpoints.iter().copied().filter(|&c| c > a && c < b).collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(a);
    edges.extend(cuts);
    edges.push(b);
    let mut out = Vec::new();
    for w in edges.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let m = ((hi - lo) / max_panel).ceil().max(1.0) as usize;
        let h = (hi - lo) / m as f64;
        for j in 0..m {
            let l = lo + j as f64 * h;
            let r = if j + 1 == m { hi } else { lo + (j + 1) as f64 * h };
            out.push((l, r));
        }
    }
    out
}
