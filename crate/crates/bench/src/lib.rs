//! Fixtures shared by the benchmarks.

use peakon_core::PeakonState;

/// Deterministic ordered state with `n` peakons and mixed-sign momenta.
pub fn spread_state(n: usize) -> PeakonState {
    let positions: Vec<f64> = (0..n).map(|i| -10.0 + 20.0 * i as f64 / n as f64).collect();
    let momenta: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 11) as f64 / 5.0 - 1.0).collect();
    PeakonState::new(positions, momenta).expect("fixture is ordered")
}
