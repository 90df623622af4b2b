use crate::error::{PeakonError, Result};

/// Per-peakon marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeakonFlag {
    Active,
    ZeroMomentum,
}

impl PeakonFlag {
    fn for_momentum(p: f64) -> Self {
        if p == 0.0 {
            PeakonFlag::ZeroMomentum
        } else {
            PeakonFlag::Active
        }
    }
}

/// Ordered peakon positions with their momenta at a time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeakonState {
    t: f64,
    positions: Vec<f64>,
    momenta: Vec<f64>,
    flags: Vec<PeakonFlag>,
    m0: f64,
}

impl PeakonState {
    /// State at `t = 0`. Positions must be finite and strictly increasing.
    pub fn new(positions: Vec<f64>, momenta: Vec<f64>) -> Result<Self> {
        Self::at_time(0.0, positions, momenta)
    }

    pub fn at_time(t: f64, positions: Vec<f64>, momenta: Vec<f64>) -> Result<Self> {
        check_shape(&positions, &momenta)?;
        if !t.is_finite() {
            return Err(PeakonError::NonFinite("time"));
        }
        check_ordered(&positions)?;
        Ok(Self::from_parts_unchecked(t, positions, momenta))
    }

    /// Builds a state without the ordering check. Positions may tie when the
    /// true gaps are below the resolution of f64 (regularized samples).
    pub(crate) fn from_parts_unchecked(t: f64, positions: Vec<f64>, momenta: Vec<f64>) -> Self {
        let m0 = momenta.iter().map(|p| p.abs()).sum();
        let flags = momenta.iter().map(|&p| PeakonFlag::for_momentum(p)).collect();
        Self { t, positions, momenta, flags, m0 }
    }

    pub(crate) fn with_m0(mut self, m0: f64) -> Self {
        self.m0 = self.m0.max(m0);
        self
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn momenta(&self) -> &[f64] {
        &self.momenta
    }

    pub fn flags(&self) -> &[PeakonFlag] {
        &self.flags
    }

    /// Total absolute momentum recorded at construction (carried through merges).
    pub fn m0(&self) -> f64 {
        self.m0
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn total_momentum(&self) -> f64 {
        self.momenta.iter().sum()
    }

    /// Upper bound M0²/2 on every peakon speed.
    pub fn speed_bound(&self) -> f64 {
        0.5 * self.m0 * self.m0
    }

    /// Adjacent gaps x_{k+1} - x_k.
    pub fn gaps(&self) -> Vec<f64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }

    pub fn min_gap(&self) -> Option<f64> {
        self.gaps().into_iter().reduce(f64::min)
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// Same state with every position moved by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut s = self.clone();
        s.positions.iter_mut().for_each(|x| *x += c);
        s
    }

    /// Verifies the strict ordering precondition shared by the mCH right-hand sides.
    pub fn require_ordered(&self) -> Result<()> {
        check_ordered(&self.positions)
    }
}

fn check_shape(positions: &[f64], momenta: &[f64]) -> Result<()> {
    if positions.is_empty() {
        return Err(PeakonError::Empty);
    }
    if positions.len() != momenta.len() {
        return Err(PeakonError::LengthMismatch { positions: positions.len(), momenta: momenta.len() });
    }
    if positions.iter().any(|x| !x.is_finite()) {
        return Err(PeakonError::NonFinite("positions"));
    }
    if momenta.iter().any(|p| !p.is_finite()) {
        return Err(PeakonError::NonFinite("momenta"));
    }
    Ok(())
}

pub(crate) fn check_ordered(positions: &[f64]) -> Result<()> {
    for (index, w) in positions.windows(2).enumerate() {
        if !(w[0] < w[1]) {
            return Err(PeakonError::Unordered { index, left: w[0], right: w[1] });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_input() {
        assert_eq!(PeakonState::new(vec![], vec![]), Err(PeakonError::Empty));
        assert!(matches!(
            PeakonState::new(vec![0.0, 0.0, 1.0], vec![1.0; 3]),
            Err(PeakonError::Unordered { index: 0, .. })
        ));
        assert!(matches!(
            PeakonState::new(vec![0.0, 1.0], vec![1.0]),
            Err(PeakonError::LengthMismatch { .. })
        ));
        assert!(PeakonState::new(vec![f64::NAN], vec![1.0]).is_err());
        assert!(PeakonState::new(vec![0.0], vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn records_m0_and_flags() {
        let s = PeakonState::new(vec![-1.0, 0.0, 2.0], vec![5.0, 0.0, -1.0]).unwrap();
        assert_eq!(s.m0(), 6.0);
        assert_eq!(s.speed_bound(), 18.0);
        assert_eq!(s.flags()[1], PeakonFlag::ZeroMomentum);
        assert_eq!(s.flags()[0], PeakonFlag::Active);
        assert_eq!(s.gaps(), vec![1.0, 2.0]);
        assert_eq!(s.total_momentum(), 4.0);
    }
}
