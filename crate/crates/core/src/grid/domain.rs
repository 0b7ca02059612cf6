use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default number of grid nodes.
pub const DEFAULT_GRID_POINTS: usize = 2049;

/// The finite horizon `[0, T]` together with a uniform sampling grid.
///
/// Nodes are computed as `T * i / (N - 1)` so the endpoints are exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeDomain {
    horizon: f64,
    nodes: Vec<f64>,
}

impl TimeDomain {
    pub fn uniform(horizon: f64, grid_points: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::invalid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if grid_points < 3 {
            return Err(Error::invalid(format!(
                "grid needs at least 3 points, got {grid_points}"
            )));
        }
        let last = (grid_points - 1) as f64;
        let mut nodes: Vec<f64> = (0..grid_points)
            .map(|i| horizon * (i as f64) / last)
            .collect();
        nodes[grid_points - 1] = horizon;
        Ok(TimeDomain { horizon, nodes })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Uniform node spacing.
    pub fn step(&self) -> f64 {
        self.horizon / (self.nodes.len() - 1) as f64
    }

    /// Same horizon, `2N - 1` nodes (every cell halved).
    pub fn refined(&self) -> Self {
        TimeDomain::uniform(self.horizon, 2 * self.nodes.len() - 1)
            .expect("refining a valid domain stays valid")
    }

    /// Rejects `t` outside `[0, T]`. Round-off of a few ulps at the ends is
    /// snapped back onto the interval.
    pub fn check(&self, t: f64) -> Result<f64> {
        let slack = self.horizon * 1e-12;
        if !t.is_finite() || t < -slack || t > self.horizon + slack {
            return Err(Error::OutOfDomain {
                t,
                horizon: self.horizon,
            });
        }
        Ok(t.clamp(0.0, self.horizon))
    }

    pub fn contains(&self, t: f64) -> bool {
        self.check(t).is_ok()
    }

    /// Index of the cell `[t_i, t_{i+1}]` containing `t` (clamped).
    pub fn cell_of(&self, t: f64) -> usize {
        let n = self.nodes.len();
        let i = (t / self.step()).floor();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(n - 2)
        }
    }

    pub fn same_horizon(&self, other: &TimeDomain) -> bool {
        (self.horizon - other.horizon).abs() <= 1e-12 * self.horizon.max(other.horizon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_are_exact() {
        let d = TimeDomain::uniform(0.7, 2049).unwrap();
        assert_eq!(d.nodes()[0], 0.0);
        assert_eq!(*d.nodes().last().unwrap(), 0.7);
        assert!(d.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(TimeDomain::uniform(0.0, 10).is_err());
        assert!(TimeDomain::uniform(f64::INFINITY, 10).is_err());
        assert!(TimeDomain::uniform(1.0, 2).is_err());
    }

    #[test]
    fn evaluation_outside_is_an_error() {
        let d = TimeDomain::uniform(1.0, 5).unwrap();
        assert!(matches!(d.check(1.5), Err(Error::OutOfDomain { .. })));
        assert!(d.check(-0.1).is_err());
        assert_eq!(d.check(1.0).unwrap(), 1.0);
    }

    #[test]
    fn refined_halves_the_step() {
        let d = TimeDomain::uniform(2.0, 9).unwrap();
        let r = d.refined();
        assert_eq!(r.len(), 17);
        assert!((r.step() - d.step() / 2.0).abs() < 1e-15);
    }
}
