//! Seeded random trajectories.

use std::f64::consts::TAU;

use rand::Rng;

use crate::error::{Error, Result};
use crate::grid::{PieceFn, TimeDomain, Trajectory};

use super::config::{TrajectoryKind, TrajectorySpec};

pub const MAX_FOURIER_MODES: usize = 8;
pub const MAX_POLYNOMIAL_DEGREE: usize = 5;

/// Draws one trajectory of the given kind on `domain`.
pub fn random_trajectory<R: Rng + ?Sized>(rng: &mut R, spec: &TrajectorySpec, domain: &TimeDomain) -> Result<Trajectory> {
    let amp = spec.amplitude;
    if !(amp > 0.0 && amp.is_finite()) && spec.kind != TrajectoryKind::Zero {
        return Err(Error::invalid(format!("amplitude must be positive, got {amp}")));
    }
    let horizon = domain.horizon();
    match spec.kind {
        TrajectoryKind::Zero => Ok(Trajectory::zero(domain)),
        TrajectoryKind::Fourier => {
            let modes = rng.random_range(1..=MAX_FOURIER_MODES);
            // (cos, sin) coefficient pairs, mode 0 first
            let coeffs: Vec<(f64, f64)> = (0..=modes)
                .map(|k| {
                    let damp = amp / (k + 1) as f64;
                    (rng.random_range(-damp..=damp), rng.random_range(-damp..=damp))
                })
                .collect();
            Ok(Trajectory::from_fn(domain, move |t| {
                // harmonics by rotation from one sin_cos
                let (s1, c1) = (TAU * t / horizon).sin_cos();
                let (mut s, mut c) = (0.0, 1.0);
                let mut sum = 0.0;
                for (a, b) in &coeffs {
                    sum += a * c + b * s;
                    (s, c) = (s * c1 + c * s1, c * c1 - s * s1);
                }
                sum
            }))
        }
        TrajectoryKind::Polynomial => {
            let degree = rng.random_range(0..=MAX_POLYNOMIAL_DEGREE);
            let coeffs: Vec<f64> = (0..=degree).map(|_| rng.random_range(-amp..=amp)).collect();
            Ok(Trajectory::from_fn(domain, move |t| {
                let x = t / horizon;
                coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
            }))
        }
        TrajectoryKind::PiecewiseStep => {
            let times = match &spec.times {
                Some(t) => t.clone(),
                None => step_times(rng, spec.breakpoints, horizon),
            };
            let levels = match &spec.levels {
                Some(l) => l.clone(),
                None => (0..=times.len()).map(|_| rng.random_range(-amp..=amp)).collect(),
            };
            if levels.len() != times.len() + 1 {
                return Err(Error::invalid(format!(
                    "{} jump times need {} levels, got {}",
                    times.len(),
                    times.len() + 1,
                    levels.len()
                )));
            }
            Trajectory::piecewise(domain, &times, levels.into_iter().map(PieceFn::Constant).collect())
        }
    }
}

/// Sorted jump times in `(0.05 T, 0.95 T)` at least `T/1000` apart.
fn step_times<R: Rng + ?Sized>(rng: &mut R, count: usize, horizon: f64) -> Vec<f64> {
    let gap = horizon * 1e-3;
    loop {
        let mut t: Vec<f64> = (0..count)
            .map(|_| rng.random_range(0.05 * horizon..0.95 * horizon))
            .collect();
        t.sort_by(f64::total_cmp);
        if t.windows(2).all(|w| w[1] - w[0] >= gap) {
            return t;
        }
    }
}
