//! Composite Simpson quadrature with declared split points.
//!
//! Each sub-interval between consecutive split points is integrated on its
//! own uniform grid, halving the panel width until two successive estimates
//! agree to `rel_tol * (1 + |value|)`. With a base step the sub-interval is
//! cut at the multiples of the step into chunks that refine independently. Endpoints of a sub-interval are
//! evaluated as one-sided limits from inside, so jumps at split points cost
//! nothing in accuracy.

use serde::{Deserialize, Serialize};

use super::trajectory::Side;
use crate::error::{Error, Result};

pub const DEFAULT_REL_TOL: f64 = 1e-8;
pub const MAX_HALVINGS: u32 = 14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub refinement_levels: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub max_levels: u32,
    /// Chunk width for local refinement, with cuts at its multiples. `None`
    /// refines every sub-interval as a whole.
    pub base_step: Option<f64>,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            rel_tol: DEFAULT_REL_TOL,
            max_levels: MAX_HALVINGS,
            base_step: None,
        }
    }
}

impl QuadratureConfig {
    pub fn with_tol(rel_tol: f64) -> Self {
        QuadratureConfig {
            rel_tol,
            ..Default::default()
        }
    }

    pub fn base_step(mut self, h: f64) -> Self {
        self.base_step = Some(h);
        self
    }
}

/// `∫_a^b f` split at every breakpoint strictly inside `(a, b)`.
///
/// The integrand receives the evaluation point and the side from which the
/// point is approached: `Side::Above` at the left end of a sub-interval,
/// `Side::Below` at its right end, `Side::Exact` inside.
pub fn integrate<F>(f: F, a: f64, b: f64, breakpoints: &[f64], rel_tol: f64) -> Result<QuadratureResult>
where
    F: Fn(f64, Side) -> f64,
{
    integrate_with(f, a, b, breakpoints, &QuadratureConfig::with_tol(rel_tol))
}

pub fn integrate_with<F>(
    f: F,
    a: f64,
    b: f64,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QuadratureResult>
where
    F: Fn(f64, Side) -> f64,
{
    if !(a <= b) {
        return Err(Error::invalid(format!("integration bounds out of order: [{a}, {b}]")));
    }
    if !(cfg.rel_tol > 0.0) {
        return Err(Error::invalid(format!("rel_tol must be positive, got {}", cfg.rel_tol)));
    }
    let mut cuts: Vec<f64> = Vec::with_capacity(breakpoints.len() + 2);
    cuts.push(a);
    let mut inner: Vec<f64> = breakpoints.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(b);

    let mut total = QuadratureResult {
        value: 0.0,
        error_estimate: 0.0,
        refinement_levels: 1,
    };
    for w in cuts.windows(2) {
        let seg = simpson_segment(&f, w[0], w[1], cfg)?;
        total.value += seg.value;
        total.error_estimate += seg.error_estimate;
        total.refinement_levels = total.refinement_levels.max(seg.refinement_levels);
    }
    Ok(total)
}

/// Convenience wrapper for integrands without one-sided behaviour.
pub fn integrate_plain(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> Result<QuadratureResult> {
    integrate(|x, _| f(x), a, b, &[], rel_tol)
}

fn simpson_segment<F>(f: &F, x0: f64, x1: f64, cfg: &QuadratureConfig) -> Result<QuadratureResult>
where
    F: Fn(f64, Side) -> f64,
{
    let width = x1 - x0;
    if width == 0.0 {
        return Ok(QuadratureResult {
            value: 0.0,
            error_estimate: 0.0,
            refinement_levels: 1,
        });
    }
    let edges: Vec<f64> = match cfg.base_step {
        Some(h) if h > 0.0 && width > h => {
            // cuts on multiples of h, so grid-aligned integrands are smooth per chunk
            let guard = 1e-9 * h;
            let first = ((x0 + guard) / h).ceil() as i64;
            let mut e = vec![x0];
            let mut k = first;
            while (k as f64) * h < x1 - guard {
                e.push(k as f64 * h);
                k += 1;
            }
            e.push(x1);
            e
        }
        _ => Vec::new(),
    };
    if edges.len() <= 2 {
        let ends = (f(x0, Side::Above), f(x1, Side::Below));
        return refine(f, x0, x1, ends, cfg.max_levels, |v| cfg.rel_tol * (1.0 + v.abs()));
    }

    // Each chunk refines on its own against a share of the tolerance
    // proportional to its width, so a kink only costs locally.
    let chunks = edges.len() - 1;
    let mut values: Vec<f64> = edges[1..chunks].iter().map(|&t| f(t, Side::Exact)).collect();
    values.insert(0, f(x0, Side::Above));
    values.push(f(x1, Side::Below));
    let coarse: f64 = (0..chunks)
        .map(|k| {
            let (a, b) = (edges[k], edges[k + 1]);
            (b - a) * (values[k] + 4.0 * f(0.5 * (a + b), Side::Exact) + values[k + 1]) / 6.0
        })
        .sum();
    let budget = cfg.rel_tol * (1.0 + coarse.abs()) / width;

    let mut total = QuadratureResult {
        value: 0.0,
        error_estimate: 0.0,
        refinement_levels: 1,
    };
    for k in 0..chunks {
        let (a, b) = (edges[k], edges[k + 1]);
        let tol = budget * (b - a);
        let r = refine(f, a, b, (values[k], values[k + 1]), cfg.max_levels, |_| tol)?;
        total.value += r.value;
        total.error_estimate += r.error_estimate;
        total.refinement_levels = total.refinement_levels.max(r.refinement_levels);
    }
    Ok(total)
}

/// Halves the panel width on `[x0, x1]` until successive Simpson estimates
/// differ by at most `tol(current)`.
fn refine<F>(
    f: &F,
    x0: f64,
    x1: f64,
    ends: (f64, f64),
    max_levels: u32,
    tol: impl Fn(f64) -> f64,
) -> Result<QuadratureResult>
where
    F: Fn(f64, Side) -> f64,
{
    let width = x1 - x0;
    let at = |k: usize, n: usize| x0 + width * (k as f64 / n as f64);
    let ends = ends.0 + ends.1;
    let rule = |n: usize, odd: f64, even: f64| (width / n as f64) * (ends + 4.0 * odd + 2.0 * even) / 3.0;

    let mut n = 2;
    let mut even = 0.0;
    let mut odd = f(at(1, 2), Side::Exact);
    let mut previous = rule(n, odd, even);
    let mut difference = f64::INFINITY;

    for level in 1..=max_levels {
        even += odd;
        n *= 2;
        odd = (0..n / 2).map(|j| f(at(2 * j + 1, n), Side::Exact)).sum();
        let current = rule(n, odd, even);
        difference = (current - previous).abs();
        if !current.is_finite() {
            break;
        }
        if difference <= tol(current) {
            return Ok(QuadratureResult {
                value: current,
                error_estimate: difference / 15.0,
                refinement_levels: level,
            });
        }
        previous = current;
    }
    Err(Error::NonConvergence {
        a: x0,
        b: x1,
        levels: max_levels,
        difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_is_exact_at_first_level() {
        let r = integrate_plain(|_| 1.0, 0.0, 1.0, 1e-8).unwrap();
        assert_eq!(r.value, 1.0);
        assert_eq!(r.refinement_levels, 1);
        assert_eq!(r.error_estimate, 0.0);
    }

    #[test]
    fn exponential_matches_antiderivative() {
        let r = integrate_plain(|t| (-t).exp(), 0.0, 1.0, 1e-12).unwrap();
        let exact = 1.0 - (-1.0f64).exp();
        assert!((exact - 0.6321205588).abs() < 1e-10);
        assert!((r.value - exact).abs() < 1e-10, "{}", r.value);
    }

    #[test]
    fn declared_breakpoint_integrates_step_exactly() {
        let step = |t: f64, side: Side| {
            let left = t < 0.5 || (t == 0.5 && side == Side::Below);
            if left { 2.0 } else { 0.0 }
        };
        let r = integrate(step, 0.0, 1.0, &[0.5], 1e-8).unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn undeclared_jump_fails_to_converge() {
        let r = integrate_plain(|t| if t < 1.0 / 3.0 { 1.0 } else { 0.0 }, 0.0, 1.0, 1e-14);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn bad_arguments() {
        assert!(integrate_plain(|_| 1.0, 1.0, 0.0, 1e-8).is_err());
        assert!(integrate_plain(|_| 1.0, 0.0, 1.0, 0.0).is_err());
        let r = integrate_plain(|_| 1.0, 0.3, 0.3, 1e-8).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.refinement_levels >= 1);
    }

    #[test]
    fn base_step_sets_initial_resolution() {
        // two panels alias this integrand to a constant 1
        let cfg = QuadratureConfig::with_tol(1e-10).base_step(1.0 / 64.0);
        let smooth = integrate_with(|t, _| (16.0 * std::f64::consts::PI * t).cos().powi(2), 0.0, 1.0, &[], &cfg)
            .unwrap();
        assert!((smooth.value - 0.5).abs() < 1e-9);
    }

    fn poly(c: &[f64], x: f64) -> f64 {
        c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
    }

    fn poly_integral(c: &[f64], a: f64, b: f64) -> f64 {
        c.iter()
            .enumerate()
            .map(|(k, &ck)| ck * (b.powi(k as i32 + 1) - a.powi(k as i32 + 1)) / (k as f64 + 1.0))
            .sum()
    }

    proptest! {
        #[test]
        fn quadratics_are_exact(c in prop::collection::vec(-10.0f64..10.0, 3), a in -2.0f64..0.0, w in 0.1f64..3.0) {
            let b = a + w;
            let r = integrate_plain(|x| poly(&c, x), a, b, 1e-8).unwrap();
            let exact = poly_integral(&c, a, b);
            prop_assert!((r.value - exact).abs() <= 1e-12 * (1.0 + exact.abs()) * 16.0);
            prop_assert!(r.error_estimate >= 0.0);
        }

        #[test]
        fn linear_in_the_integrand(
            f in prop::collection::vec(-3.0f64..3.0, 6),
            g in prop::collection::vec(-3.0f64..3.0, 6),
            alpha in -5.0f64..5.0,
            beta in -5.0f64..5.0,
        ) {
            let rf = integrate_plain(|x| poly(&f, x), 0.0, 1.0, 1e-10).unwrap();
            let rg = integrate_plain(|x| poly(&g, x), 0.0, 1.0, 1e-10).unwrap();
            let rc = integrate_plain(|x| alpha * poly(&f, x) + beta * poly(&g, x), 0.0, 1.0, 1e-10).unwrap();
            let combined = alpha * rf.value + beta * rg.value;
            let budget = rc.error_estimate + alpha.abs() * rf.error_estimate + beta.abs() * rg.error_estimate;
            prop_assert!((rc.value - combined).abs() <= budget + 1e-12, "{} vs {}", rc.value, combined);
        }
    }
}
