//! Supremum of a function over `[0, T]`: grid scan, one-sided values at
//! breakpoints, then golden-section refinement around the best node.
//!
//! For smooth `g` the result under-approximates the true supremum by
//! `O(h^2 |g''|)` before refinement; narrow spikes between nodes can be
//! missed entirely.

use serde::{Deserialize, Serialize};

use super::domain::TimeDomain;
use super::trajectory::{Side, Trajectory};
use crate::error::Result;

/// Values within this distance of the maximum count as ties.
pub const ARGMAX_TIE_TOL: f64 = 1e-12;
/// Golden-section stops once the bracket is narrower than `T` times this.
pub const REFINE_REL_WIDTH: f64 = 1e-10;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupremumResult {
    pub value: f64,
    /// Smallest maximizing time.
    pub argmax: f64,
    /// `argmax ∈ (0, T]`.
    pub is_interior: bool,
    /// Largest maximizing time.
    pub last_argmax: f64,
}

/// Supremum of `g` over the grid of `domain`, including both one-sided values
/// at each breakpoint.
pub fn supremum<G>(g: G, domain: &TimeDomain, breakpoints: &[f64]) -> SupremumResult
where
    G: Fn(f64, Side) -> f64,
{
    let nodes: Vec<f64> = domain.nodes().iter().map(|&t| g(t, Side::Exact)).collect();
    let extra: Vec<(f64, f64)> = breakpoints
        .iter()
        .flat_map(|&b| [(b, g(b, Side::Below)), (b, g(b, Side::Above))])
        .collect();
    supremum_sampled(domain, &nodes, &extra, |t| Ok(g(t, Side::Exact)))
        .expect("infallible refinement")
}

/// Supremum from precomputed node values plus extra `(t, value)` candidates,
/// refined with `refine` near the best node.
pub fn supremum_sampled<R>(
    domain: &TimeDomain,
    node_values: &[f64],
    extra: &[(f64, f64)],
    mut refine: R,
) -> Result<SupremumResult>
where
    R: FnMut(f64) -> Result<f64>,
{
    let nodes = domain.nodes();
    assert_eq!(nodes.len(), node_values.len(), "one value per node");

    let best = node_values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > node_values[best] { i } else { best });
    let lo = nodes[best.saturating_sub(1)];
    let hi = nodes[(best + 1).min(nodes.len() - 1)];
    let refined = golden_max(&mut refine, lo, hi, domain.horizon() * REFINE_REL_WIDTH)?;

    let candidates = nodes
        .iter()
        .copied()
        .zip(node_values.iter().copied())
        .chain(extra.iter().copied())
        .chain(std::iter::once(refined));

    let mut value = f64::NEG_INFINITY;
    let mut all: Vec<(f64, f64)> = Vec::with_capacity(nodes.len() + extra.len() + 1);
    for (t, v) in candidates {
        if v.is_nan() {
            value = f64::NAN;
        } else if v > value {
            value = v;
        }
        all.push((t, v));
    }
    let ties = all.iter().filter(|(_, v)| *v >= value - ARGMAX_TIE_TOL);
    let (argmax, last_argmax) = ties.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(t, _)| {
        (a.min(t), b.max(t))
    });
    let (argmax, last_argmax) = if argmax.is_finite() {
        (argmax, last_argmax)
    } else {
        (nodes[best], nodes[best])
    };
    Ok(SupremumResult {
        value,
        argmax,
        is_interior: argmax > 0.0,
        last_argmax,
    })
}

/// Golden-section maximization on `[a, b]`; returns the better final probe.
fn golden_max<R>(g: &mut R, mut a: f64, mut b: f64, width: f64) -> Result<(f64, f64)>
where
    R: FnMut(f64) -> Result<f64>,
{
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = g(x1)?;
    let mut f2 = g(x2)?;
    while b - a > width {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = g(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = g(x2)?;
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// `‖f‖∞` including one-sided breakpoint values.
pub fn sup_norm(f: &Trajectory) -> f64 {
    sup_abs(f).value
}

/// Location and value of `max |f|`.
pub fn sup_abs(f: &Trajectory) -> SupremumResult {
    supremum(|t, s| f.value(t, s).abs(), f.domain(), f.breakpoint_times())
}

/// Interior times where `f - g` changes sign within a grid cell, located by
/// bisection. Sign changes across a breakpoint are left out since the
/// breakpoint is already a split point.
pub fn sign_changes(f: &Trajectory, g: &Trajectory) -> Vec<f64> {
    let mut knots: Vec<f64> = f
        .domain()
        .nodes()
        .iter()
        .chain(f.breakpoint_times())
        .chain(g.breakpoint_times())
        .copied()
        .collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let diff = |t: f64, side: Side| f.value(t, side) - g.value(t, side);
    let mut out = Vec::new();
    for w in knots.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let da = diff(a, Side::Above);
        let db = diff(b, Side::Below);
        if !(da * db < 0.0) {
            continue;
        }
        while b - a > f64::EPSILON * b.abs().max(1.0) {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if (diff(m, Side::Exact) < 0.0) == (da < 0.0) {
                a = m;
            } else {
                b = m;
            }
        }
        let root = 0.5 * (a + b);
        if root > w[0] && root < w[1] {
            out.push(root);
        }
    }
    out
}
