use std::fmt;
use std::sync::Arc;

use super::domain::TimeDomain;
use crate::error::{Error, Result};

/// Which value to take at a point where a piecewise function may jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Left limit `f(t-)`.
    Below,
    /// Right limit `f(t+)`.
    Above,
    /// The stored value: the right value at an interior breakpoint, the
    /// left value at `T`.
    Exact,
}

impl Side {
    /// The side seen by `tau = t - s` when `s` approaches from this side.
    pub fn mirrored(self) -> Side {
        match self {
            Side::Below => Side::Above,
            Side::Above => Side::Below,
            Side::Exact => Side::Exact,
        }
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Value function of a single continuous piece.
#[derive(Clone)]
pub enum PieceFn {
    Constant(f64),
    Closed(ScalarFn),
    /// Samples joined by straight lines. Times are strictly increasing and
    /// span the piece.
    Linear {
        times: Arc<[f64]>,
        values: Arc<[f64]>,
    },
}

impl PieceFn {
    pub fn closed(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        PieceFn::Closed(Arc::new(f))
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            PieceFn::Constant(c) => *c,
            PieceFn::Closed(f) => f(t),
            PieceFn::Linear { times, values } => interpolate(times, values, t),
        }
    }
}

impl fmt::Debug for PieceFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PieceFn::Constant(c) => write!(f, "Constant({c})"),
            PieceFn::Closed(_) => write!(f, "Closed(..)"),
            PieceFn::Linear { times, .. } => write!(f, "Linear({} samples)", times.len()),
        }
    }
}

fn interpolate(times: &[f64], values: &[f64], t: f64) -> f64 {
    let j = times.partition_point(|&x| x < t);
    if j == 0 {
        return values[0];
    }
    if j == times.len() {
        return values[j - 1];
    }
    if times[j] == t {
        return values[j];
    }
    let (t0, t1) = (times[j - 1], times[j]);
    let (v0, v1) = (values[j - 1], values[j]);
    v0 + (v1 - v0) * ((t - t0) / (t1 - t0))
}

#[derive(Debug, Clone)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub func: PieceFn,
}

/// An interior discontinuity (or declared split point) with its one-sided values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub t: f64,
    pub left: f64,
    pub right: f64,
}

impl Breakpoint {
    pub fn jump(&self) -> f64 {
        (self.right - self.left).abs()
    }
}

/// A piecewise-continuous function on `[0, T]`.
///
/// The pieces tile the horizon; interior piece boundaries are the
/// breakpoints. One-sided values at a breakpoint are read off the adjacent
/// pieces, so they always agree with the pieces' limits.
#[derive(Debug, Clone)]
pub struct Trajectory {
    domain: TimeDomain,
    pieces: Vec<Piece>,
    breaks: Vec<f64>,
}

impl Trajectory {
    pub fn from_fn(domain: &TimeDomain, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::single(domain, PieceFn::closed(f))
    }

    pub fn constant(domain: &TimeDomain, c: f64) -> Self {
        Self::single(domain, PieceFn::Constant(c))
    }

    pub fn zero(domain: &TimeDomain) -> Self {
        Self::constant(domain, 0.0)
    }

    fn single(domain: &TimeDomain, func: PieceFn) -> Self {
        Trajectory {
            domain: domain.clone(),
            pieces: vec![Piece {
                start: 0.0,
                end: domain.horizon(),
                func,
            }],
            breaks: Vec::new(),
        }
    }

    /// Builds a trajectory from interior breakpoints and one value function
    /// per resulting piece.
    pub fn piecewise(domain: &TimeDomain, breakpoints: &[f64], funcs: Vec<PieceFn>) -> Result<Self> {
        if funcs.len() != breakpoints.len() + 1 {
            return Err(Error::invalid(format!(
                "{} breakpoints need {} piece functions, got {}",
                breakpoints.len(),
                breakpoints.len() + 1,
                funcs.len()
            )));
        }
        let horizon = domain.horizon();
        let mut prev = 0.0;
        for &b in breakpoints {
            if !(b > prev && b < horizon) {
                return Err(Error::invalid(format!(
                    "breakpoints must be strictly increasing inside (0, {horizon}), got {b}"
                )));
            }
            prev = b;
        }
        let mut bounds = Vec::with_capacity(breakpoints.len() + 2);
        bounds.push(0.0);
        bounds.extend_from_slice(breakpoints);
        bounds.push(horizon);
        let pieces = funcs
            .into_iter()
            .enumerate()
            .map(|(i, func)| Piece {
                start: bounds[i],
                end: bounds[i + 1],
                func,
            })
            .collect();
        Ok(Trajectory {
            domain: domain.clone(),
            pieces,
            breaks: breakpoints.to_vec(),
        })
    }

    /// Indicator of `[0, t_star]`: one up to and including `t_star`, zero after.
    pub fn indicator(domain: &TimeDomain, t_star: f64) -> Result<Self> {
        Self::piecewise(
            domain,
            &[t_star],
            vec![PieceFn::Constant(1.0), PieceFn::Constant(0.0)],
        )
    }

    /// Sampled trajectory with linear interpolation. A repeated time encodes a
    /// breakpoint: the first sample is the left value, the second the right.
    pub fn from_samples(domain: &TimeDomain, times: &[f64], values: &[f64]) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid("times and values differ in length"));
        }
        if times.len() < 2 {
            return Err(Error::invalid("at least two samples are required"));
        }
        if times[0] != 0.0 {
            return Err(Error::invalid(format!(
                "first sample must be at t = 0, got {}",
                times[0]
            )));
        }
        let horizon = domain.horizon();
        let last = times[times.len() - 1];
        if (last - horizon).abs() > 1e-12 * horizon {
            return Err(Error::invalid(format!(
                "last sample at t = {last} does not match the horizon {horizon}"
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("non-finite sample value {v}")));
        }

        let mut breakpoints = Vec::new();
        let mut funcs = Vec::new();
        let mut seg_t: Vec<f64> = Vec::new();
        let mut seg_v: Vec<f64> = Vec::new();
        for i in 0..times.len() {
            let t = if i + 1 == times.len() { horizon } else { times[i] };
            if let Some(&prev) = seg_t.last() {
                if t < prev {
                    return Err(Error::invalid(format!(
                        "sample times must be sorted: {t} follows {prev}"
                    )));
                }
                if t == prev {
                    if i >= 2 && times[i - 2] == t {
                        return Err(Error::invalid(format!(
                            "time {t} appears more than twice"
                        )));
                    }
                    if t <= 0.0 || t >= horizon {
                        return Err(Error::invalid(format!(
                            "breakpoint at {t} is not interior"
                        )));
                    }
                    breakpoints.push(t);
                    funcs.push(PieceFn::Linear {
                        times: std::mem::take(&mut seg_t).into(),
                        values: std::mem::take(&mut seg_v).into(),
                    });
                }
            }
            seg_t.push(t);
            seg_v.push(values[i]);
        }
        funcs.push(PieceFn::Linear {
            times: seg_t.into(),
            values: seg_v.into(),
        });
        Self::piecewise(domain, &breakpoints, funcs)
    }

    pub fn domain(&self) -> &TimeDomain {
        &self.domain
    }

    pub fn horizon(&self) -> f64 {
        self.domain.horizon()
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn breakpoint_times(&self) -> &[f64] {
        &self.breaks
    }

    pub fn breakpoints(&self) -> Vec<Breakpoint> {
        self.breaks
            .iter()
            .enumerate()
            .map(|(i, &t)| Breakpoint {
                t,
                left: self.pieces[i].func.eval(t),
                right: self.pieces[i + 1].func.eval(t),
            })
            .collect()
    }

    pub fn is_continuous(&self) -> bool {
        self.breakpoints().iter().all(|b| b.left == b.right)
    }

    fn piece_index(&self, t: f64, side: Side) -> usize {
        match side {
            Side::Below => self.breaks.partition_point(|&b| b < t),
            Side::Above | Side::Exact => self.breaks.partition_point(|&b| b <= t),
        }
    }

    /// Unchecked evaluation; `t` must already lie in `[0, T]`.
    #[inline]
    pub(crate) fn value(&self, t: f64, side: Side) -> f64 {
        if self.breaks.is_empty() {
            return self.pieces[0].func.eval(t);
        }
        self.pieces[self.piece_index(t, side)].func.eval(t)
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        self.eval_side(t, Side::Exact)
    }

    pub fn eval_side(&self, t: f64, side: Side) -> Result<f64> {
        let t = self.domain.check(t)?;
        Ok(self.value(t, side))
    }

    /// Stored values at the grid nodes.
    pub fn node_values(&self) -> Vec<f64> {
        self.domain
            .nodes()
            .iter()
            .map(|&t| self.value(t, Side::Exact))
            .collect()
    }

    /// Same function sampled on another grid with the same horizon.
    pub fn with_domain(&self, domain: &TimeDomain) -> Result<Self> {
        if !self.domain.same_horizon(domain) {
            return Err(Error::invalid(format!(
                "horizon mismatch: {} vs {}",
                self.horizon(),
                domain.horizon()
            )));
        }
        let mut out = self.clone();
        out.domain = domain.clone();
        Ok(out)
    }

    pub fn map(&self, op: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| {
                let func = p.func.clone();
                let op = op.clone();
                Piece {
                    start: p.start,
                    end: p.end,
                    func: PieceFn::closed(move |t| op(func.eval(t))),
                }
            })
            .collect();
        Trajectory {
            domain: self.domain.clone(),
            pieces,
            breaks: self.breaks.clone(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(move |x| c * x)
    }

    /// Pointwise combination; the result breaks at the union of both
    /// breakpoint sets.
    pub fn zip_with(
        &self,
        other: &Trajectory,
        op: impl Fn(f64, f64) -> f64 + Send + Sync + Clone + 'static,
    ) -> Result<Self> {
        if !self.domain.same_horizon(&other.domain) {
            return Err(Error::invalid(format!(
                "horizon mismatch: {} vs {}",
                self.horizon(),
                other.horizon()
            )));
        }
        let mut breaks: Vec<f64> = self
            .breaks
            .iter()
            .chain(other.breaks.iter())
            .copied()
            .collect();
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        let mut bounds = vec![0.0];
        bounds.extend_from_slice(&breaks);
        bounds.push(self.horizon());
        let funcs = bounds
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                let fa = self.pieces[self.piece_index(mid, Side::Exact)].func.clone();
                let fb = other.pieces[other.piece_index(mid, Side::Exact)].func.clone();
                let op = op.clone();
                PieceFn::closed(move |t| op(fa.eval(t), fb.eval(t)))
            })
            .collect();
        Self::piecewise(&self.domain, &breaks, funcs)
    }

    pub fn sub(&self, other: &Trajectory) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn add(&self, other: &Trajectory) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    /// `(t, value)` rows at every grid node, with breakpoints written as two
    /// rows (left value first). Seventeen significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        let bps = self.breakpoints();
        let mut k = 0;
        let mut push = |t: f64, v: f64| {
            out.push_str(&format!("{t:.16e},{v:.16e}\n"));
        };
        for &t in self.domain.nodes() {
            while k < bps.len() && bps[k].t < t {
                push(bps[k].t, bps[k].left);
                push(bps[k].t, bps[k].right);
                k += 1;
            }
            if k < bps.len() && bps[k].t == t {
                push(t, bps[k].left);
                push(t, bps[k].right);
                k += 1;
                continue;
            }
            push(t, self.value(t, Side::Exact));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> TimeDomain {
        TimeDomain::uniform(1.0, n).unwrap()
    }

    #[test]
    fn one_sided_values_at_breakpoint() {
        let d = unit(5);
        let f = Trajectory::indicator(&d, 0.5).unwrap();
        assert_eq!(f.eval_side(0.5, Side::Below).unwrap(), 1.0);
        assert_eq!(f.eval_side(0.5, Side::Above).unwrap(), 0.0);
        assert_eq!(f.eval(0.5).unwrap(), 0.0);
        assert_eq!(f.eval(0.0).unwrap(), 1.0);
        assert_eq!(f.eval(1.0).unwrap(), 0.0);
        let b = f.breakpoints();
        assert_eq!(b, vec![Breakpoint { t: 0.5, left: 1.0, right: 0.0 }]);
        assert!(!f.is_continuous());
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let f = Trajectory::zero(&unit(5));
        assert!(f.eval(1.01).is_err());
        assert!(f.eval(-0.5).is_err());
    }

    #[test]
    fn samples_with_duplicate_time_make_a_breakpoint() {
        let d = unit(5);
        let f = Trajectory::from_samples(&d, &[0.0, 0.5, 0.5, 1.0], &[0.0, 1.0, 3.0, 5.0]).unwrap();
        assert_eq!(f.breakpoint_times(), &[0.5]);
        assert_eq!(f.eval(0.25).unwrap(), 0.5);
        assert_eq!(f.eval(0.75).unwrap(), 4.0);
        assert_eq!(f.eval_side(0.5, Side::Below).unwrap(), 1.0);
        assert_eq!(f.eval_side(0.5, Side::Above).unwrap(), 3.0);
    }

    #[test]
    fn malformed_samples_are_rejected() {
        let d = unit(5);
        assert!(Trajectory::from_samples(&d, &[0.1, 1.0], &[0.0, 0.0]).is_err());
        assert!(Trajectory::from_samples(&d, &[0.0, 0.9], &[0.0, 0.0]).is_err());
        assert!(Trajectory::from_samples(&d, &[0.0, 0.6, 0.5, 1.0], &[0.0; 4]).is_err());
        assert!(
            Trajectory::from_samples(&d, &[0.0, 0.5, 0.5, 0.5, 1.0], &[0.0; 5]).is_err()
        );
        assert!(Trajectory::from_samples(&d, &[0.0, 1.0], &[0.0, f64::NAN]).is_err());
    }

    #[test]
    fn zip_merges_breakpoints() {
        let d = unit(9);
        let a = Trajectory::indicator(&d, 0.25).unwrap();
        let b = Trajectory::indicator(&d, 0.75).unwrap();
        let s = a.add(&b).unwrap();
        assert_eq!(s.breakpoint_times(), &[0.25, 0.75]);
        assert_eq!(s.eval(0.1).unwrap(), 2.0);
        assert_eq!(s.eval(0.5).unwrap(), 1.0);
        assert_eq!(s.eval(0.9).unwrap(), 0.0);
        assert_eq!(s.eval_side(0.75, Side::Below).unwrap(), 1.0);
    }

    #[test]
    fn csv_round_trip_is_bit_exact_at_nodes() {
        let d = unit(33);
        let f = Trajectory::from_fn(&d, |t| (7.3 * t).sin() / 3.0 + 1e-3 * t.exp());
        let g = f.add(&Trajectory::indicator(&d, 0.3).unwrap()).unwrap();
        let csv = g.to_csv();
        let back = crate::grid::io::read_trajectory_csv(csv.as_bytes(), &d).unwrap();
        assert_eq!(back.node_values(), g.node_values());
        assert_eq!(back.breakpoints(), g.breakpoints());
    }
}
