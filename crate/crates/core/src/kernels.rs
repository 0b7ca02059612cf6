//! Memory kernels `κ(τ)` on the lag interval `[0, T]` and their numerical
//! admissibility classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    integrate_with, QuadratureConfig, Side, TimeDomain, Trajectory, DEFAULT_REL_TOL,
};

/// Constants known in closed form for a kernel. Any subset may be present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DeclaredConstants {
    /// `m_κ`: positive lower bound.
    pub lower_bound: Option<f64>,
    /// `M_κ`: upper bound.
    pub upper_bound: Option<f64>,
    /// `L_κ`: Lipschitz constant.
    pub lipschitz: Option<f64>,
    /// `C_κ`: essential bound of `|κ|`.
    pub essential_bound: Option<f64>,
    /// `δ_κ`: lower bound of `|∫κ|`.
    pub nondegeneracy: Option<f64>,
    pub total_variation: Option<f64>,
    pub integral: Option<f64>,
}

#[derive(Debug, Clone)]
enum Shape {
    Exponential { alpha: f64, scale: f64 },
    PowerLaw { gamma: f64, epsilon: f64, scale: f64 },
    FiniteMemory { delta: f64 },
    Tabulated(Trajectory),
}

/// A stationary memory kernel: the weight of a state `τ = t - s` time units old.
#[derive(Debug, Clone)]
pub struct Kernel {
    domain: TimeDomain,
    shape: Shape,
    breakpoints: Vec<f64>,
    declared: DeclaredConstants,
}

impl Kernel {
    /// `κ(τ) = α e^{-ατ} / (1 - e^{-αT})`, normalized on `[0, T]`.
    pub fn exponential(alpha: f64, domain: &TimeDomain) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(format!("exponential rate must be positive, got {alpha}")));
        }
        let t = domain.horizon();
        let norm = -(-alpha * t).exp_m1();
        let scale = alpha / norm;
        Ok(Kernel {
            domain: domain.clone(),
            shape: Shape::Exponential { alpha, scale },
            breakpoints: Vec::new(),
            declared: DeclaredConstants {
                lower_bound: Some(scale * (-alpha * t).exp()),
                upper_bound: Some(scale),
                lipschitz: Some(alpha * scale),
                essential_bound: Some(scale),
                nondegeneracy: Some(1.0),
                total_variation: Some(scale * norm),
                integral: Some(1.0),
            },
        })
    }

    /// `κ(τ) = ((1-γ)/T^{1-γ}) (T - τ + ε)^{-γ}`. Increasing in `τ`, total
    /// mass strictly below one.
    pub fn power_law(gamma: f64, epsilon: f64, domain: &TimeDomain) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::invalid(format!("power-law exponent must lie in (0, 1), got {gamma}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!("power-law offset must be positive, got {epsilon}")));
        }
        let t = domain.horizon();
        let scale = (1.0 - gamma) / t.powf(1.0 - gamma);
        let upper = scale * epsilon.powf(-gamma);
        let lower = scale * (t + epsilon).powf(-gamma);
        let integral = ((t + epsilon).powf(1.0 - gamma) - epsilon.powf(1.0 - gamma)) / t.powf(1.0 - gamma);
        Ok(Kernel {
            domain: domain.clone(),
            shape: Shape::PowerLaw { gamma, epsilon, scale },
            breakpoints: Vec::new(),
            declared: DeclaredConstants {
                lower_bound: Some(lower),
                upper_bound: Some(upper),
                lipschitz: Some(gamma * scale * epsilon.powf(-gamma - 1.0)),
                essential_bound: Some(upper),
                nondegeneracy: Some(integral),
                total_variation: Some(upper - lower),
                integral: Some(integral),
            },
        })
    }

    /// `κ = 1/Δ` on `[0, Δ]`, zero on `(Δ, T]`.
    pub fn finite_memory(delta: f64, domain: &TimeDomain) -> Result<Self> {
        let t = domain.horizon();
        if !(delta > 0.0 && delta <= t) {
            return Err(Error::invalid(format!("memory window must lie in (0, {t}], got {delta}")));
        }
        let full = delta == t;
        Ok(Kernel {
            domain: domain.clone(),
            shape: Shape::FiniteMemory { delta },
            breakpoints: if full { Vec::new() } else { vec![delta] },
            declared: DeclaredConstants {
                lower_bound: if full { Some(1.0 / delta) } else { None },
                upper_bound: Some(1.0 / delta),
                lipschitz: None,
                essential_bound: Some(1.0 / delta),
                nondegeneracy: Some(1.0),
                total_variation: Some(1.0 / delta),
                integral: Some(1.0),
            },
        })
    }

    /// Kernel given by a closed-form function, no declared constants.
    pub fn from_fn(domain: &TimeDomain, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::tabulated(Trajectory::from_fn(domain, f))
    }

    /// Kernel read off a trajectory over `τ ∈ [0, T]`; its breakpoints become
    /// the kernel's discontinuities.
    pub fn tabulated(values: Trajectory) -> Self {
        Kernel {
            domain: values.domain().clone(),
            breakpoints: values.breakpoint_times().to_vec(),
            shape: Shape::Tabulated(values),
            declared: DeclaredConstants::default(),
        }
    }

    /// Replaces the declared constants after checking the bounds against the grid.
    pub fn with_declared(mut self, declared: DeclaredConstants) -> Result<Self> {
        self.declared = declared;
        self.check_declared()?;
        Ok(self)
    }

    fn check_declared(&self) -> Result<()> {
        let d = &self.declared;
        if let Some(m) = d.lower_bound {
            if !(m > 0.0) {
                return Err(Error::invalid(format!("declared lower bound must be positive, got {m}")));
            }
        }
        let values = self.partition_values();
        let slack = |b: f64| 1e-12 * b.abs().max(1.0);
        for &v in &values {
            if let Some(m) = d.lower_bound {
                if v < m - slack(m) {
                    return Err(Error::invalid(format!("kernel value {v} below declared lower bound {m}")));
                }
            }
            if let Some(big) = d.upper_bound {
                if v > big + slack(big) {
                    return Err(Error::invalid(format!("kernel value {v} above declared upper bound {big}")));
                }
            }
        }
        if let Some(tv) = d.total_variation {
            let est = variation(&values);
            if est > tv + 1e-9 {
                return Err(Error::invalid(format!(
                    "grid variation {est} exceeds declared total variation {tv}"
                )));
            }
        }
        Ok(())
    }

    pub fn domain(&self) -> &TimeDomain {
        &self.domain
    }

    pub fn horizon(&self) -> f64 {
        self.domain.horizon()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn declared(&self) -> &DeclaredConstants {
        &self.declared
    }

    pub fn name(&self) -> String {
        match &self.shape {
            Shape::Exponential { alpha, .. } => format!("exponential(alpha={alpha})"),
            Shape::PowerLaw { gamma, epsilon, .. } => format!("power_law(gamma={gamma}, epsilon={epsilon})"),
            Shape::FiniteMemory { delta } => format!("finite_memory(delta={delta})"),
            Shape::Tabulated(_) => "tabulated".to_string(),
        }
    }

    /// `(c, a)` when `κ(τ) = c e^{-aτ}` on all of `[0, T]` (with `a ≥ 0`).
    pub fn exponential_form(&self) -> Option<(f64, f64)> {
        match &self.shape {
            Shape::Exponential { alpha, scale } => Some((*scale, *alpha)),
            Shape::FiniteMemory { delta } if self.breakpoints.is_empty() => Some((1.0 / delta, 0.0)),
            _ => None,
        }
    }

    #[inline]
    pub(crate) fn value(&self, tau: f64, side: Side) -> f64 {
        match &self.shape {
            Shape::Exponential { alpha, scale } => scale * (-alpha * tau).exp(),
            Shape::PowerLaw { gamma, epsilon, scale } => {
                scale * (self.domain.horizon() - tau + epsilon).powf(-gamma)
            }
            Shape::FiniteMemory { delta } => {
                if tau < *delta || (tau == *delta && side != Side::Above) {
                    1.0 / delta
                } else {
                    0.0
                }
            }
            Shape::Tabulated(f) => f.value(tau, side),
        }
    }

    pub fn eval(&self, tau: f64) -> Result<f64> {
        self.eval_side(tau, Side::Exact)
    }

    pub fn eval_side(&self, tau: f64, side: Side) -> Result<f64> {
        let tau = self.domain.check(tau)?;
        Ok(self.value(tau, side))
    }

    /// Values along the partition formed by the grid nodes and the
    /// breakpoints; each breakpoint contributes its left, point and right
    /// values in that order.
    fn partition_values(&self) -> Vec<f64> {
        let nodes = self.domain.nodes();
        let mut out = Vec::with_capacity(nodes.len() + 3 * self.breakpoints.len());
        let mut k = 0;
        for &t in nodes {
            while k < self.breakpoints.len() && self.breakpoints[k] <= t {
                let b = self.breakpoints[k];
                out.push(self.value(b, Side::Below));
                out.push(self.value(b, Side::Exact));
                out.push(self.value(b, Side::Above));
                k += 1;
                if b == t {
                    break;
                }
            }
            if k > 0 && self.breakpoints[k - 1] == t {
                continue;
            }
            out.push(self.value(t, Side::Exact));
        }
        out
    }

    /// Grid estimate of the total variation on `[0, T]`.
    pub fn total_variation(&self) -> f64 {
        variation(&self.partition_values())
    }

    fn quadrature(&self, rel_tol: f64) -> QuadratureConfig {
        QuadratureConfig::with_tol(rel_tol).base_step(self.domain.step())
    }
}

fn variation(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).abs()).sum()
}

// ---------------------------------------------------------------------------
// Classification

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Condition {
    M1,
    M2,
    M3,
    R1,
    R2,
    R3,
    G1,
    G2,
    G3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionFailure {
    pub condition: Condition,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyTolerances {
    /// M1 accepts values down to `-zero`.
    pub zero: f64,
    /// R1 requires the minimum value to reach this.
    pub positivity: f64,
    /// R2: `|∫κ - 1|` bound.
    pub normalization: f64,
    /// G2: `|∫κ|` lower bound.
    pub nondegeneracy: f64,
    pub rel_tol: f64,
}

impl Default for ClassifyTolerances {
    fn default() -> Self {
        ClassifyTolerances {
            zero: 1e-12,
            positivity: 1e-12,
            normalization: 1e-6,
            nondegeneracy: 1e-12,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelMeasurements {
    pub integral: f64,
    pub min_value: f64,
    pub max_value: f64,
    pub lipschitz_estimate: f64,
    pub total_variation_estimate: f64,
    pub abs_integral: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantSource {
    Declared,
    Empirical,
    Unavailable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    pub kernel: String,
    pub class_math: bool,
    pub class_regular: bool,
    pub class_generalized: bool,
    pub measurements: KernelMeasurements,
    pub failures: Vec<ConditionFailure>,
    /// Where the R3 verdict came from. Empirical slopes only bound the true
    /// constant from below.
    pub lipschitz_source: ConstantSource,
    /// Positivity and boundedness are certified at sampled points only.
    pub sampled_certificate: bool,
}

impl AdmissibilityReport {
    pub fn failed(&self, condition: Condition) -> bool {
        self.failures.iter().any(|f| f.condition == condition)
    }
}

/// Measures the kernel on its grid and judges conditions M1–M3, R1–R3, G1–G3.
/// Failures are reported, never raised.
pub fn classify(kernel: &Kernel, tol: &ClassifyTolerances) -> AdmissibilityReport {
    let values = kernel.partition_values();
    let min_value = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max_value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let max_abs = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let total_variation_estimate = variation(&values);

    let nodes = kernel.domain.nodes();
    let lipschitz_estimate = nodes
        .windows(2)
        .map(|w| (kernel.value(w[1], Side::Exact) - kernel.value(w[0], Side::Exact)).abs() / (w[1] - w[0]))
        .fold(0.0, f64::max);

    let cfg = kernel.quadrature(tol.rel_tol);
    let integral = integrate_with(
        |t, s| kernel.value(t, s),
        0.0,
        kernel.horizon(),
        &kernel.breakpoints,
        &cfg,
    )
    .map(|r| r.value)
    .unwrap_or(f64::NAN);
    let abs_integral = if min_value >= 0.0 {
        integral
    } else {
        let mut splits = kernel.breakpoints.clone();
        splits.extend(sign_changes(kernel));
        integrate_with(|t, s| kernel.value(t, s).abs(), 0.0, kernel.horizon(), &splits, &cfg)
            .map(|r| r.value)
            .unwrap_or(f64::NAN)
    };

    let mut failures = Vec::new();
    let mut fail = |condition, message: String| failures.push(ConditionFailure { condition, message });

    // M: mathematically admissible
    if !(min_value >= -tol.zero) {
        fail(Condition::M1, format!("kernel takes the negative value {min_value:e}"));
    }
    if !abs_integral.is_finite() {
        fail(Condition::M2, "∫|κ| is not finite (quadrature did not converge)".into());
    }
    // M3 holds structurally: every representation is piecewise continuous.

    // R: regular
    if !(min_value >= tol.positivity) {
        fail(
            Condition::R1,
            format!("minimum value {min_value:e} is not bounded away from zero"),
        );
    } else if !max_value.is_finite() {
        fail(Condition::R1, "kernel is unbounded on the grid".into());
    }
    if !((integral - 1.0).abs() <= tol.normalization) {
        fail(
            Condition::R2,
            format!("∫κ = {integral:.10} is not normalized (tolerance {:e})", tol.normalization),
        );
    }
    let jumps: Vec<(f64, f64)> = kernel
        .breakpoints
        .iter()
        .map(|&b| (b, (kernel.value(b, Side::Above) - kernel.value(b, Side::Below)).abs()))
        .filter(|&(_, j)| j > 0.0)
        .collect();
    let lipschitz_source = if let Some(&(b, j)) = jumps.first() {
        fail(
            Condition::R3,
            format!("jump discontinuity of height {j} at τ = {b}; no Lipschitz constant exists"),
        );
        ConstantSource::Unavailable
    } else if kernel.declared.lipschitz.is_some() {
        ConstantSource::Declared
    } else if lipschitz_estimate.is_finite() {
        ConstantSource::Empirical
    } else {
        fail(Condition::R3, "difference quotients are unbounded on the grid".into());
        ConstantSource::Unavailable
    };

    // G: generalized
    if !max_abs.is_finite() {
        fail(Condition::G1, "kernel is not bounded on the grid".into());
    }
    if !abs_integral.is_finite() {
        fail(Condition::G2, "∫|κ| is not finite".into());
    } else if !(integral.abs() >= tol.nondegeneracy) {
        fail(
            Condition::G2,
            format!("|∫κ| = {:e} is below the non-degeneracy threshold {:e}", integral.abs(), tol.nondegeneracy),
        );
    }
    if !total_variation_estimate.is_finite() {
        fail(Condition::G3, "grid variation is not finite".into());
    }

    let has = |c: Condition| failures.iter().any(|f| f.condition == c);
    let class_math = !has(Condition::M1) && !has(Condition::M2) && !has(Condition::M3);
    let class_regular = class_math && !has(Condition::R1) && !has(Condition::R2) && !has(Condition::R3);
    let class_generalized = !has(Condition::G1) && !has(Condition::G2) && !has(Condition::G3);

    AdmissibilityReport {
        kernel: kernel.name(),
        class_math,
        class_regular,
        class_generalized,
        measurements: KernelMeasurements {
            integral,
            min_value,
            max_value,
            lipschitz_estimate,
            total_variation_estimate,
            abs_integral,
        },
        failures,
        lipschitz_source,
        sampled_certificate: true,
    }
}

/// Zeros of the kernel located by bisection inside grid cells whose end
/// values differ in sign.
fn sign_changes(kernel: &Kernel) -> Vec<f64> {
    let nodes = kernel.domain.nodes();
    let mut out = Vec::new();
    for w in nodes.windows(2) {
        let (mut a, mut b) = (w[0], w[1]);
        let mut fa = kernel.value(a, Side::Above);
        let fb = kernel.value(b, Side::Below);
        if fa * fb >= 0.0 {
            continue;
        }
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            let fm = kernel.value(m, Side::Exact);
            if fm * fa > 0.0 {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}

// ---------------------------------------------------------------------------
// Integral estimates

/// `∫_0^t κ(τ) dτ`, the cumulative weight seen at time `t`.
pub fn cumulative_weight(kernel: &Kernel, t: f64) -> Result<f64> {
    let t = kernel.domain.check(t)?;
    let cfg = kernel.quadrature(DEFAULT_REL_TOL);
    Ok(integrate_with(|tau, s| kernel.value(tau, s), 0.0, t, &kernel.breakpoints, &cfg)?.value)
}

/// Split points in `s ∈ (0, t)` for an integrand containing `κ(t - s)` and a
/// trajectory with the given breakpoints.
pub(crate) fn convolution_splits(kernel: &Kernel, t: f64, trajectory_breaks: &[f64]) -> Vec<f64> {
    let mut splits: Vec<f64> = trajectory_breaks.iter().copied().filter(|&b| b < t).collect();
    splits.extend(kernel.breakpoints.iter().filter(|&&b| b < t).map(|&b| t - b));
    splits
}

fn check_pair(kernel: &Kernel, f: &Trajectory, t: f64) -> Result<f64> {
    if !kernel.domain.same_horizon(f.domain()) {
        return Err(Error::invalid(format!(
            "kernel horizon {} differs from trajectory horizon {}",
            kernel.horizon(),
            f.horizon()
        )));
    }
    kernel.domain.check(t)
}

fn convolve(
    kernel: &Kernel,
    f: &Trajectory,
    t: f64,
    term: impl Fn(f64, Side, f64) -> f64,
) -> Result<f64> {
    let t = check_pair(kernel, f, t)?;
    let splits = convolution_splits(kernel, t, f.breakpoint_times());
    let cfg = QuadratureConfig::with_tol(DEFAULT_REL_TOL).base_step(f.domain().step());
    let r = integrate_with(
        |s, side| term(s, side, kernel.value(t - s, side.mirrored())),
        0.0,
        t,
        &splits,
        &cfg,
    )?;
    Ok(r.value)
}

/// `∫_0^t w(s) κ(t-s) |f(s)| ds`, with `w ≡ 1` when no weight is given.
pub fn weighted_convolution(
    kernel: &Kernel,
    f: &Trajectory,
    t: f64,
    weight: Option<&(dyn Fn(f64) -> f64 + Sync)>,
) -> Result<f64> {
    convolve(kernel, f, t, |s, side, k| {
        let w = weight.map_or(1.0, |w| w(s));
        w * k * f.value(s, side).abs()
    })
}

/// `∫_0^t κ(t-s) f(s) ds` without absolute values, for sign-changing kernels.
pub fn signed_convolution(kernel: &Kernel, f: &Trajectory, t: f64) -> Result<f64> {
    convolve(kernel, f, t, |s, side, k| k * f.value(s, side))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit() -> TimeDomain {
        TimeDomain::uniform(1.0, 2049).unwrap()
    }

    #[test]
    fn exponential_constants_and_values() {
        let k = Kernel::exponential(1.0, &unit()).unwrap();
        // 1 / (1 - e^{-1}) evaluated independently
        assert!((k.eval(0.0).unwrap() - 1.581_976_706_869_326_4).abs() < 1e-12);
        let d = k.declared();
        let e = (-1.0f64).exp();
        assert!((d.upper_bound.unwrap() - 1.0 / (1.0 - e)).abs() < 1e-14);
        assert!((d.lower_bound.unwrap() - e / (1.0 - e)).abs() < 1e-14);
        assert!((d.lipschitz.unwrap() - 1.0 / (1.0 - e)).abs() < 1e-14);
        assert!((cumulative_weight(&k, 1.0).unwrap() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn invalid_parameters() {
        let d = unit();
        assert!(Kernel::exponential(0.0, &d).is_err());
        assert!(Kernel::exponential(-1.0, &d).is_err());
        assert!(Kernel::power_law(0.0, 0.1, &d).is_err());
        assert!(Kernel::power_law(1.0, 0.1, &d).is_err());
        assert!(Kernel::power_law(0.5, 0.0, &d).is_err());
        assert!(Kernel::finite_memory(0.0, &d).is_err());
        assert!(Kernel::finite_memory(1.5, &d).is_err());
    }

    #[test]
    fn power_law_mass_below_one() {
        let k = Kernel::power_law(0.5, 0.25, &unit()).unwrap();
        let mass = cumulative_weight(&k, 1.0).unwrap();
        let exact = 1.25f64.sqrt() - 0.5;
        assert!((exact - 0.618_033_988_7).abs() < 1e-10);
        assert!((mass - exact).abs() < 1e-8);
        assert!(mass < 1.0);
        let r = classify(&k, &ClassifyTolerances::default());
        assert!(r.class_generalized && !r.class_regular && r.class_math);
        assert!(r.failed(Condition::R2));
        assert!(!r.failed(Condition::R1) && !r.failed(Condition::R3));
    }

    #[test]
    fn finite_memory_variation_and_classes() {
        let d = unit();
        let k = Kernel::finite_memory(0.5, &d).unwrap();
        assert_eq!(k.total_variation(), 2.0);
        let r = classify(&k, &ClassifyTolerances::default());
        assert!(r.class_generalized && !r.class_regular);
        let r3 = r.failures.iter().find(|f| f.condition == Condition::R3).unwrap();
        assert!(r3.message.contains("0.5"), "{}", r3.message);

        let full = Kernel::finite_memory(1.0, &d).unwrap();
        let r = classify(&full, &ClassifyTolerances::default());
        assert!(r.class_regular, "{:?}", r.failures);
        assert_eq!(r.lipschitz_source, ConstantSource::Empirical);
    }

    #[test]
    fn finite_memory_variation_off_grid() {
        // window end between nodes
        let d = TimeDomain::uniform(1.0, 10).unwrap();
        let k = Kernel::finite_memory(0.3, &d).unwrap();
        assert!((k.total_variation() - 1.0 / 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_kernel_is_degenerate() {
        let k = Kernel::from_fn(&unit(), |_| 0.0);
        let r = classify(&k, &ClassifyTolerances::default());
        assert!(r.failed(Condition::G2));
        assert!(!r.class_generalized && !r.class_regular);
    }

    #[test]
    fn sign_changing_kernel_is_generalized_only() {
        let k = Kernel::from_fn(&unit(), |t| 2.0 - 3.0 * t);
        let r = classify(&k, &ClassifyTolerances::default());
        assert!(r.failed(Condition::M1));
        assert!(r.class_generalized);
        // ∫|2-3τ| over [0,1] = 2/3 + 1/6
        assert!((r.measurements.abs_integral - 5.0 / 6.0).abs() < 1e-9);
        assert!((r.measurements.integral - 0.5).abs() < 1e-12);
    }

    #[test]
    fn declared_bounds_are_checked() {
        let k = Kernel::from_fn(&unit(), |t| 1.0 + t);
        let bad = DeclaredConstants {
            upper_bound: Some(1.5),
            ..Default::default()
        };
        assert!(k.clone().with_declared(bad).is_err());
        let ok = DeclaredConstants {
            lower_bound: Some(1.0),
            upper_bound: Some(2.0),
            total_variation: Some(1.0),
            ..Default::default()
        };
        assert!(k.with_declared(ok).is_ok());
    }

    #[test]
    fn cumulative_weight_closed_form() {
        let k = Kernel::exponential(1.0, &unit()).unwrap();
        assert_eq!(cumulative_weight(&k, 0.0).unwrap(), 0.0);
        let e = (-1.0f64).exp();
        let exact = (1.0 - (-0.5f64).exp()) / (1.0 - e);
        assert!((exact - 0.622_459_331_2).abs() < 1e-10);
        assert!((cumulative_weight(&k, 0.5).unwrap() - exact).abs() < 1e-8);
        assert!(cumulative_weight(&k, 1.5).is_err());
    }

    #[test]
    fn convolution_examples() {
        let d = unit();
        let k = Kernel::exponential(1.0, &d).unwrap();
        assert_eq!(weighted_convolution(&k, &Trajectory::zero(&d), 0.7, None).unwrap(), 0.0);
        let one = Trajectory::constant(&d, 1.0);
        assert!((weighted_convolution(&k, &one, 1.0, None).unwrap() - 1.0).abs() < 1e-8);
        let w = |s: f64| 2.0 + s;
        let direct = weighted_convolution(&k, &one, 1.0, Some(&w)).unwrap();
        // ∫ (2+s) κ(1-s) ds in closed form
        let e = (-1.0f64).exp();
        let exact = (2.0 * (1.0 - e) + (e)) / (1.0 - e) ;
        assert!((direct - exact).abs() < 1e-8, "{direct} vs {exact}");
    }

    #[test]
    fn finite_memory_convolution_splits_at_window() {
        let d = unit();
        let k = Kernel::finite_memory(0.25, &d).unwrap();
        let f = Trajectory::from_fn(&d, |s| s);
        // ∫_{t-Δ}^{t} s/Δ ds = t - Δ/2 for t ≥ Δ
        let t = 0.8;
        let v = weighted_convolution(&k, &f, t, None).unwrap();
        assert!((v - (t - 0.125)).abs() < 1e-12, "{v}");
    }

    proptest! {
        #[test]
        fn cumulative_weight_monotone_and_bounded(alpha in 0.1f64..8.0, horizon in 0.5f64..3.0) {
            let d = TimeDomain::uniform(horizon, 65).unwrap();
            let k = Kernel::exponential(alpha, &d).unwrap();
            let mut prev = 0.0;
            for &t in d.nodes() {
                let w = cumulative_weight(&k, t).unwrap();
                // independent quadratures: monotone up to the quadrature tolerance
                prop_assert!(w >= prev - 1e-8);
                prop_assert!(w <= 1.0 + 1e-8);
                prev = w;
            }
        }

        #[test]
        fn monotone_kernel_variation_telescopes(gamma in 0.05f64..0.95, eps in 0.01f64..2.0) {
            let k = Kernel::power_law(gamma, eps, &TimeDomain::uniform(1.0, 513).unwrap()).unwrap();
            let expected = (k.eval(1.0).unwrap() - k.eval(0.0).unwrap()).abs();
            prop_assert!((k.total_variation() - expected).abs() < 1e-10);
        }

        #[test]
        fn difference_control_for_regular_kernels(
            a in prop::collection::vec(-2.0f64..2.0, 4),
            b in prop::collection::vec(-2.0f64..2.0, 4),
            alpha in 0.2f64..6.0,
            t in 0.0f64..1.0,
        ) {
            let d = TimeDomain::uniform(1.0, 257).unwrap();
            let k = Kernel::exponential(alpha, &d).unwrap();
            let fa = Trajectory::from_fn(&d, move |s| a[0] + a[1] * s + a[2] * (5.0 * s).sin() + a[3] * (9.0 * s).cos());
            let fb = Trajectory::from_fn(&d, move |s| b[0] + b[1] * s + b[2] * (5.0 * s).sin() + b[3] * (9.0 * s).cos());
            let diff = fa.sub(&fb).unwrap();
            let lhs = signed_convolution(&k, &diff, t).unwrap().abs();
            prop_assert!(lhs <= crate::grid::sup_norm(&diff) + 1e-8);
        }

        #[test]
        fn generalized_estimate_with_abs_mass(
            c in prop::collection::vec(-2.0f64..2.0, 3),
            t in 0.0f64..1.0,
        ) {
            let d = TimeDomain::uniform(1.0, 257).unwrap();
            let k = Kernel::from_fn(&d, |tau| (6.0 * tau).cos() - 0.2);
            let mass = classify(&k, &ClassifyTolerances::default()).measurements.abs_integral;
            let f = Trajectory::from_fn(&d, move |s| c[0] + c[1] * (3.0 * s).sin() + c[2] * s * s);
            let lhs = signed_convolution(&k, &f, t).unwrap().abs();
            prop_assert!(lhs <= crate::grid::sup_norm(&f) * mass + 1e-8);
        }
    }
}
