//! The weighted cumulative function `J_f`, the hybrid `M_f = |f| + J_f`,
//! and the functional `S(f) = sup_t M_f(t)`.
//!
//! At a jump of `f`, `M_f` is evaluated with both one-sided values of `|f|`
//! and the larger one enters the supremum.

use std::borrow::Cow;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    integrate_with, sign_changes, sup_abs, supremum_sampled, QuadratureConfig, Side, Trajectory, DEFAULT_REL_TOL,
};
use crate::kernels::{classify, convolution_splits, AdmissibilityReport, ClassifyTolerances, Kernel};
use crate::sensitivity::{induce_with, AccumulatorMethod, InducedSensitivity, SensitivityModel};

pub const JUMP_CONVENTION: &str = "at a jump of f, M uses the larger one-sided value of |f|";

/// `‖f‖∞` at or below this counts as the zero trajectory.
pub const DEGENERATE_NORM: f64 = 1e-12;

/// A kernel that passed the regular-class checks.
#[derive(Debug, Clone)]
pub struct RegularKernel {
    kernel: Kernel,
    report: AdmissibilityReport,
}

impl RegularKernel {
    pub fn new(kernel: Kernel) -> Result<Self> {
        let report = classify(&kernel, &ClassifyTolerances::default());
        if !report.class_regular {
            let failed: Vec<String> = report
                .failures
                .iter()
                .map(|f| format!("{:?}: {}", f.condition, f.message))
                .collect();
            return Err(Error::UnsupportedKernelClass(format!(
                "{} is not a regular kernel ({})",
                kernel.name(),
                failed.join("; ")
            )));
        }
        Ok(RegularKernel { kernel, report })
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn report(&self) -> &AdmissibilityReport {
        &self.report
    }

    /// `κ∞`: the declared bound when available, else the grid maximum.
    pub fn kappa_inf(&self) -> (f64, KappaSource) {
        match self.kernel.declared().upper_bound {
            Some(m) => (m, KappaSource::Declared),
            None => (self.report.measurements.max_value, KappaSource::GridMaximum),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KappaSource {
    Declared,
    GridMaximum,
}

/// The sensitivity entering `J_f`.
#[derive(Debug, Clone, Copy)]
pub enum SensitivityInput<'a> {
    /// Operator models are induced on the trajectory being measured.
    Model(&'a SensitivityModel),
    Induced(&'a InducedSensitivity),
}

impl<'a> From<&'a SensitivityModel> for SensitivityInput<'a> {
    fn from(m: &'a SensitivityModel) -> Self {
        SensitivityInput::Model(m)
    }
}

impl<'a> From<&'a InducedSensitivity> for SensitivityInput<'a> {
    fn from(m: &'a InducedSensitivity) -> Self {
        SensitivityInput::Induced(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalOptions {
    pub rel_tol: f64,
    /// Use the exponential-kernel recurrence for `J_f` when available.
    pub fast_path: bool,
    pub accumulator: AccumulatorMethod,
}

impl Default for FunctionalOptions {
    fn default() -> Self {
        FunctionalOptions {
            rel_tol: DEFAULT_REL_TOL,
            fast_path: true,
            accumulator: AccumulatorMethod::Recurrence,
        }
    }
}

#[allow(clippy::large_enum_variant)]
enum Weight<'a> {
    Pointwise(&'a SensitivityModel),
    Induced(Cow<'a, InducedSensitivity>),
}

/// `J_f`, `M_f` and `S` for one trajectory, kernel and sensitivity.
pub struct MemoryFunctional<'a> {
    f: &'a Trajectory,
    kernel: Cow<'a, RegularKernel>,
    weight: Weight<'a>,
    sensitivity: &'a SensitivityModel,
    opts: FunctionalOptions,
    /// Breakpoints of `f` and of the reference trajectory.
    breaks: Vec<f64>,
    /// Recurrence state: knots and `J` there.
    table: Option<(Vec<f64>, Vec<f64>)>,
}

impl<'a> MemoryFunctional<'a> {
    pub fn new(
        f: &'a Trajectory,
        kernel: &'a Kernel,
        sensitivity: impl Into<SensitivityInput<'a>>,
        opts: FunctionalOptions,
    ) -> Result<Self> {
        let kernel = RegularKernel::new(kernel.clone())?;
        Self::build(f, Cow::Owned(kernel), sensitivity.into(), opts)
    }

    pub fn with_regular(
        f: &'a Trajectory,
        kernel: &'a RegularKernel,
        sensitivity: impl Into<SensitivityInput<'a>>,
        opts: FunctionalOptions,
    ) -> Result<Self> {
        Self::build(f, Cow::Borrowed(kernel), sensitivity.into(), opts)
    }

    fn build(
        f: &'a Trajectory,
        kernel: Cow<'a, RegularKernel>,
        sensitivity: SensitivityInput<'a>,
        opts: FunctionalOptions,
    ) -> Result<Self> {
        if !(opts.rel_tol > 0.0) {
            return Err(Error::invalid(format!("rel_tol must be positive, got {}", opts.rel_tol)));
        }
        if !kernel.kernel.domain().same_horizon(f.domain()) {
            return Err(Error::invalid(format!(
                "kernel horizon {} differs from trajectory horizon {}",
                kernel.kernel.horizon(),
                f.horizon()
            )));
        }
        let (weight, model) = match sensitivity {
            SensitivityInput::Model(m) if m.is_operator() => {
                (Weight::Induced(Cow::Owned(induce_with(m, f, opts.accumulator)?)), m)
            }
            SensitivityInput::Model(m) => (Weight::Pointwise(m), m),
            SensitivityInput::Induced(ind) => {
                if !ind.trajectory().domain().same_horizon(f.domain()) {
                    return Err(Error::invalid("induced sensitivity was built on another horizon"));
                }
                (Weight::Induced(Cow::Borrowed(ind)), ind.source())
            }
        };
        if let Some(r) = model.reference() {
            if !r.domain().same_horizon(f.domain()) {
                return Err(Error::invalid(format!(
                    "reference horizon {} differs from trajectory horizon {}",
                    r.horizon(),
                    f.horizon()
                )));
            }
        }
        // the integrand jumps at breakpoints and has kinks where f crosses r
        let mut breaks: Vec<f64> = f.breakpoint_times().to_vec();
        if let Some(r) = model.reference() {
            breaks.extend_from_slice(r.breakpoint_times());
            breaks.extend(sign_changes(f, &r.with_domain(f.domain())?));
        }
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();

        let mut out = MemoryFunctional {
            f,
            kernel,
            weight,
            sensitivity: model,
            opts,
            breaks,
            table: None,
        };
        if opts.fast_path {
            if let Some((c, a)) = out.kernel.kernel.exponential_form() {
                out.table = Some(out.recurrence_table(c, a)?);
            }
        }
        Ok(out)
    }

    pub fn trajectory(&self) -> &Trajectory {
        self.f
    }

    pub fn regular_kernel(&self) -> &RegularKernel {
        &self.kernel
    }

    pub fn uses_fast_path(&self) -> bool {
        self.table.is_some()
    }

    pub fn operator_mode(&self) -> bool {
        matches!(self.weight, Weight::Induced(_))
    }

    /// `Λ(s, f(s))` or `Λ_f(s)`, times `|f(s)|`.
    #[inline]
    fn integrand(&self, s: f64, side: Side) -> f64 {
        let x = self.f.value(s, side);
        let lam = match &self.weight {
            Weight::Pointwise(m) => m.pointwise(s, x, side),
            Weight::Induced(ind) => ind.value_given(s, x, side),
        };
        lam * x.abs()
    }

    fn recurrence_table(&self, c: f64, a: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        let domain = self.f.domain();
        let mut knots: Vec<f64> = domain.nodes().iter().chain(&self.breaks).copied().collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let mut values = Vec::with_capacity(knots.len());
        values.push(0.0);
        for w in knots.windows(2) {
            let prev = *values.last().expect("seeded with J(0)");
            values.push(self.advance(prev, w[0], w[1], c, a)?);
        }
        Ok((knots, values))
    }

    /// `J(t1)` from `J(t0)` when no breakpoint lies in `(t0, t1)`.
    fn advance(&self, j0: f64, t0: f64, t1: f64, c: f64, a: f64) -> Result<f64> {
        if t1 == t0 {
            return Ok(j0);
        }
        // per-cell tolerance so the accumulated error stays at rel_tol
        let cfg = QuadratureConfig::with_tol(self.opts.rel_tol * (t1 - t0) / self.f.horizon());
        let local = integrate_with(
            |s, side| (-a * (t1 - s)).exp() * self.integrand(s, side),
            t0,
            t1,
            &[],
            &cfg,
        )?;
        Ok((-a * (t1 - t0)).exp() * j0 + c * local.value)
    }

    /// `J_f(t)` by direct quadrature over `[0, t]`.
    pub fn j_direct(&self, t: f64) -> Result<f64> {
        let t = self.f.domain().check(t)?;
        let kernel = &self.kernel.kernel;
        let splits = convolution_splits(kernel, t, &self.breaks);
        let cfg = QuadratureConfig::with_tol(self.opts.rel_tol).base_step(self.f.domain().step());
        let r = integrate_with(
            |s, side| self.integrand(s, side) * kernel.value(t - s, side.mirrored()),
            0.0,
            t,
            &splits,
            &cfg,
        )?;
        Ok(r.value)
    }

    /// `J_f(t)`.
    pub fn j(&self, t: f64) -> Result<f64> {
        let t = self.f.domain().check(t)?;
        let Some((knots, values)) = &self.table else {
            return self.j_direct(t);
        };
        let k = knots.partition_point(|&x| x <= t) - 1;
        if knots[k] == t {
            return Ok(values[k]);
        }
        let (c, a) = self.kernel.kernel.exponential_form().expect("table implies exponential form");
        self.advance(values[k], knots[k], t, c, a)
    }

    /// `J_f` at every grid node.
    pub fn j_nodes(&self) -> Result<Vec<f64>> {
        let nodes = self.f.domain().nodes();
        match &self.table {
            Some((knots, values)) => Ok(nodes
                .iter()
                .map(|t| values[knots.partition_point(|x| x < t)])
                .collect()),
            None => nodes.par_iter().map(|&t| self.j_direct(t)).collect(),
        }
    }

    /// `M_f(t)`, with the left-sided value reported separately.
    pub fn m(&self, t: f64) -> Result<HybridValue> {
        let t = self.f.domain().check(t)?;
        let j = self.j(t)?;
        Ok(HybridValue {
            value: self.f.value(t, Side::Exact).abs() + j,
            left_value: self.f.value(t, Side::Below).abs() + j,
            j,
        })
    }

    pub fn report(&self) -> Result<MemoryFunctionalReport> {
        let domain = self.f.domain();
        let nodes = domain.nodes().to_vec();
        let abs_f: Vec<f64> = nodes.iter().map(|&t| self.f.value(t, Side::Exact).abs()).collect();
        let j_values = self.j_nodes()?;
        let m_values: Vec<f64> = abs_f.iter().zip(&j_values).map(|(a, j)| a + j).collect();

        let mut extra = Vec::new();
        let mut breakpoint_values = Vec::new();
        for &b in self.f.breakpoint_times() {
            let j = self.j(b)?;
            let left = self.f.value(b, Side::Below).abs() + j;
            let right = self.f.value(b, Side::Above).abs() + j;
            extra.push((b, left));
            extra.push((b, right));
            breakpoint_values.push(BreakpointValue {
                t: b,
                m_left: left,
                m_right: right,
            });
        }
        let norm = sup_abs(self.f);
        // keeps S >= ‖f‖ when |f| peaks between nodes where J is negligible
        extra.push((norm.argmax, self.f.value(norm.argmax, Side::Exact).abs() + self.j(norm.argmax)?));

        let sup = supremum_sampled(domain, &m_values, &extra, |t| {
            Ok(self.f.value(t, Side::Exact).abs() + self.j(t)?)
        })?;

        let (kappa_inf, kappa_inf_source) = self.kernel.kappa_inf();
        let lambda_inf = self.sensitivity.lambda_max();
        let horizon = domain.horizon();
        let constant = 1.0 + lambda_inf * kappa_inf * horizon;
        Ok(MemoryFunctionalReport {
            kernel: self.kernel.kernel.name(),
            sensitivity: self.sensitivity.name(),
            horizon,
            nodes,
            abs_f,
            j_values,
            m_values,
            breakpoint_values,
            s_value: sup.value,
            argmax_t: sup.argmax,
            argmax_interior: sup.is_interior,
            sup_norm_f: norm.value,
            sup_norm_argmax: norm.argmax,
            sup_norm_last_argmax: norm.last_argmax,
            lower_bound: norm.value,
            upper_bound: constant * norm.value,
            comparison_constant: constant,
            lambda_inf,
            kappa_inf,
            kappa_inf_source,
            member: sup.value.is_finite(),
            quadrature_tolerance: self.opts.rel_tol,
            fast_path: self.uses_fast_path(),
            operator_sensitivity_mode: self.operator_mode(),
            jump_convention: JUMP_CONVENTION.to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridValue {
    /// `|f(t)| + J_f(t)` with the stored (right) value of `f`.
    pub value: f64,
    /// Same with the left limit of `f`; equal to `value` where `f` is continuous.
    pub left_value: f64,
    pub j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakpointValue {
    pub t: f64,
    #[serde(rename = "M_left")]
    pub m_left: f64,
    #[serde(rename = "M_right")]
    pub m_right: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryFunctionalReport {
    pub kernel: String,
    pub sensitivity: String,
    pub horizon: f64,
    pub nodes: Vec<f64>,
    pub abs_f: Vec<f64>,
    #[serde(rename = "J_values")]
    pub j_values: Vec<f64>,
    #[serde(rename = "M_values")]
    pub m_values: Vec<f64>,
    pub breakpoint_values: Vec<BreakpointValue>,
    #[serde(rename = "S_value")]
    pub s_value: f64,
    pub argmax_t: f64,
    pub argmax_interior: bool,
    pub sup_norm_f: f64,
    pub sup_norm_argmax: f64,
    pub sup_norm_last_argmax: f64,
    pub lower_bound: f64,
    /// `(1 + Λ∞ κ∞ T) ‖f‖∞`.
    pub upper_bound: f64,
    pub comparison_constant: f64,
    #[serde(rename = "Lambda_inf")]
    pub lambda_inf: f64,
    pub kappa_inf: f64,
    pub kappa_inf_source: KappaSource,
    pub member: bool,
    pub quadrature_tolerance: f64,
    pub fast_path: bool,
    /// Set for history-dependent sensitivities, where the comparison bounds
    /// are checked empirically only.
    pub operator_sensitivity_mode: bool,
    pub jump_convention: String,
}

impl MemoryFunctionalReport {
    /// Plot data with columns `t, abs_f, J, M`.
    pub fn plot_csv(&self) -> String {
        let mut out = String::from("t,abs_f,J,M\n");
        for i in 0..self.nodes.len() {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e}\n",
                self.nodes[i], self.abs_f[i], self.j_values[i], self.m_values[i]
            ));
        }
        out
    }
}

pub fn compute_j<'a>(
    f: &'a Trajectory,
    kernel: &'a Kernel,
    sensitivity: impl Into<SensitivityInput<'a>>,
    t: f64,
) -> Result<f64> {
    MemoryFunctional::new(f, kernel, sensitivity, FunctionalOptions::default())?.j(t)
}

pub fn compute_m<'a>(
    f: &'a Trajectory,
    kernel: &'a Kernel,
    sensitivity: impl Into<SensitivityInput<'a>>,
    t: f64,
) -> Result<HybridValue> {
    MemoryFunctional::new(f, kernel, sensitivity, FunctionalOptions::default())?.m(t)
}

pub fn compute_s<'a>(
    f: &'a Trajectory,
    kernel: &'a Kernel,
    sensitivity: impl Into<SensitivityInput<'a>>,
) -> Result<MemoryFunctionalReport> {
    compute_s_with(f, kernel, sensitivity, &FunctionalOptions::default())
}

pub fn compute_s_with<'a>(
    f: &'a Trajectory,
    kernel: &'a Kernel,
    sensitivity: impl Into<SensitivityInput<'a>>,
    opts: &FunctionalOptions,
) -> Result<MemoryFunctionalReport> {
    MemoryFunctional::new(f, kernel, sensitivity, *opts)?.report()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrictComparison {
    pub strict: bool,
    /// `S - ‖f‖∞`.
    pub margin: f64,
    /// Largest maximizer of `|f|`.
    pub t_star: f64,
    pub hypothesis_met: bool,
    pub tolerance: f64,
    pub s_value: f64,
    pub sup_norm_f: f64,
    pub note: String,
}

/// Checks `S(f) > ‖f‖∞` when `|f|` attains its maximum in `(0, T]`.
pub fn strict_comparison_check<'a>(
    f: &'a Trajectory,
    kernel: &'a Kernel,
    sensitivity: impl Into<SensitivityInput<'a>>,
    opts: &FunctionalOptions,
) -> Result<StrictComparison> {
    let norm = sup_abs(f);
    if norm.value <= DEGENERATE_NORM {
        return Err(Error::DegenerateInput(format!(
            "‖f‖∞ = {:e} is indistinguishable from zero",
            norm.value
        )));
    }
    let report = compute_s_with(f, kernel, sensitivity, opts)?;
    Ok(strict_from_report(&report))
}

pub fn strict_from_report(report: &MemoryFunctionalReport) -> StrictComparison {
    let t_star = report.sup_norm_last_argmax;
    let hypothesis_met = t_star > 0.0;
    let margin = report.s_value - report.sup_norm_f;
    let tolerance = report.quadrature_tolerance;
    let note = if hypothesis_met {
        format!("|f| attains its maximum at t* = {t_star:.17e} in (0, T]")
    } else {
        "|f| attains its maximum only at t = 0; strictness is not asserted".to_string()
    };
    StrictComparison {
        strict: hypothesis_met && margin > tolerance,
        margin,
        t_star,
        hypothesis_met,
        tolerance,
        s_value: report.s_value,
        sup_norm_f: report.sup_norm_f,
        note,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InclusionCheck {
    /// `S(f - g)`.
    pub s_difference: f64,
    pub sup_norm_difference: f64,
    pub constant: f64,
    pub bound: f64,
    /// `bound - S(f - g)`.
    pub margin: f64,
    pub passed: bool,
}

/// Slack added to the inclusion bound.
pub const INCLUSION_SLACK: f64 = 1e-8;

/// Checks `S(f - g) ≤ (1 + Λ∞ κ∞ T) ‖f - g‖∞`.
pub fn inclusion_map_check(
    f: &Trajectory,
    g: &Trajectory,
    kernel: &Kernel,
    sensitivity: &SensitivityModel,
    opts: &FunctionalOptions,
) -> Result<InclusionCheck> {
    let diff = f.sub(g)?;
    let report = compute_s_with(&diff, kernel, sensitivity, opts)?;
    let bound = report.upper_bound;
    let margin = bound + INCLUSION_SLACK - report.s_value;
    Ok(InclusionCheck {
        s_difference: report.s_value,
        sup_norm_difference: report.sup_norm_f,
        constant: report.comparison_constant,
        bound,
        margin,
        passed: margin >= 0.0,
    })
}
