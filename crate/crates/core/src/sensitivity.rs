//! Adaptive sensitivity functions `Λ(s, x)` and the history-dependent
//! operator `f ↦ Λ_f`.
//!
//! The operator damps the instantaneous response
//! `A_f(s) = tanh(γ₀ |f(s) - r(s)|)` by the exponentially weighted history
//! `D_f(s) = ∫_0^s e^{-α₀(s-τ)} A_f(τ) dτ`:
//!
//! `Λ_f(s) = λ_min + (λ_max - λ_min) A_f(s) / (1 + β₀ D_f(s))`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{integrate_with, sign_changes, sup_norm, QuadratureConfig, Side, TimeDomain, Trajectory, DEFAULT_REL_TOL};

/// `tanh(γ₀ |x - p|)`, which is `γ₀`-Lipschitz in `x`.
#[inline]
pub fn tanh_deviation(x: f64, p: f64, gamma0: f64) -> f64 {
    (gamma0 * (x - p).abs()).tanh()
}

pub type PointwiseFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum SensitivityKind {
    /// `Λ ≡ λ_min = λ_max`.
    Constant,
    Instantaneous {
        reference: Trajectory,
        gamma0: f64,
    },
    Historical {
        reference: Trajectory,
        alpha0: f64,
        gamma0: f64,
        beta0: f64,
    },
    /// Arbitrary `Λ(s, x)`; only trusted after `verify_axioms`.
    Custom(PointwiseFn),
}

impl fmt::Debug for SensitivityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SensitivityKind::Constant => write!(f, "Constant"),
            SensitivityKind::Instantaneous { gamma0, .. } => write!(f, "Instantaneous {{ gamma0: {gamma0} }}"),
            SensitivityKind::Historical { alpha0, gamma0, beta0, .. } => write!(
                f,
                "Historical {{ alpha0: {alpha0}, gamma0: {gamma0}, beta0: {beta0} }}"
            ),
            SensitivityKind::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SensitivityModel {
    lambda_min: f64,
    lambda_max: f64,
    kind: SensitivityKind,
    declared_lipschitz: f64,
    positivity_floor: f64,
}

fn check_bounds(lambda_min: f64, lambda_max: f64, strict: bool) -> Result<()> {
    let ordered = if strict { lambda_max > lambda_min } else { lambda_max >= lambda_min };
    if !(lambda_min > 0.0 && ordered && lambda_max.is_finite()) {
        return Err(Error::invalid(format!(
            "need 0 < lambda_min {} lambda_max < inf, got ({lambda_min}, {lambda_max})",
            if strict { "<" } else { "<=" }
        )));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::invalid(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

impl SensitivityModel {
    pub fn constant(value: f64) -> Result<Self> {
        check_bounds(value, value, false)?;
        Ok(SensitivityModel {
            lambda_min: value,
            lambda_max: value,
            kind: SensitivityKind::Constant,
            declared_lipschitz: 0.0,
            positivity_floor: value,
        })
    }

    /// `Λ(s, x) = λ_min + (λ_max - λ_min) tanh(γ₀ |x - r(s)|)`.
    pub fn instantaneous(reference: Trajectory, gamma0: f64, lambda_min: f64, lambda_max: f64) -> Result<Self> {
        check_bounds(lambda_min, lambda_max, true)?;
        check_positive("gamma0", gamma0)?;
        Ok(SensitivityModel {
            lambda_min,
            lambda_max,
            kind: SensitivityKind::Instantaneous { reference, gamma0 },
            declared_lipschitz: (lambda_max - lambda_min) * gamma0,
            positivity_floor: lambda_min,
        })
    }

    pub fn historical(
        reference: Trajectory,
        alpha0: f64,
        gamma0: f64,
        beta0: f64,
        lambda_min: f64,
        lambda_max: f64,
    ) -> Result<Self> {
        check_bounds(lambda_min, lambda_max, true)?;
        check_positive("alpha0", alpha0)?;
        check_positive("gamma0", gamma0)?;
        if !(beta0 >= 0.0 && beta0.is_finite()) {
            return Err(Error::invalid(format!("beta0 must be non-negative, got {beta0}")));
        }
        let horizon = reference.horizon();
        let mut model = SensitivityModel {
            lambda_min,
            lambda_max,
            kind: SensitivityKind::Historical {
                reference,
                alpha0,
                gamma0,
                beta0,
            },
            declared_lipschitz: 0.0,
            positivity_floor: lambda_min,
        };
        model.declared_lipschitz = historical_lipschitz(lambda_max - lambda_min, gamma0, beta0, alpha0, horizon);
        Ok(model)
    }

    /// A user-supplied `Λ(s, x)` with its claimed constants.
    pub fn custom(
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        lambda_min: f64,
        lambda_max: f64,
        lipschitz: f64,
        positivity_floor: f64,
    ) -> Result<Self> {
        check_bounds(lambda_min, lambda_max, false)?;
        Ok(SensitivityModel {
            lambda_min,
            lambda_max,
            kind: SensitivityKind::Custom(Arc::new(f)),
            declared_lipschitz: lipschitz,
            positivity_floor,
        })
    }

    /// Overrides the declared Lipschitz constant.
    pub fn with_declared_lipschitz(mut self, lipschitz: f64) -> Self {
        self.declared_lipschitz = lipschitz;
        self
    }

    pub fn lambda_min(&self) -> f64 {
        self.lambda_min
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    pub fn kind(&self) -> &SensitivityKind {
        &self.kind
    }

    /// `L_Λ` as declared (closed form unless overridden).
    pub fn declared_lipschitz(&self) -> f64 {
        self.declared_lipschitz
    }

    /// `ϱ`: certified lower bound of `Λ(s, 0)`.
    pub fn positivity_floor(&self) -> f64 {
        self.positivity_floor
    }

    pub fn reference(&self) -> Option<&Trajectory> {
        match &self.kind {
            SensitivityKind::Instantaneous { reference, .. } | SensitivityKind::Historical { reference, .. } => {
                Some(reference)
            }
            _ => None,
        }
    }

    /// True for `β₀ > 0`: `Λ_f` depends on the whole history of `f` and has no
    /// pointwise form `Λ(s, x)`.
    pub fn is_operator(&self) -> bool {
        matches!(self.kind, SensitivityKind::Historical { beta0, .. } if beta0 > 0.0)
    }

    pub fn name(&self) -> String {
        match &self.kind {
            SensitivityKind::Constant => format!("constant({})", self.lambda_min),
            SensitivityKind::Instantaneous { gamma0, .. } => format!(
                "instantaneous(lambda=[{}, {}], gamma0={gamma0})",
                self.lambda_min, self.lambda_max
            ),
            SensitivityKind::Historical { alpha0, gamma0, beta0, .. } => format!(
                "historical(lambda=[{}, {}], alpha0={alpha0}, gamma0={gamma0}, beta0={beta0})",
                self.lambda_min, self.lambda_max
            ),
            SensitivityKind::Custom(_) => format!("custom(lambda=[{}, {}])", self.lambda_min, self.lambda_max),
        }
    }

    /// Closed-form Lipschitz constant of the construction.
    pub fn lipschitz_constant(&self) -> f64 {
        let spread = self.lambda_max - self.lambda_min;
        match &self.kind {
            SensitivityKind::Constant => 0.0,
            SensitivityKind::Instantaneous { gamma0, .. } => spread * gamma0,
            SensitivityKind::Historical {
                reference,
                alpha0,
                gamma0,
                beta0,
            } => historical_lipschitz(spread, *gamma0, *beta0, *alpha0, reference.horizon()),
            SensitivityKind::Custom(_) => self.declared_lipschitz,
        }
    }

    /// `Λ(s, x)`. Fails for operator sensitivities.
    pub fn evaluate(&self, s: f64, x: f64) -> Result<f64> {
        if self.is_operator() {
            return Err(Error::invalid(
                "historical sensitivity with beta0 > 0 has no pointwise form; use induce",
            ));
        }
        if let Some(r) = self.reference() {
            r.domain().check(s)?;
        }
        Ok(self.pointwise(s, x, Side::Exact))
    }

    /// Unchecked pointwise value. Operator models are evaluated without
    /// their history term.
    #[inline]
    pub(crate) fn pointwise(&self, s: f64, x: f64, side: Side) -> f64 {
        match &self.kind {
            SensitivityKind::Constant => self.lambda_min,
            SensitivityKind::Instantaneous { reference, gamma0 }
            | SensitivityKind::Historical { reference, gamma0, .. } => {
                self.lambda_min
                    + (self.lambda_max - self.lambda_min) * tanh_deviation(x, reference.value(s, side), *gamma0)
            }
            SensitivityKind::Custom(f) => f(s, x),
        }
    }

    /// `λ_min + (λ_max - λ_min) · deviation / (1 + β₀ · accumulator)`.
    pub fn damped_value(&self, deviation: f64, accumulator: f64) -> f64 {
        let beta0 = match self.kind {
            SensitivityKind::Historical { beta0, .. } => beta0,
            _ => 0.0,
        };
        self.lambda_min + (self.lambda_max - self.lambda_min) * (deviation / (1.0 + beta0 * accumulator))
    }
}

/// `L_Λ = (λ_max - λ_min) γ₀ (1 + β₀ (1 - e^{-α₀T}) / α₀)`.
pub fn historical_lipschitz(spread: f64, gamma0: f64, beta0: f64, alpha0: f64, horizon: f64) -> f64 {
    spread * gamma0 * (1.0 + beta0 * (-(-alpha0 * horizon).exp_m1()) / alpha0)
}

// ---------------------------------------------------------------------------
// Induced sensitivity

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AccumulatorMethod {
    /// Independent quadrature over `[0, s]` at every knot, `O(N²)`.
    Direct,
    /// Exponential-decay recurrence over consecutive knots, `O(N)`.
    #[default]
    Recurrence,
}

/// `Λ_f` for one trajectory `f`, tabulated on the grid nodes and the
/// breakpoints of `f` and `r`.
///
/// Between knots, `D_f` is reconstructed by cubic Hermite interpolation
/// using the exact derivative `D_f' = A_f - α₀ D_f`; `A_f` itself is always
/// evaluated exactly.
#[derive(Debug, Clone)]
pub struct InducedSensitivity {
    source: SensitivityModel,
    trajectory: Trajectory,
    reference: Trajectory,
    alpha0: f64,
    gamma0: f64,
    beta0: f64,
    knots: Vec<f64>,
    /// Breakpoints of `f` and `r` plus the kinks of `|f - r|`.
    splits: Vec<f64>,
    /// `A_f` at each knot, approached from below and from above.
    rates: Vec<(f64, f64)>,
    accumulator: Vec<f64>,
    node_index: Vec<usize>,
}

impl InducedSensitivity {
    pub fn source(&self) -> &SensitivityModel {
        &self.source
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    #[inline]
    fn deviation(&self, s: f64, side: Side) -> f64 {
        tanh_deviation(self.trajectory.value(s, side), self.reference.value(s, side), self.gamma0)
    }

    /// `D_f(s)`; continuous, so no side is needed.
    pub(crate) fn accumulator_value(&self, s: f64) -> f64 {
        let k = self.knots.partition_point(|&x| x <= s);
        if k == 0 {
            return self.accumulator[0];
        }
        let i = k - 1;
        if self.knots[i] == s || i + 1 == self.knots.len() {
            return self.accumulator[i];
        }
        let (t0, t1) = (self.knots[i], self.knots[i + 1]);
        let (d0, d1) = (self.accumulator[i], self.accumulator[i + 1]);
        let m0 = self.rates[i].1 - self.alpha0 * d0;
        let m1 = self.rates[i + 1].0 - self.alpha0 * d1;
        let h = t1 - t0;
        let u = (s - t0) / h;
        let u2 = u * u;
        let u3 = u2 * u;
        let h00 = 2.0 * u3 - 3.0 * u2 + 1.0;
        let h10 = u3 - 2.0 * u2 + u;
        let h01 = -2.0 * u3 + 3.0 * u2;
        let h11 = u3 - u2;
        h00 * d0 + h10 * h * m0 + h01 * d1 + h11 * h * m1
    }

    #[inline]
    pub(crate) fn value(&self, s: f64, side: Side) -> f64 {
        self.value_given(s, self.trajectory.value(s, side), side)
    }

    /// As `value` with `x = f(s)` already known.
    pub(crate) fn value_given(&self, s: f64, x: f64, side: Side) -> f64 {
        let acc = if self.beta0 > 0.0 { self.accumulator_value(s) } else { 0.0 };
        let dev = tanh_deviation(x, self.reference.value(s, side), self.gamma0);
        self.source.damped_value(dev, acc)
    }

    pub fn value_at(&self, s: f64) -> Result<f64> {
        self.value_side(s, Side::Exact)
    }

    pub fn value_side(&self, s: f64, side: Side) -> Result<f64> {
        let s = self.trajectory.domain().check(s)?;
        Ok(self.value(s, side))
    }

    pub fn accumulator_at(&self, s: f64) -> Result<f64> {
        let s = self.trajectory.domain().check(s)?;
        Ok(self.accumulator_value(s))
    }

    /// `Λ_f` at the grid nodes.
    pub fn values(&self) -> Vec<f64> {
        self.trajectory
            .domain()
            .nodes()
            .iter()
            .map(|&t| self.value(t, Side::Exact))
            .collect()
    }

    /// `D_f` at the grid nodes.
    pub fn accumulator(&self) -> Vec<f64> {
        self.node_index.iter().map(|&k| self.accumulator[k]).collect()
    }
}

/// `Λ_f` for a historical model, with the recurrence fast path.
pub fn induce(model: &SensitivityModel, f: &Trajectory) -> Result<InducedSensitivity> {
    induce_with(model, f, AccumulatorMethod::Recurrence)
}

pub fn induce_with(model: &SensitivityModel, f: &Trajectory, method: AccumulatorMethod) -> Result<InducedSensitivity> {
    let SensitivityKind::Historical {
        reference,
        alpha0,
        gamma0,
        beta0,
    } = &model.kind
    else {
        return Err(Error::invalid(format!("induce needs a historical model, got {}", model.name())));
    };
    if !reference.domain().same_horizon(f.domain()) {
        return Err(Error::invalid(format!(
            "reference horizon {} differs from trajectory horizon {}",
            reference.horizon(),
            f.horizon()
        )));
    }
    let domain = f.domain();
    let reference = reference.with_domain(domain)?;
    let mut splits: Vec<f64> = f
        .breakpoint_times()
        .iter()
        .chain(reference.breakpoint_times())
        .copied()
        .chain(sign_changes(f, &reference))
        .collect();
    splits.sort_by(f64::total_cmp);
    splits.dedup();
    let mut knots: Vec<f64> = domain.nodes().iter().chain(&splits).copied().collect();
    knots.sort_by(f64::total_cmp);
    knots.dedup();
    let node_index: Vec<usize> = domain
        .nodes()
        .iter()
        .map(|t| knots.partition_point(|x| x < t))
        .collect();

    let mut induced = InducedSensitivity {
        source: model.clone(),
        trajectory: f.clone(),
        reference,
        alpha0: *alpha0,
        gamma0: *gamma0,
        beta0: *beta0,
        knots,
        splits,
        rates: Vec::new(),
        accumulator: Vec::new(),
        node_index,
    };
    induced.rates = induced
        .knots
        .iter()
        .map(|&t| (induced.deviation(t, Side::Below), induced.deviation(t, Side::Above)))
        .collect();
    induced.accumulator = match method {
        AccumulatorMethod::Direct => accumulate_direct(&induced, domain)?,
        AccumulatorMethod::Recurrence => accumulate_recurrence(&induced, domain)?,
    };
    Ok(induced)
}

fn accumulate_direct(ind: &InducedSensitivity, domain: &TimeDomain) -> Result<Vec<f64>> {
    let cfg = QuadratureConfig::with_tol(DEFAULT_REL_TOL).base_step(domain.step());
    let alpha = ind.alpha0;
    ind.knots
        .par_iter()
        .map(|&s| {
            integrate_with(
                |tau, side| (-alpha * (s - tau)).exp() * ind.deviation(tau, side),
                0.0,
                s,
                &ind.splits_below(s),
                &cfg,
            )
            .map(|r| r.value)
        })
        .collect()
}

fn accumulate_recurrence(ind: &InducedSensitivity, domain: &TimeDomain) -> Result<Vec<f64>> {
    let alpha = ind.alpha0;
    let horizon = domain.horizon();
    let mut out = Vec::with_capacity(ind.knots.len());
    out.push(0.0);
    for w in ind.knots.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        // per-cell tolerance so the accumulated error stays at DEFAULT_REL_TOL
        let cfg = QuadratureConfig::with_tol(DEFAULT_REL_TOL * (s1 - s0) / horizon);
        let local = integrate_with(
            |tau, side| (-alpha * (s1 - tau)).exp() * ind.deviation(tau, side),
            s0,
            s1,
            &[],
            &cfg,
        )?
        .value;
        let prev = *out.last().expect("seeded with D(0)");
        out.push((-alpha * (s1 - s0)).exp() * prev + local);
    }
    Ok(out)
}

impl InducedSensitivity {
    fn splits_below(&self, s: f64) -> Vec<f64> {
        self.splits.iter().copied().filter(|&b| b < s).collect()
    }
}

// ---------------------------------------------------------------------------
// Axiom checks

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbePlan {
    pub uniform_states: usize,
    pub random_states: usize,
    /// Number of time samples (spread over the grid nodes).
    pub times: usize,
    pub seed: u64,
}

impl Default for ProbePlan {
    fn default() -> Self {
        ProbePlan {
            uniform_states: 256,
            random_states: 256,
            times: 129,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomCheck {
    pub axiom: String,
    pub passed: bool,
    pub worst_margin: f64,
    pub witness: Option<String>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub model: String,
    pub declared_lipschitz: f64,
    pub positivity_floor: f64,
    /// States probed; the axioms quantify over all of ℝ.
    pub state_range: (f64, f64),
    pub probes: usize,
    pub axioms: Vec<AxiomCheck>,
}

impl VerificationRecord {
    pub fn all_passed(&self) -> bool {
        self.axioms.iter().all(|a| a.passed)
    }

    pub fn axiom(&self, id: &str) -> Option<&AxiomCheck> {
        self.axioms.iter().find(|a| a.axiom == id)
    }
}

/// Checks AS1–AS4 for a pointwise sensitivity on `domain` over a bounded
/// state range.
pub fn verify_axioms(model: &SensitivityModel, domain: &TimeDomain, plan: &ProbePlan) -> Result<VerificationRecord> {
    if model.is_operator() {
        return Err(Error::invalid(
            "historical sensitivity with beta0 > 0 is an operator; its analogues of AS1-AS4 are the P1-P4 checks",
        ));
    }
    if plan.uniform_states + plan.random_states < 2 || plan.times == 0 {
        return Err(Error::invalid("probe plan is empty"));
    }
    let scale = model.reference().map_or(0.0, sup_norm);
    let (lo, hi) = (-3.0 * scale - 1.0, 3.0 * scale + 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);

    let mut states: Vec<f64> = (0..plan.uniform_states)
        .map(|i| lo + (hi - lo) * i as f64 / (plan.uniform_states.max(2) - 1) as f64)
        .collect();
    let uniform_len = states.len();
    states.extend((0..plan.random_states).map(|_| rng.random_range(lo..hi)));

    let nodes = domain.nodes();
    let stride = (nodes.len() / plan.times).max(1);
    let mut times: Vec<f64> = nodes.iter().step_by(stride).copied().collect();
    if *times.last().unwrap() != domain.horizon() {
        times.push(domain.horizon());
    }

    let lam = |s: f64, x: f64| model.pointwise(s, x, Side::Exact);
    let (lmin, lmax) = (model.lambda_min, model.lambda_max);

    // AS1
    let mut as1 = (f64::INFINITY, None);
    for &s in &times {
        for &x in &states {
            let v = lam(s, x);
            let m = (v - lmin).min(lmax - v);
            if !(m >= as1.0) {
                as1 = (m, Some(format!("s={s:.17e}, x={x:.17e}, value={v:.17e}")));
            }
        }
    }

    // AS2: neighbouring uniform states plus random pairs
    let lip = model.declared_lipschitz;
    let mut pairs: Vec<(f64, f64, f64)> = Vec::new();
    for &s in &times {
        for w in states[..uniform_len].windows(2) {
            pairs.push((s, w[0], w[1]));
        }
    }
    for _ in 0..plan.random_states {
        let s = times[rng.random_range(0..times.len())];
        pairs.push((s, rng.random_range(lo..hi), rng.random_range(lo..hi)));
    }
    let mut as2 = (f64::INFINITY, None, false);
    for &(s, x, y) in &pairs {
        let allowed = lip * (x - y).abs();
        let seen = (lam(s, x) - lam(s, y)).abs();
        let m = allowed - seen;
        let violated = seen - allowed > 1e-9 * allowed.max(f64::MIN_POSITIVE);
        if m < as2.0 {
            as2.0 = m;
        }
        if violated && !as2.2 {
            as2.1 = Some(format!("s={s:.17e}, x={x:.17e}, y={y:.17e}, |dΛ|={seen:.17e}, L|x-y|={allowed:.17e}"));
            as2.2 = true;
        }
    }

    // AS4
    let floor = model.positivity_floor;
    let (mut as4, mut as4_at) = (f64::INFINITY, 0.0);
    for &s in &times {
        let m = lam(s, 0.0) - floor;
        if m < as4 {
            as4 = m;
            as4_at = s;
        }
    }

    let axioms = vec![
        AxiomCheck {
            axiom: "AS1".into(),
            passed: as1.0 >= -1e-12,
            worst_margin: as1.0,
            witness: if as1.0 >= -1e-12 { None } else { as1.1 },
            note: None,
        },
        AxiomCheck {
            axiom: "AS2".into(),
            passed: !as2.2,
            worst_margin: as2.0,
            witness: as2.1,
            note: Some(format!("declared L = {lip:.17e}")),
        },
        AxiomCheck {
            axiom: "AS3".into(),
            passed: true,
            worst_margin: 0.0,
            witness: None,
            note: Some("structural: built from continuous or piecewise-continuous parts".into()),
        },
        AxiomCheck {
            axiom: "AS4".into(),
            passed: as4 >= -1e-12,
            worst_margin: as4,
            witness: (as4 < -1e-12).then(|| format!("s={as4_at:.17e}")),
            note: Some(format!("rho = {floor:.17e}")),
        },
    ];
    Ok(VerificationRecord {
        model: model.name(),
        declared_lipschitz: lip,
        positivity_floor: floor,
        state_range: (lo, hi),
        probes: times.len() * states.len() + pairs.len(),
        axioms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(n: usize) -> TimeDomain {
        TimeDomain::uniform(1.0, n).unwrap()
    }

    fn reference(d: &TimeDomain) -> Trajectory {
        Trajectory::from_fn(d, |t| (3.0 * t).sin())
    }

    #[test]
    fn tanh_deviation_examples() {
        assert_eq!(tanh_deviation(2.5, 2.5, 3.0), 0.0);
        assert!((tanh_deviation(1.0, 0.0, 1.0) - 0.761_594_155_955_764_9).abs() < 1e-15);
    }

    #[test]
    fn instantaneous_values() {
        let d = unit(65);
        let r = reference(&d);
        let m = SensitivityModel::instantaneous(r.clone(), 1.0, 0.5, 1.5).unwrap();
        for &s in d.nodes() {
            let rs = r.eval(s).unwrap();
            assert_eq!(m.evaluate(s, rs).unwrap(), 0.5);
            let v = m.evaluate(s, rs + 1.0).unwrap();
            assert!((v - 1.261_594_155_955_764_9).abs() < 1e-12);
        }
        assert_eq!(m.declared_lipschitz(), 1.0);
        assert_eq!(m.positivity_floor(), 0.5);
        assert!(m.evaluate(2.0, 0.0).is_err());
    }

    #[test]
    fn constructor_preconditions() {
        let d = unit(9);
        let r = reference(&d);
        assert!(SensitivityModel::instantaneous(r.clone(), 1.0, 0.0, 1.0).is_err());
        assert!(SensitivityModel::instantaneous(r.clone(), 1.0, 1.0, 1.0).is_err());
        assert!(SensitivityModel::instantaneous(r.clone(), 0.0, 0.5, 1.0).is_err());
        assert!(SensitivityModel::historical(r.clone(), 0.0, 1.0, 1.0, 0.5, 1.0).is_err());
        assert!(SensitivityModel::historical(r, 1.0, 1.0, -1.0, 0.5, 1.0).is_err());
        assert!(SensitivityModel::constant(0.0).is_err());
        assert!(SensitivityModel::constant(2.0).is_ok());
    }

    #[test]
    fn lipschitz_closed_forms() {
        let d = unit(9);
        let r = reference(&d);
        let m = SensitivityModel::historical(r.clone(), 1.0, 2.0, 0.0, 0.5, 1.5).unwrap();
        assert_eq!(m.lipschitz_constant(), 2.0);
        let m = SensitivityModel::historical(r.clone(), 1.0, 2.0, 1.0, 0.5, 1.5).unwrap();
        let expected = 2.0 * (1.0 + (1.0 - (-1.0f64).exp()));
        assert!((expected - 3.264_241_117_657_115).abs() < 1e-12);
        assert!((m.lipschitz_constant() - expected).abs() < 1e-12);
        let m = SensitivityModel::historical(r, 1e6, 2.0, 1.0, 0.5, 1.5).unwrap();
        assert!((m.lipschitz_constant() - 2.0).abs() < 1e-5);
    }

    #[test]
    fn identical_trajectory_gives_lambda_min() {
        let d = unit(129);
        let r = reference(&d);
        let m = SensitivityModel::historical(r.clone(), 1.0, 2.0, 1.0, 0.5, 1.5).unwrap();
        let ind = induce(&m, &r).unwrap();
        assert!(ind.values().iter().all(|&v| v == 0.5));
        assert!(ind.accumulator().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn beta_zero_reduces_to_pointwise() {
        let d = unit(257);
        let r = reference(&d);
        let hist = SensitivityModel::historical(r.clone(), 1.3, 2.0, 0.0, 0.5, 1.5).unwrap();
        let inst = SensitivityModel::instantaneous(r, 2.0, 0.5, 1.5).unwrap();
        let f = Trajectory::from_fn(&d, |t| t * t - 0.4);
        let ind = induce(&hist, &f).unwrap();
        for (&s, v) in d.nodes().iter().zip(ind.values()) {
            let expect = inst.evaluate(s, f.eval(s).unwrap()).unwrap();
            assert!((v - expect).abs() <= 1e-12);
        }
    }

    #[test]
    fn accumulator_constant_deviation_closed_form() {
        // r = 0, f = 1: A = tanh(γ₀), D(s) = tanh(γ₀) (1 - e^{-α₀ s}) / α₀
        let d = unit(257);
        let m = SensitivityModel::historical(Trajectory::zero(&d), 2.0, 1.5, 3.0, 0.5, 1.5).unwrap();
        let f = Trajectory::constant(&d, 1.0);
        let a = 1.5f64.tanh();
        for method in [AccumulatorMethod::Direct, AccumulatorMethod::Recurrence] {
            let ind = induce_with(&m, &f, method).unwrap();
            for s in [0.0f64, 0.1234, 0.5, 0.77777, 1.0] {
                let exact = a * (1.0 - (-2.0 * s).exp()) / 2.0;
                let got = ind.accumulator_at(s).unwrap();
                assert!((got - exact).abs() < 1e-10, "{method:?} s={s}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn recurrence_matches_direct_with_breakpoints() {
        let d = unit(513);
        let r = Trajectory::from_fn(&d, |t| 0.3 * t);
        let m = SensitivityModel::historical(r, 1.0, 2.0, 1.0, 0.5, 1.5).unwrap();
        let f = Trajectory::from_fn(&d, |t| (7.0 * t).cos())
            .add(&Trajectory::indicator(&d, 0.3141).unwrap())
            .unwrap();
        let a = induce_with(&m, &f, AccumulatorMethod::Direct).unwrap();
        let b = induce_with(&m, &f, AccumulatorMethod::Recurrence).unwrap();
        for (x, y) in a.accumulator().iter().zip(b.accumulator()) {
            assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }

    #[test]
    fn axioms_hold_for_instantaneous() {
        let d = unit(257);
        let m = SensitivityModel::instantaneous(reference(&d), 2.0, 0.5, 1.5).unwrap();
        let rec = verify_axioms(&m, &d, &ProbePlan::default()).unwrap();
        assert!(rec.all_passed(), "{rec:?}");
        assert_eq!(rec.axioms.len(), 4);
        let r = sup_norm(&reference(&d));
        assert_eq!(rec.state_range, (-3.0 * r - 1.0, 3.0 * r + 1.0));
    }

    #[test]
    fn halved_lipschitz_is_caught() {
        let d = unit(257);
        let m = SensitivityModel::instantaneous(reference(&d), 2.0, 0.5, 1.5).unwrap();
        let bad = m.clone().with_declared_lipschitz(m.declared_lipschitz() / 2.0);
        let rec = verify_axioms(&bad, &d, &ProbePlan::default()).unwrap();
        let as2 = rec.axiom("AS2").unwrap();
        assert!(!as2.passed);
        assert!(as2.witness.as_ref().unwrap().contains("x="));
    }

    #[test]
    fn operator_models_are_not_pointwise() {
        let d = unit(9);
        let m = SensitivityModel::historical(reference(&d), 1.0, 1.0, 0.5, 0.5, 1.5).unwrap();
        assert!(m.is_operator());
        assert!(m.evaluate(0.1, 0.0).is_err());
        assert!(verify_axioms(&m, &d, &ProbePlan::default()).is_err());
    }

    #[test]
    fn damping_is_monotone_in_the_accumulator() {
        let d = unit(129);
        let m = SensitivityModel::historical(Trajectory::zero(&d), 1.0, 1.0, 2.0, 0.5, 1.5).unwrap();
        let f = Trajectory::from_fn(&d, |t| (5.0 * t).sin() + 0.2);
        let ind = induce(&m, &f).unwrap();
        for (&s, acc) in d.nodes().iter().zip(ind.accumulator()) {
            let dev = tanh_deviation(f.eval(s).unwrap(), 0.0, 1.0);
            let base = m.damped_value(dev, acc);
            for scale in [1.0, 1.5, 3.0, 10.0] {
                assert!(m.damped_value(dev, scale * acc) <= base);
            }
        }
    }

    proptest! {
        #[test]
        fn tanh_deviation_is_gamma_lipschitz(x in -50.0f64..50.0, y in -50.0f64..50.0, p in -50.0f64..50.0, g in 0.01f64..20.0) {
            let lhs = (tanh_deviation(x, p, g) - tanh_deviation(y, p, g)).abs();
            prop_assert!(lhs <= g * (x - y).abs() + 1e-15);
        }

        #[test]
        fn induced_values_stay_in_bounds(c in prop::collection::vec(-3.0f64..3.0, 4), beta0 in 0.0f64..5.0) {
            let d = unit(129);
            let m = SensitivityModel::historical(reference(&d), 0.7, 3.0, beta0, 0.25, 2.0).unwrap();
            let f = Trajectory::from_fn(&d, move |t| c[0] + c[1] * t + c[2] * (4.0 * t).sin() + c[3] * (11.0 * t).cos());
            let ind = induce(&m, &f).unwrap();
            for v in ind.values() {
                prop_assert!((0.25..=2.0).contains(&v));
            }
        }
    }
}
