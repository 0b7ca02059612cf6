//! Randomized and example-driven checks of the inequalities satisfied by
//! kernels, sensitivities and the memory functional.
//!
//! Every trial draws its inputs from its own ChaCha stream, so entries and
//! trials can run in any order without changing the report.

mod config;
mod generators;

pub use config::{
    KernelSpec, SensitivitySpec, TrajectoryKind, TrajectorySource, TrajectorySpec, VerificationConfig,
};
pub use generators::{random_trajectory, MAX_FOURIER_MODES, MAX_POLYNOMIAL_DEGREE};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::functionals::{
    inclusion_map_check, strict_from_report, FunctionalOptions, MemoryFunctional, MemoryFunctionalReport,
    RegularKernel, DEGENERATE_NORM,
};
use crate::grid::{sup_norm, TimeDomain, Trajectory};
use crate::kernels::{
    classify, cumulative_weight, signed_convolution, weighted_convolution, ClassifyTolerances, Kernel,
};
use crate::sensitivity::{induce, tanh_deviation, verify_axioms, ProbePlan, SensitivityKind, SensitivityModel};

/// Required gap `S - ‖f‖∞` in the strict comparison entry.
pub const STRICT_GAP: f64 = 1e-6;
/// Allowed ratio of consecutive-node differences of `Λ_f` after halving the
/// grid spacing.
pub const REFINEMENT_RATIO: f64 = 0.6;
/// Witnesses kept per entry.
pub const MAX_WITNESSES: usize = 3;
const TANH_TRIPLES_PER_TRIAL: usize = 500;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub trial: usize,
    pub margin: f64,
    pub description: String,
    /// Inputs in the trajectory CSV format.
    pub trajectories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationEntry {
    pub theorem_id: String,
    pub description: String,
    pub trials: usize,
    pub failures: usize,
    pub worst_margin: f64,
    pub tolerance: f64,
    pub witnesses: Vec<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub entries: Vec<VerificationEntry>,
    pub seed: u64,
    pub config_digest: String,
}

impl VerificationReport {
    pub fn total_failures(&self) -> usize {
        self.entries.iter().map(|e| e.failures).sum()
    }

    pub fn passed(&self) -> bool {
        self.total_failures() == 0
    }

    pub fn entry(&self, id: &str) -> Option<&VerificationEntry> {
        self.entries.iter().find(|e| e.theorem_id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Hex SHA-256 of the canonical JSON form of `config`.
pub fn config_digest(config: &VerificationConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    hex::encode(Sha256::digest(&bytes))
}

// ---------------------------------------------------------------------------

struct Ctx {
    domain: TimeDomain,
    opts: FunctionalOptions,
    time_samples: usize,
    kernels: Vec<RegularKernel>,
    /// Kernel, `∫|κ|`, `∫κ`, non-negative.
    generalized: Vec<(Kernel, f64, f64, bool)>,
    sensitivities: Vec<SensitivityModel>,
    continuous: Vec<TrajectorySpec>,
    discontinuous: Vec<TrajectorySpec>,
}

impl Ctx {
    fn new(cfg: &VerificationConfig) -> Result<Self> {
        cfg.validate()?;
        let domain = cfg.domain().map_err(|e| Error::Config(e.to_string()))?;
        let config_err = |e: Error| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        };
        let kernels = cfg
            .kernels
            .iter()
            .map(|k| RegularKernel::new(k.build(&domain)?))
            .collect::<Result<Vec<_>>>()
            .map_err(config_err)?;
        let tol = ClassifyTolerances::default();
        let generalized = cfg
            .generalized_kernels
            .iter()
            .map(|spec| {
                let k = spec.build(&domain)?;
                let rep = classify(&k, &tol);
                if !rep.class_generalized {
                    return Err(Error::Config(format!("{} is not a generalized kernel", k.name())));
                }
                let m = rep.measurements;
                Ok((k, m.abs_integral, m.integral, m.min_value >= 0.0))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(config_err)?;
        let sensitivities = cfg
            .sensitivities
            .iter()
            .map(|s| s.build(&domain))
            .collect::<Result<Vec<_>>>()
            .map_err(config_err)?;
        for spec in cfg.trajectories.iter().chain(&cfg.discontinuous) {
            random_trajectory(&mut ChaCha8Rng::seed_from_u64(0), spec, &domain).map_err(config_err)?;
        }
        Ok(Ctx {
            domain,
            opts: FunctionalOptions {
                rel_tol: cfg.rel_tol,
                ..Default::default()
            },
            time_samples: cfg.time_samples,
            kernels,
            generalized,
            sensitivities,
            continuous: cfg.trajectories.clone(),
            discontinuous: cfg.discontinuous.clone(),
        })
    }

    fn continuous(&self, rng: &mut ChaCha8Rng) -> Result<Trajectory> {
        let spec = &self.continuous[rng.random_range(0..self.continuous.len())];
        random_trajectory(rng, spec, &self.domain)
    }

    /// Continuous or discontinuous, when discontinuous generators exist.
    fn any(&self, rng: &mut ChaCha8Rng) -> Result<Trajectory> {
        if !self.discontinuous.is_empty() && rng.random_bool(0.25) {
            let spec = &self.discontinuous[rng.random_range(0..self.discontinuous.len())];
            random_trajectory(rng, spec, &self.domain)
        } else {
            self.continuous(rng)
        }
    }

    fn kernel(&self, rng: &mut ChaCha8Rng) -> &RegularKernel {
        &self.kernels[rng.random_range(0..self.kernels.len())]
    }

    fn sensitivity(&self, rng: &mut ChaCha8Rng) -> &SensitivityModel {
        &self.sensitivities[rng.random_range(0..self.sensitivities.len())]
    }

    fn historical(&self, rng: &mut ChaCha8Rng) -> Option<&SensitivityModel> {
        let h: Vec<&SensitivityModel> = self
            .sensitivities
            .iter()
            .filter(|m| matches!(m.kind(), SensitivityKind::Historical { .. }))
            .collect();
        (!h.is_empty()).then(|| h[rng.random_range(0..h.len())])
    }

    fn pointwise(&self, rng: &mut ChaCha8Rng) -> Option<&SensitivityModel> {
        let h: Vec<&SensitivityModel> = self.sensitivities.iter().filter(|m| !m.is_operator()).collect();
        (!h.is_empty()).then(|| h[rng.random_range(0..h.len())])
    }

    fn report(&self, f: &Trajectory, k: &RegularKernel, lam: &SensitivityModel) -> Result<MemoryFunctionalReport> {
        MemoryFunctional::with_regular(f, k, lam, self.opts)?.report()
    }

    /// `t = T` followed by uniform draws.
    fn times(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let horizon = self.domain.horizon();
        std::iter::once(horizon)
            .chain((1..self.time_samples).map(|_| rng.random_range(0.0..=horizon)))
            .collect()
    }
}

/// Outcome of one trial; `None` when the inputs miss a hypothesis.
struct Trial {
    margin: f64,
    description: String,
    inputs: Vec<Trajectory>,
}

fn trial(margin: f64, description: String, inputs: &[&Trajectory]) -> Result<Option<Trial>> {
    Ok(Some(Trial {
        margin,
        description,
        inputs: inputs.iter().map(|t| (*t).clone()).collect(),
    }))
}

#[derive(Clone, Copy)]
enum Tol {
    /// Multiple of the quadrature tolerance.
    Rel(f64),
    Abs(f64),
}

type Check = fn(&Ctx, &mut ChaCha8Rng, usize) -> Result<Option<Trial>>;

struct EntryDef {
    id: &'static str,
    description: &'static str,
    tol: Tol,
    check: Check,
}

pub const COVERAGE_ID: &str = "suite.coverage";

const ENTRIES: &[EntryDef] = &[
    EntryDef {
        id: "lemma.kernel_estimates.cumulative_weight",
        description: "∫_0^t κ(t-s) ds ≤ 1 for regular κ",
        tol: Tol::Rel(10.0),
        check: cumulative_weight_check,
    },
    EntryDef {
        id: "lemma.kernel_estimates.weighted_supremum",
        description: "∫_0^t κ(t-s)|f(s)| ds ≤ ‖f‖∞",
        tol: Tol::Rel(10.0),
        check: weighted_supremum_check,
    },
    EntryDef {
        id: "lemma.kernel_estimates.difference_control",
        description: "|∫_0^t κ(t-s)(f-g)(s) ds| ≤ ‖f-g‖∞",
        tol: Tol::Rel(10.0),
        check: difference_control_check,
    },
    EntryDef {
        id: "proposition.generalized_estimates",
        description: "|∫_0^t κ(t-s) f(s) ds| ≤ ‖f‖∞ ∫|κ| for generalized κ, and the non-negative case",
        tol: Tol::Rel(10.0),
        check: generalized_check,
    },
    EntryDef {
        id: "lemma.tanh_lipschitz",
        description: "|tanh(γ₀|x-p|) - tanh(γ₀|y-p|)| ≤ γ₀|x-y|",
        tol: Tol::Abs(1e-12),
        check: tanh_check,
    },
    EntryDef {
        id: "theorem.induced_sensitivity.P1",
        description: "λ_min ≤ Λ_f(s) ≤ λ_max at every node",
        tol: Tol::Rel(10.0),
        check: p1_check,
    },
    EntryDef {
        id: "theorem.induced_sensitivity.P2",
        description: "‖Λ_f - Λ_g‖∞ ≤ L_Λ ‖f-g‖∞ with the declared L_Λ",
        tol: Tol::Rel(2.0),
        check: p2_check,
    },
    EntryDef {
        id: "theorem.induced_sensitivity.P3",
        description: "consecutive-node differences of Λ_f shrink by the refinement ratio when the spacing halves",
        tol: Tol::Rel(10.0),
        check: p3_check,
    },
    EntryDef {
        id: "theorem.induced_sensitivity.P4",
        description: "Λ_0(s) ≥ λ_min",
        tol: Tol::Rel(10.0),
        check: p4_check,
    },
    EntryDef {
        id: "corollary.instantaneous.reduction",
        description: "β₀ = 0 gives Λ_f(s) = Λ(s, f(s)) node-wise",
        tol: Tol::Abs(1e-12),
        check: reduction_check,
    },
    EntryDef {
        id: "corollary.instantaneous.axioms",
        description: "pointwise sensitivities satisfy AS1, AS2, AS4 on the probe range",
        tol: Tol::Rel(10.0),
        check: axioms_check,
    },
    EntryDef {
        id: "lemma.well_posedness",
        description: "0 ≤ J_f(t) ≤ Λ∞ κ∞ T ‖f‖∞",
        tol: Tol::Rel(10.0),
        check: well_posedness_check,
    },
    EntryDef {
        id: "lemma.functional.positive_definiteness",
        description: "S(0) = 0, and S(f) ≥ ‖f‖∞ > 0 otherwise",
        tol: Tol::Rel(10.0),
        check: positive_definiteness_check,
    },
    EntryDef {
        id: "lemma.functional.comparison",
        description: "‖f‖∞ ≤ S(f)",
        tol: Tol::Rel(10.0),
        check: comparison_check,
    },
    EntryDef {
        id: "theorem.strict_comparison",
        description: "S(f) - ‖f‖∞ > 1e-6 when |f| peaks in (0, T]",
        tol: Tol::Abs(0.0),
        check: strict_check,
    },
    EntryDef {
        id: "theorem.embedding.two_sided",
        description: "‖f‖∞ ≤ S(f) ≤ (1 + Λ∞ κ∞ T) ‖f‖∞ for continuous f",
        tol: Tol::Rel(10.0),
        check: embedding_check,
    },
    EntryDef {
        id: "proposition.inclusion_lipschitz",
        description: "S(f - g) ≤ (1 + Λ∞ κ∞ T) ‖f-g‖∞",
        tol: Tol::Rel(10.0),
        check: inclusion_check,
    },
    EntryDef {
        id: "proposition.discontinuous_membership",
        description: "step functions have finite S(f) ≤ (1 + Λ∞ κ∞ T) ‖f‖∞",
        tol: Tol::Rel(10.0),
        check: discontinuous_check,
    },
];

/// Entry ids the default suite must contain.
pub fn required_entries() -> Vec<&'static str> {
    ENTRIES.iter().map(|e| e.id).collect()
}

/// Runs every registered check under `config` with the given seed.
pub fn run_suite(config: &VerificationConfig, seed: u64) -> Result<VerificationReport> {
    let ctx = Ctx::new(config)?;
    if let Some(ids) = &config.entries {
        for id in ids {
            if id != COVERAGE_ID && !ENTRIES.iter().any(|e| e.id == id) {
                return Err(Error::Config(format!("unknown verification entry {id:?}")));
            }
        }
    }
    let selected: Vec<(usize, &EntryDef)> = ENTRIES
        .iter()
        .enumerate()
        .filter(|(_, e)| config.entries.as_ref().is_none_or(|ids| ids.iter().any(|i| i == e.id)))
        .collect();
    let mut entries: Vec<VerificationEntry> = selected
        .par_iter()
        .map(|&(index, def)| run_entry(&ctx, def, index, config, seed))
        .collect();

    let missing: Vec<&str> = ENTRIES
        .iter()
        .filter(|d| !entries.iter().any(|e| e.theorem_id == d.id))
        .map(|d| d.id)
        .collect();
    entries.push(VerificationEntry {
        theorem_id: COVERAGE_ID.into(),
        description: "every registered theorem entry ran".into(),
        trials: ENTRIES.len(),
        failures: missing.len(),
        worst_margin: 0.0 - missing.len() as f64,
        tolerance: 0.0,
        witnesses: missing
            .iter()
            .take(MAX_WITNESSES)
            .map(|id| Witness {
                trial: 0,
                margin: -1.0,
                description: format!("missing entry {id}"),
                trajectories: Vec::new(),
            })
            .collect(),
    });
    Ok(VerificationReport {
        entries,
        seed,
        config_digest: config_digest(config),
    })
}

fn trial_rng(seed: u64, entry: usize, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((entry as u64) << 32) | trial as u64);
    rng
}

fn run_entry(ctx: &Ctx, def: &EntryDef, index: usize, config: &VerificationConfig, seed: u64) -> VerificationEntry {
    let tolerance = match def.tol {
        Tol::Rel(k) => k * config.rel_tol,
        Tol::Abs(v) => v,
    };
    let outcomes: Vec<(usize, Result<Option<Trial>>)> = (0..config.trials)
        .into_par_iter()
        .map(|i| (i, (def.check)(ctx, &mut trial_rng(seed, index, i), i)))
        .collect();

    let mut trials = 0;
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    let mut witnesses = Vec::new();
    for (i, outcome) in outcomes {
        let (margin, description, inputs) = match outcome {
            Ok(None) => continue,
            Ok(Some(t)) => (t.margin, t.description, t.inputs),
            Err(e) => (f64::NEG_INFINITY, format!("error: {e}"), Vec::new()),
        };
        trials += 1;
        if !(margin >= worst) {
            worst = margin;
        }
        if !(margin >= -tolerance) {
            failures += 1;
            if witnesses.len() < MAX_WITNESSES {
                witnesses.push(Witness {
                    trial: i,
                    margin,
                    description,
                    trajectories: inputs.iter().map(Trajectory::to_csv).collect(),
                });
            }
        }
    }
    VerificationEntry {
        theorem_id: def.id.into(),
        description: def.description.into(),
        trials,
        failures,
        worst_margin: if trials == 0 { 0.0 } else { worst },
        tolerance,
        witnesses,
    }
}

// ---------------------------------------------------------------------------
// checks

fn min_of(values: impl IntoIterator<Item = f64>) -> f64 {
    values.into_iter().fold(f64::INFINITY, |m, v| if v >= m { m } else { v })
}

fn cumulative_weight_check(ctx: &Ctx, rng: &mut ChaCha8Rng, _: usize) -> Result<Option<Trial>> {
    let k = ctx.kernel(rng).kernel();
    let mut margin = f64::INFINITY;
    for t in ctx.times(rng) {
        margin = margin.min(1.0 - cumulative_weight(k, t)?);
    }
    trial(margin, k.name(), &[])
}

fn weighted_supremum_check(ctx: &Ctx, rng: &mut ChaCha8Rng, _: usize) -> Result<Option<Trial>> {
    let k = ctx.kernel(rng).kernel();
    let f = ctx.continuous(rng)?;
    let norm = sup_norm(&f);
    let mut margin = f64::INFINITY;
    for t in ctx.times(rng) {
        margin = margin.min(norm - weighted_convolution(k, &f, t, None)?);
    }
    trial(margin, k.name(), &[&f])
}

fn difference_control_check(ctx: &Ctx, rng: &mut ChaCha8Rng, _: usize) -> Result<Option<Trial>> {
    let k = ctx.kernel(rng).kernel();
    let f = ctx.continuous(rng)?;
    let g = ctx.continuous(rng)?;
    let d = f.sub(&g)?;
    let norm = sup_norm(&d);
    let mut margin = f64::INFINITY;
    for t in ctx.times(rng) {
        margin = margin.min(norm - signed_convolution(k, &d, t)?.abs());
    }
    trial(margin, k.name(), &[&f, &g])
}

fn generalized_check(ctx: &Ctx, rng: &mut ChaCha8Rng, _: usize) -> Result<Option<Trial>> {
    if ctx.generalized.is_empty() {
        return Ok(None);
    }
    let (k, abs_integral, integral, nonneg) = &ctx.generalized[rng.random_range(0..ctx.generalized.len())];
    let f = ctx.continuous(rng)?;
    let g = ctx.continuous(rng)?;
    let d = f.sub(&g)?;
    let (nf, nd) = (sup_norm(&f), sup_norm(&d));
    let mut margin = f64::INFINITY;
    for t in ctx.times(rng) {
        margin = margin.min(nf * abs_integral - signed_convolution(k, &f, t)?.abs());
        margin = margin.min(nd * abs_integral - signed_convolution(k, &d, t)?.abs());
        if *nonneg {
            margin = margin.min(nf * integral - weighted_convolution(k, &f, t, None)?);
        }
    }
    trial(margin, k.name(), &[&f, &g])
}

fn tanh_check(_: &Ctx, rng: &mut ChaCha8Rng, _: usize) -> Result<Option<Trial>> {
    let mut margin = f64::INFINITY;
    let mut description = String::new();
    for _ in 0..TANH_TRIPLES_PER_TRIAL {
        let (x, y, p): (f64, f64, f64) = (
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
        );
        let g: f64 = rng.random_range(0.01..20.0);
        let m = g * (x - y).abs() - (tanh_deviation(x, p, g) - tanh_deviation(y, p, g)).abs();
        if m < margin {
            margin = m;
            description = format!("x={x:.17e}, y={y:.17e}, p={p:.17e}, gamma0={g:.17e}");
        }
    }
    trial(margin, description, &[])
}

fn p1_check(ctx: &Ctx, rng: &mut ChaCha8Rng, _: usize) -> Result<Option<Trial>> {
    let Some(m) = ctx.historical(rng) else { return Ok(None) };
    let f = ctx.any(rng)?;
    let ind = induce(m, &f)?;
    let (lo, hi) = (m.lambda_min(), m.lambda_max());
    let margin = min_of(ind.values().into_iter().map(|v| (v - lo).min(hi - v)));
    trial(margin, m.name(), &[&f])
}

fn p2_check(ctx: &Ctx, rng: &mut ChaCha8Rng, i: usize) -> Result<Option<Trial>> {
    let Some(m) = ctx.historical(rng) else { return Ok(None) };
    let f = ctx.any(rng)?;
    // odd trials use a nearby g, where the Lipschitz bound is tightest
    let g = if i % 2 == 1 {
        let delta = rng.random_range(1e-4..1e-2) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        f.add(&Trajectory::constant(&ctx.domain, delta))?
    } else {
        ctx.any(rng)?
    };
    let (a, b) = (induce(m, &f)?, induce(m, &g)?);
    let gap = a
        .values()
        .iter()
        .zip(b.values())
        .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
    let bound = m.declared_lipschitz() * sup_norm(&f.sub(&g)?);
    trial(
        bound - gap,
        format!("{}: max|Λ_f - Λ_g| = {gap:.17e}, L‖f-g‖ = {bound:.17e}", m.name()),
        &[&f, &g],
    )
}

fn max_step(values: &[f64]) -> f64 {
    values.windows(2).fold(0.0f64, |m, w| m.max((w[1] - w[0]).abs()))
}

fn p3_check(ctx: &Ctx, rng: &mut ChaCha8Rng, _: usize) -> Result<Option<Trial>> {
    let Some(m) = ctx.historical(rng) else { return Ok(None) };
    let f = ctx.continuous(rng)?;
    if m.reference().is_some_and(|r| !r.is_continuous()) {
        return Ok(None);
    }
    let coarse = max_step(&induce(m, &f)?.values());
    let fine_f = f.with_domain(&ctx.domain.refined())?;
    let fine = max_step(&induce(m, &fine_f)?.values());
    if coarse <= DEGENERATE_NORM {
        return Ok(None);
    }
    let ratio = fine / coarse;
    trial(
        REFINEMENT_RATIO - ratio,
        format!("{}: ratio {ratio:.17e}", m.name()),
        &[&f],
    )
}

fn p4_check(ctx: &Ctx, rng: &mut ChaCha8Rng, _: usize) -> Result<Option<Trial>> {
    let Some(m) = ctx.historical(rng) else { return Ok(None) };
    let zero = Trajectory::zero(&ctx.domain);
    let ind = induce(m, &zero)?;
    let margin = min_of(ind.values().into_iter().map(|v| v - m.lambda_min()));
    trial(margin, m.name(), &[])
}

fn reduction_check(ctx: &Ctx, rng: &mut ChaCha8Rng, _: usize) -> Result<Option<Trial>> {
    let Some(m) = ctx.historical(rng) else { return Ok(None) };
    let SensitivityKind::Historical {
        reference,
        alpha0,
        gamma0,
        ..
    } = m.kind()
    else {
        unreachable!("historical() only returns historical models")
    };
    let (lo, hi) = (m.lambda_min(), m.lambda_max());
    let reduced = SensitivityModel::historical(reference.clone(), *alpha0, *gamma0, 0.0, lo, hi)?;
    let inst = SensitivityModel::instantaneous(reference.clone(), *gamma0, lo, hi)?;
    let f = ctx.any(rng)?;
    let ind = induce(&reduced, &f)?;
    let mut gap = 0.0f64;
    for (&s, v) in ctx.domain.nodes().iter().zip(ind.values()) {
        gap = gap.max((v - inst.evaluate(s, f.eval(s)?)?).abs());
    }
    trial(0.0 - gap, m.name(), &[&f])
}

fn axioms_check(ctx: &Ctx, rng: &mut ChaCha8Rng, _: usize) -> Result<Option<Trial>> {
    let Some(m) = ctx.pointwise(rng) else { return Ok(None) };
    let plan = ProbePlan {
        uniform_states: 64,
        random_states: 64,
        times: 33,
        seed: rng.next_u64(),
    };
    let rec = verify_axioms(m, &ctx.domain, &plan)?;
    let margin = min_of(rec.axioms.iter().map(|a| a.worst_margin));
    let witness = rec
        .axioms
        .iter()
        .filter_map(|a| a.witness.as_ref().map(|w| format!("{}: {w}", a.axiom)))
        .collect::<Vec<_>>()
        .join("; ");
    trial(margin, format!("{}; {witness}", m.name()), &[])
}

fn well_posedness_check(ctx: &Ctx, rng: &mut ChaCha8Rng, _: usize) -> Result<Option<Trial>> {
    let (k, m) = (ctx.kernel(rng), ctx.sensitivity(rng));
    let f = ctx.any(rng)?;
    let r = ctx.report(&f, k, m)?;
    let cap = r.lambda_inf * r.kappa_inf * r.horizon * r.sup_norm_f;
    let margin = min_of(r.j_values.iter().map(|&j| j.min(cap - j)));
    trial(margin, format!("{} / {}", r.kernel, r.sensitivity), &[&f])
}

fn positive_definiteness_check(ctx: &Ctx, rng: &mut ChaCha8Rng, i: usize) -> Result<Option<Trial>> {
    let (k, m) = (ctx.kernel(rng), ctx.sensitivity(rng));
    let f = if i == 0 { Trajectory::zero(&ctx.domain) } else { ctx.any(rng)? };
    let r = ctx.report(&f, k, m)?;
    let is_zero = r.sup_norm_f == 0.0;
    let margin = if is_zero { 0.0 - r.s_value } else { r.s_value - r.sup_norm_f };
    trial(margin, format!("{} / {}; zero input: {is_zero}", r.kernel, r.sensitivity), &[&f])
}

fn comparison_check(ctx: &Ctx, rng: &mut ChaCha8Rng, _: usize) -> Result<Option<Trial>> {
    let (k, m) = (ctx.kernel(rng), ctx.sensitivity(rng));
    let f = ctx.any(rng)?;
    let r = ctx.report(&f, k, m)?;
    trial(r.s_value - r.sup_norm_f, format!("{} / {}", r.kernel, r.sensitivity), &[&f])
}

fn strict_check(ctx: &Ctx, rng: &mut ChaCha8Rng, _: usize) -> Result<Option<Trial>> {
    let (k, m) = (ctx.kernel(rng), ctx.sensitivity(rng));
    let f = ctx.continuous(rng)?;
    let r = ctx.report(&f, k, m)?;
    let rec = strict_from_report(&r);
    if r.sup_norm_f <= DEGENERATE_NORM || !rec.hypothesis_met {
        return Ok(None);
    }
    trial(
        rec.margin - STRICT_GAP,
        format!("{} / {}; t* = {:.17e}", r.kernel, r.sensitivity, rec.t_star),
        &[&f],
    )
}

fn embedding_check(ctx: &Ctx, rng: &mut ChaCha8Rng, _: usize) -> Result<Option<Trial>> {
    let (k, m) = (ctx.kernel(rng), ctx.sensitivity(rng));
    let f = ctx.continuous(rng)?;
    let r = ctx.report(&f, k, m)?;
    let margin = (r.s_value - r.sup_norm_f).min(r.upper_bound - r.s_value);
    trial(margin, format!("{} / {}", r.kernel, r.sensitivity), &[&f])
}

fn inclusion_check(ctx: &Ctx, rng: &mut ChaCha8Rng, _: usize) -> Result<Option<Trial>> {
    let (k, m) = (ctx.kernel(rng), ctx.sensitivity(rng));
    let f = ctx.continuous(rng)?;
    let g = ctx.continuous(rng)?;
    let rec = inclusion_map_check(&f, &g, k.kernel(), m, &ctx.opts)?;
    trial(
        rec.bound - rec.s_difference,
        format!("{} / {}", k.kernel().name(), m.name()),
        &[&f, &g],
    )
}

fn discontinuous_check(ctx: &Ctx, rng: &mut ChaCha8Rng, _: usize) -> Result<Option<Trial>> {
    if ctx.discontinuous.is_empty() {
        return Ok(None);
    }
    let (k, m) = (ctx.kernel(rng), ctx.sensitivity(rng));
    let spec = &ctx.discontinuous[rng.random_range(0..ctx.discontinuous.len())];
    let f = random_trajectory(rng, spec, &ctx.domain)?;
    let r = ctx.report(&f, k, m)?;
    let margin = if r.member { r.upper_bound - r.s_value } else { f64::NEG_INFINITY };
    trial(margin, format!("{} / {}", r.kernel, r.sensitivity), &[&f])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerificationConfig {
        VerificationConfig {
            grid_points: 129,
            trials: 6,
            time_samples: 4,
            ..Default::default()
        }
    }

    #[test]
    fn default_suite_passes() {
        let report = run_suite(&small(), 42).unwrap();
        for e in &report.entries {
            assert_eq!(e.failures, 0, "{e:?}");
            assert!(e.worst_margin >= -e.tolerance);
        }
        assert_eq!(report.entries.len(), ENTRIES.len() + 1);
    }

    #[test]
    fn halved_lipschitz_is_falsified() {
        let mut cfg = small();
        cfg.sensitivities = vec![SensitivitySpec::Historical {
            lambda_min: 0.5,
            lambda_max: 1.5,
            gamma0: 2.0,
            alpha0: 1.0,
            beta0: 0.0,
            reference: TrajectorySource::default(),
            lipschitz_scale: Some(0.5),
        }];
        cfg.entries = Some(vec!["theorem.induced_sensitivity.P2".into()]);
        let report = run_suite(&cfg, 42).unwrap();
        let p2 = report.entry("theorem.induced_sensitivity.P2").unwrap();
        assert!(p2.failures > 0);
        assert_eq!(p2.witnesses[0].trajectories.len(), 2);
        // the restricted run misses entries, which the self-check reports
        assert!(report.entry(COVERAGE_ID).unwrap().failures > 0);
    }

    #[test]
    fn zero_generator_positive_definiteness() {
        let mut cfg = small();
        cfg.trajectories = vec![TrajectorySpec::new(TrajectoryKind::Zero, 1.0)];
        cfg.discontinuous.clear();
        cfg.entries = Some(vec!["lemma.functional.positive_definiteness".into()]);
        let report = run_suite(&cfg, 1).unwrap();
        let e = report.entry("lemma.functional.positive_definiteness").unwrap();
        assert_eq!((e.failures, e.worst_margin), (0, 0.0));
    }

    #[test]
    fn reproducible() {
        let cfg = VerificationConfig {
            entries: Some(vec!["theorem.embedding.two_sided".into(), "lemma.tanh_lipschitz".into()]),
            ..small()
        };
        let a = run_suite(&cfg, 9).unwrap().to_json();
        let b = run_suite(&cfg, 9).unwrap().to_json();
        assert_eq!(a, b);
        assert_ne!(a, run_suite(&cfg, 10).unwrap().to_json());
    }

    #[test]
    fn config_errors() {
        let err = VerificationConfig::from_json(r#"{"kernels": [{"type": "gaussian"}]}"#).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        let mut cfg = small();
        cfg.kernels = vec![KernelSpec::PowerLaw { gamma: 0.5, epsilon: 0.25 }];
        assert!(matches!(run_suite(&cfg, 0), Err(Error::Config(_))));
        let mut cfg = small();
        cfg.entries = Some(vec!["lemma.nonexistent".into()]);
        assert!(matches!(run_suite(&cfg, 0), Err(Error::Config(_))));
    }

    #[test]
    fn default_config_round_trips() {
        let cfg = VerificationConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(VerificationConfig::from_json(&text).unwrap(), cfg);
        assert_eq!(config_digest(&cfg).len(), 64);
    }
}
