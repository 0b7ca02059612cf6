//! JSON-facing descriptions of kernels, sensitivities and trajectories.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{io, TimeDomain, Trajectory};
use crate::kernels::Kernel;
use crate::sensitivity::SensitivityModel;

use super::generators::random_trajectory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Exponential { alpha: f64 },
    PowerLaw { gamma: f64, epsilon: f64 },
    FiniteMemory { delta: f64 },
    /// `κ(τ) = cos(ωτ)`, sign-changing for `ωT > π/2`.
    Cosine { frequency: f64 },
    /// Samples `τ, κ(τ)` in the trajectory CSV format.
    Sampled { file: PathBuf },
}

impl KernelSpec {
    pub fn build(&self, domain: &TimeDomain) -> Result<Kernel> {
        match self {
            KernelSpec::Exponential { alpha } => Kernel::exponential(*alpha, domain),
            KernelSpec::PowerLaw { gamma, epsilon } => Kernel::power_law(*gamma, *epsilon, domain),
            KernelSpec::FiniteMemory { delta } => Kernel::finite_memory(*delta, domain),
            KernelSpec::Cosine { frequency } => {
                let w = *frequency;
                if !w.is_finite() {
                    return Err(Error::invalid(format!("cosine frequency must be finite, got {w}")));
                }
                Ok(Kernel::from_fn(domain, move |t| (w * t).cos()))
            }
            KernelSpec::Sampled { file } => {
                let f = std::fs::File::open(file)
                    .map_err(|e| Error::Config(format!("cannot open kernel file {}: {e}", file.display())))?;
                Ok(Kernel::tabulated(io::read_trajectory_csv(f, domain)?))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryKind {
    Fourier,
    Polynomial,
    PiecewiseStep,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectorySpec {
    pub kind: TrajectoryKind,
    #[serde(default = "one")]
    pub amplitude: f64,
    /// Number of jumps for `piecewise_step`.
    #[serde(default)]
    pub breakpoints: usize,
    /// Fixed jump times; drawn at random when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
    /// Fixed step levels; drawn at random when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
}

fn one() -> f64 {
    1.0
}

impl TrajectorySpec {
    pub fn new(kind: TrajectoryKind, amplitude: f64) -> Self {
        TrajectorySpec {
            kind,
            amplitude,
            breakpoints: 0,
            times: None,
            levels: None,
        }
    }

    pub fn steps(breakpoints: usize, amplitude: f64) -> Self {
        TrajectorySpec {
            breakpoints,
            ..Self::new(TrajectoryKind::PiecewiseStep, amplitude)
        }
    }

    pub fn is_continuous(&self) -> bool {
        self.kind != TrajectoryKind::PiecewiseStep || self.breakpoints == 0
    }
}

/// Where a trajectory comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrajectorySource {
    File {
        file: PathBuf,
    },
    Constant {
        constant: f64,
    },
    Generator {
        generator: TrajectorySpec,
        #[serde(default)]
        seed: u64,
    },
}

impl Default for TrajectorySource {
    fn default() -> Self {
        TrajectorySource::Constant { constant: 0.0 }
    }
}

impl TrajectorySource {
    pub fn build(&self, domain: &TimeDomain) -> Result<Trajectory> {
        use rand::SeedableRng;
        match self {
            TrajectorySource::File { file } => {
                let f = std::fs::File::open(file)
                    .map_err(|e| Error::Config(format!("cannot open trajectory file {}: {e}", file.display())))?;
                io::read_trajectory_csv(f, domain)
            }
            TrajectorySource::Constant { constant } => {
                if !constant.is_finite() {
                    return Err(Error::invalid(format!("constant trajectory must be finite, got {constant}")));
                }
                Ok(Trajectory::constant(domain, *constant))
            }
            TrajectorySource::Generator { generator, seed } => {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(*seed);
                random_trajectory(&mut rng, generator, domain)
            }
        }
    }

    pub fn file(&self) -> Option<&PathBuf> {
        match self {
            TrajectorySource::File { file } => Some(file),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SensitivitySpec {
    Constant {
        value: f64,
    },
    Instantaneous {
        lambda_min: f64,
        lambda_max: f64,
        gamma0: f64,
        #[serde(default)]
        reference: TrajectorySource,
        /// Multiplies the declared Lipschitz constant.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz_scale: Option<f64>,
    },
    Historical {
        lambda_min: f64,
        lambda_max: f64,
        gamma0: f64,
        alpha0: f64,
        beta0: f64,
        #[serde(default)]
        reference: TrajectorySource,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lipschitz_scale: Option<f64>,
    },
}

impl SensitivitySpec {
    pub fn build(&self, domain: &TimeDomain) -> Result<SensitivityModel> {
        let (model, scale) = match self {
            SensitivitySpec::Constant { value } => (SensitivityModel::constant(*value)?, None),
            SensitivitySpec::Instantaneous {
                lambda_min,
                lambda_max,
                gamma0,
                reference,
                lipschitz_scale,
            } => (
                SensitivityModel::instantaneous(reference.build(domain)?, *gamma0, *lambda_min, *lambda_max)?,
                *lipschitz_scale,
            ),
            SensitivitySpec::Historical {
                lambda_min,
                lambda_max,
                gamma0,
                alpha0,
                beta0,
                reference,
                lipschitz_scale,
            } => (
                SensitivityModel::historical(
                    reference.build(domain)?,
                    *alpha0,
                    *gamma0,
                    *beta0,
                    *lambda_min,
                    *lambda_max,
                )?,
                *lipschitz_scale,
            ),
        };
        Ok(match scale {
            Some(s) => {
                let l = model.declared_lipschitz() * s;
                model.with_declared_lipschitz(l)
            }
            None => model,
        })
    }

    pub fn is_historical(&self) -> bool {
        matches!(self, SensitivitySpec::Historical { .. })
    }

    pub fn reference(&self) -> Option<&TrajectorySource> {
        match self {
            SensitivitySpec::Constant { .. } => None,
            SensitivitySpec::Instantaneous { reference, .. } | SensitivitySpec::Historical { reference, .. } => {
                Some(reference)
            }
        }
    }
}

/// Inputs of the verification suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationConfig {
    pub horizon: f64,
    pub grid_points: usize,
    pub rel_tol: f64,
    /// Randomized trials per entry.
    pub trials: usize,
    /// Time samples per trial for pointwise kernel estimates.
    pub time_samples: usize,
    /// Regular kernels used by the functional checks.
    pub kernels: Vec<KernelSpec>,
    /// Kernels for the generalized-kernel estimates.
    pub generalized_kernels: Vec<KernelSpec>,
    pub sensitivities: Vec<SensitivitySpec>,
    /// Continuous trajectory generators.
    pub trajectories: Vec<TrajectorySpec>,
    /// Generators with jumps.
    pub discontinuous: Vec<TrajectorySpec>,
    /// Restricts the run to these entry ids; all entries run when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<String>>,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        let reference = TrajectorySource::Generator {
            generator: TrajectorySpec::new(TrajectoryKind::Fourier, 0.5),
            seed: 7,
        };
        VerificationConfig {
            horizon: 1.0,
            grid_points: 513,
            rel_tol: 1e-8,
            trials: 24,
            time_samples: 16,
            kernels: vec![
                KernelSpec::Exponential { alpha: 0.5 },
                KernelSpec::Exponential { alpha: 1.0 },
                KernelSpec::Exponential { alpha: 5.0 },
                KernelSpec::FiniteMemory { delta: 1.0 },
            ],
            generalized_kernels: vec![
                KernelSpec::PowerLaw { gamma: 0.5, epsilon: 0.25 },
                KernelSpec::FiniteMemory { delta: 0.5 },
                KernelSpec::Cosine { frequency: 4.0 },
            ],
            sensitivities: vec![
                SensitivitySpec::Constant { value: 1.0 },
                SensitivitySpec::Instantaneous {
                    lambda_min: 0.5,
                    lambda_max: 1.5,
                    gamma0: 2.0,
                    reference: reference.clone(),
                    lipschitz_scale: None,
                },
                SensitivitySpec::Historical {
                    lambda_min: 0.5,
                    lambda_max: 1.5,
                    gamma0: 2.0,
                    alpha0: 1.0,
                    beta0: 0.0,
                    reference: TrajectorySource::default(),
                    lipschitz_scale: None,
                },
                SensitivitySpec::Historical {
                    lambda_min: 0.25,
                    lambda_max: 2.0,
                    gamma0: 3.0,
                    alpha0: 2.0,
                    beta0: 1.5,
                    reference,
                    lipschitz_scale: None,
                },
            ],
            trajectories: vec![
                TrajectorySpec::new(TrajectoryKind::Fourier, 1.0),
                TrajectorySpec::new(TrajectoryKind::Polynomial, 2.0),
                TrajectorySpec::new(TrajectoryKind::Fourier, 0.1),
            ],
            discontinuous: vec![
                TrajectorySpec {
                    times: Some(vec![0.5]),
                    levels: Some(vec![1.0, 0.0]),
                    ..TrajectorySpec::steps(1, 1.0)
                },
                TrajectorySpec::steps(3, 1.0),
            ],
            entries: None,
        }
    }
}

impl VerificationConfig {
    pub fn domain(&self) -> Result<TimeDomain> {
        TimeDomain::uniform(self.horizon, self.grid_points)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::Config(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if self.grid_points < 3 || self.grid_points.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "grid_points must be odd and at least 3, got {}",
                self.grid_points
            )));
        }
        if self.trials == 0 || self.time_samples == 0 {
            return Err(Error::Config("trials and time_samples must be positive".into()));
        }
        if self.kernels.is_empty() || self.sensitivities.is_empty() || self.trajectories.is_empty() {
            return Err(Error::Config(
                "kernels, sensitivities and trajectories must be non-empty".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}
