//! Run configuration for `eval`, `classify-kernel` and `verify-sensitivity`.

use std::path::{Path, PathBuf};

use memfun_core::grid::{io, TimeDomain, Trajectory, DEFAULT_GRID_POINTS, DEFAULT_REL_TOL};
use memfun_core::verify::{KernelSpec, SensitivitySpec, TrajectorySource};
use memfun_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Taken from the trajectory file when absent.
    #[serde(default)]
    pub horizon: Option<f64>,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub sensitivity: Option<SensitivitySpec>,
    #[serde(default)]
    pub trajectory: Option<TrajectorySource>,
    #[serde(default = "default_tol")]
    pub rel_tol: f64,
    #[serde(default = "yes")]
    pub fast_path: bool,
    /// Also write `plot.csv` next to the report.
    #[serde(default)]
    pub plot: bool,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

fn default_grid() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_tol() -> f64 {
    DEFAULT_REL_TOL
}

fn yes() -> bool {
    true
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        // relative paths are taken from the config's directory
        if let Some(dir) = path.parent() {
            cfg.rebase(dir);
        }
        Ok(cfg)
    }

    fn rebase(&mut self, dir: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        };
        if let Some(TrajectorySource::File { file }) = &mut self.trajectory {
            fix(file);
        }
        if let Some(KernelSpec::Sampled { file }) = &mut self.kernel {
            fix(file);
        }
        match &mut self.sensitivity {
            Some(SensitivitySpec::Instantaneous { reference, .. })
            | Some(SensitivitySpec::Historical { reference, .. }) => {
                if let TrajectorySource::File { file } = reference {
                    fix(file);
                }
            }
            _ => {}
        }
    }

    /// Checks the invariants that do not need the numerics.
    pub fn validate(&self) -> Result<()> {
        if self.grid_points < 3 || self.grid_points.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "grid_points must be odd and at least 3, got {}",
                self.grid_points
            )));
        }
        if let Some(t) = self.horizon {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::Config(format!("horizon must be positive, got {t}")));
            }
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Config(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        let mut files: Vec<&PathBuf> = Vec::new();
        if let Some(f) = self.trajectory.as_ref().and_then(TrajectorySource::file) {
            files.push(f);
        }
        if let Some(KernelSpec::Sampled { file }) = &self.kernel {
            files.push(file);
        }
        if let Some(f) = self.sensitivity.as_ref().and_then(|s| s.reference()).and_then(TrajectorySource::file) {
            files.push(f);
        }
        for f in files {
            if !f.is_file() {
                return Err(Error::Config(format!("file {} does not exist", f.display())));
            }
        }
        Ok(())
    }

    /// The domain, reading the horizon from the trajectory file if needed.
    pub fn domain(&self) -> Result<TimeDomain> {
        let horizon = match (self.horizon, &self.trajectory) {
            (Some(t), _) => t,
            (None, Some(TrajectorySource::File { file })) => {
                let (times, _) = io::read_samples(std::fs::File::open(file)?)?;
                *times.last().expect("at least one row")
            }
            (None, _) => 1.0,
        };
        TimeDomain::uniform(horizon, self.grid_points).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn kernel_spec(&self) -> Result<&KernelSpec> {
        self.kernel.as_ref().ok_or_else(|| Error::Config("config has no kernel".into()))
    }

    pub fn sensitivity_spec(&self) -> Result<&SensitivitySpec> {
        self.sensitivity
            .as_ref()
            .ok_or_else(|| Error::Config("config has no sensitivity".into()))
    }

    pub fn trajectory(&self, domain: &TimeDomain) -> Result<Trajectory> {
        self.trajectory
            .as_ref()
            .ok_or_else(|| Error::Config("config has no trajectory".into()))?
            .build(domain)
    }
}
