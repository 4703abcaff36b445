//! Experiment configuration, read from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::environment::EnvironmentSpec;
use crate::error::{invalid, Error, Result};
use crate::grid::{Bump, Grid, Window};
use crate::solver::Schedule;

/// Either an inline environment table or a path to a TOML file holding one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EnvironmentSource {
    Path(PathBuf),
    Inline(EnvironmentSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n: usize,
    pub side: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct BirkhoffConfig {
    /// Defaults to the main ladder.
    pub eps: Option<Vec<f64>>,
    /// Defaults to the observation window.
    pub window: Option<Window>,
    pub max_final_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftDecayConfig {
    /// Defaults to the forcing bump.
    pub test_function: Option<Bump>,
}

/// Pinned thresholds for the pass/fail checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckConfig {
    /// Bound on the median relative error at the smallest ε.
    pub final_error_max: Option<f64>,
    /// Bound on the Fourier/matched limit discrepancy.
    pub route_agreement_max: Option<f64>,
    /// Relative error bound of the spatial average at the smallest ε.
    pub birkhoff_final_max: f64,
    /// Number of random functions for the operator checks.
    pub random_functions: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            final_error_max: None,
            route_agreement_max: None,
            birkhoff_final_max: 0.02,
            random_functions: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub environment: EnvironmentSource,
    pub lambda: f64,
    pub forcing: Bump,
    pub eps: Vec<f64>,
    pub seeds: Vec<u64>,
    pub grid: GridConfig,
    /// Observation window; defaults to the central quarter of the torus.
    #[serde(default)]
    pub window: Option<Window>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub birkhoff: BirkhoffConfig,
    #[serde(default)]
    pub drift_decay: DriftDecayConfig,
    #[serde(default)]
    pub checks: CheckConfig,
    /// Kernel images per axis.
    #[serde(default = "default_images")]
    pub images: usize,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn one() -> usize {
    1
}

fn default_images() -> usize {
    crate::discretize::kernel::DEFAULT_IMAGES
}

impl ExperimentConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base)
    }

    pub fn environment_spec(&self) -> Result<EnvironmentSpec> {
        let spec = match &self.environment {
            EnvironmentSource::Inline(s) => s.clone(),
            EnvironmentSource::Path(p) => {
                let path = if p.is_absolute() { p.clone() } else { self.base_dir.join(p) };
                let text = std::fs::read_to_string(&path)?;
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn grid(&self, d: usize) -> Result<Grid> {
        Grid::new(d, self.grid.side, self.grid.n)
    }

    pub fn window(&self, grid: &Grid) -> Window {
        self.window.clone().unwrap_or_else(|| Window::central(grid, 0.25))
    }

    pub fn birkhoff_eps(&self) -> Vec<f64> {
        self.birkhoff.eps.clone().unwrap_or_else(|| self.eps.clone())
    }

    pub fn test_function(&self) -> Bump {
        self.drift_decay.test_function.clone().unwrap_or_else(|| self.forcing.clone())
    }

    pub fn with_seeds(mut self, seeds: Vec<u64>) -> Result<Self> {
        self.seeds = seeds;
        self.validate()?;
        Ok(self)
    }

    /// Checks the invariants that do not need the environment file.
    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() {
            return Err(invalid("eps ladder must not be empty"));
        }
        if self.eps.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(invalid("eps ladder must be strictly decreasing"));
        }
        if self.eps.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(invalid("every eps must lie in (0, 1]"));
        }
        if self.seeds.is_empty() {
            return Err(invalid("seed list must not be empty"));
        }
        if !(self.lambda > 0.0) {
            return Err(invalid("lambda must be positive"));
        }
        if self.workers == 0 {
            return Err(invalid("workers must be at least 1"));
        }
        if let Some(b) = &self.birkhoff.eps {
            if b.is_empty() || b.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(invalid("Birkhoff eps ladder must be non-empty and strictly decreasing"));
            }
        }
        self.schedule.validate()?;
        let d = self.forcing.center.len();
        let grid = self.grid(d)?;
        let window = self.window(&grid);
        if window.center.len() != d || window.half_width.len() != d {
            return Err(invalid("window and forcing must have the same dimension"));
        }
        if !window.inside_torus(grid.side) {
            return Err(invalid("observation window must lie strictly inside the torus"));
        }
        let supp = self.forcing.support();
        let inside = supp
            .center
            .iter()
            .zip(&supp.half_width)
            .zip(window.center.iter().zip(&window.half_width))
            .all(|((c, r), (wc, ww))| c - r >= wc - ww && c + r <= wc + ww);
        if !inside {
            return Err(invalid("support of the forcing must lie inside the observation window"));
        }
        Ok(())
    }
}

/// Parses a comma-separated seed list.
pub fn parse_seed_list(s: &str) -> Result<Vec<u64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<u64>().map_err(|e| Error::Config(format!("bad seed '{t}': {e}"))))
        .collect()
}
