//! Experiment configuration, read from a single JSON document.

use std::path::Path;

use dnls_core::data::DataRecipe;
use dnls_core::evolution::{Model, SolverConfig};
use dnls_core::spectral::{Band, Field, Grid};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Conservation,
    Increment,
    Nscan,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::Conservation => "conservation",
            ExperimentKind::Increment => "increment",
            ExperimentKind::Nscan => "nscan",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "conservation" => Ok(Self::Conservation),
            "increment" => Ok(Self::Increment),
            "nscan" => Ok(Self::Nscan),
            other => Err(format!("unknown experiment `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub length: f64,
    pub modes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSpec {
    pub recipe: DataRecipe,
    /// Rescale to this `||f||_2^2`.
    #[serde(default)]
    pub target_mass: Option<f64>,
}

/// Parameters of the I-operator family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymbolSpec {
    pub s: f64,
    pub thresholds: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConservationSpec {
    /// Step sizes as multiples of `solver.dt`.
    #[serde(default = "default_refinements")]
    pub dt_multiples: Vec<f64>,
    #[serde(default = "default_mass_tolerance")]
    pub mass_tolerance: f64,
    #[serde(default = "default_order_window")]
    pub order_window: [f64; 2],
}

fn default_refinements() -> Vec<f64> {
    vec![4.0, 2.0, 1.0]
}

fn default_mass_tolerance() -> f64 {
    1e-10
}

fn default_order_window() -> [f64; 2] {
    [3.5, 4.5]
}

impl Default for ConservationSpec {
    fn default() -> Self {
        Self {
            dt_multiples: default_refinements(),
            mass_tolerance: default_mass_tolerance(),
            order_window: default_order_window(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncrementSpec {
    /// Random fields per calibration fit.
    #[serde(default = "default_fields")]
    pub calibration_fields: usize,
    /// Trajectory times at which the identity is checked.
    #[serde(default = "default_times")]
    pub check_times: usize,
    #[serde(default = "default_residual")]
    pub residual_tolerance: f64,
    #[serde(default = "default_reproducibility")]
    pub c2_reproducibility: f64,
}

fn default_fields() -> usize {
    10
}

fn default_times() -> usize {
    20
}

fn default_residual() -> f64 {
    1e-5
}

fn default_reproducibility() -> f64 {
    1e-6
}

impl Default for IncrementSpec {
    fn default() -> Self {
        Self {
            calibration_fields: default_fields(),
            check_times: default_times(),
            residual_tolerance: default_residual(),
            c2_reproducibility: default_reproducibility(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NScanSpec {
    /// Minimum number of octaves spanned by the thresholds.
    #[serde(default = "default_octaves")]
    pub min_octaves: f64,
    /// `slope_E2 <= slope_E1 - separation`.
    #[serde(default = "default_separation")]
    pub separation: f64,
    /// `slope_E2 <= max_slope_e2`.
    #[serde(default = "default_max_slope")]
    pub max_slope_e2: f64,
}

fn default_octaves() -> f64 {
    3.0
}

fn default_separation() -> f64 {
    0.5
}

fn default_max_slope() -> f64 {
    -1.5
}

impl Default for NScanSpec {
    fn default() -> Self {
        Self {
            min_octaves: default_octaves(),
            separation: default_separation(),
            max_slope_e2: default_max_slope(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Model,
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub data: DataSpec,
    pub symbols: SymbolSpec,
    /// Default experiment when none is given on the command line.
    #[serde(default)]
    pub experiment: Option<ExperimentKind>,
    /// Seed for random data and calibration fields; overrides recipe seeds when set.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub conservation: ConservationSpec,
    #[serde(default)]
    pub increment: IncrementSpec,
    #[serde(default)]
    pub nscan: NScanSpec,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.grid()?;
        self.solver.validate()?;
        if self.symbols.thresholds.iter().any(|n| !(*n >= 1.0)) {
            return Err(HarnessError::Config("thresholds must be >= 1".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid, HarnessError> {
        Ok(Grid::new(self.grid.length, self.grid.modes)?)
    }

    /// Data recipe with the configured seed applied.
    pub fn recipe(&self) -> DataRecipe {
        let mut r = self.data.recipe.clone();
        if let Some(s) = self.seed {
            match &mut r {
                DataRecipe::Rough { seed, .. } | DataRecipe::LowBand { seed, .. } => *seed = s,
                _ => {}
            }
        }
        r
    }

    pub fn initial_field(&self) -> Result<Field, HarnessError> {
        let grid = self.grid()?;
        let band = Band::retained(&grid, self.solver.dealias_fraction);
        let norm = self.data.target_mass.map(f64::sqrt);
        Ok(self.recipe().build(grid, band, norm))
    }

    /// Canonical JSON used for hashing and embedding in reports.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
