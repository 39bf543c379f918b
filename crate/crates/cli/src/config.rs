use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog;
use crate::error::{invalid, CliError, Result};

/// Mechanisms the runner knows how to build.
pub const MECHANISM_NAMES: &[&str] = &[
    "exponential",
    "erm",
    "fixed",
    "subsampled",
    "mixture",
    "subsampled-mixture",
    "mcmc",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A single experiment run, read from a flat TOML file.
///
/// ```toml
/// experiment = "audit"
/// problem = "threshold"
/// mechanism = "exponential"
/// epsilon = 1.0
/// n = 3
/// resolution = 16
/// universe = [0.25, 0.75]
/// seed = 7
/// output = "audit.csv"
/// ```
///
/// Seeds are TOML integers and therefore limited to `0..=i64::MAX`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: String,
    #[serde(default = "default_problem")]
    pub problem: String,
    #[serde(default = "default_mechanism")]
    pub mechanism: String,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mcmc_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_grid: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resolutions: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Feature values of the audit universe; binary-label problems get both
    /// labels at each value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub universe: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
}

fn default_problem() -> String {
    "threshold".into()
}

fn default_mechanism() -> String {
    "exponential".into()
}

fn default_epsilon() -> f64 {
    1.0
}

fn default_seed() -> u64 {
    1
}

impl RunConfig {
    /// Reads, parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Schema(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Where rows are written when `output` is absent.
    pub fn output_path(&self) -> PathBuf {
        self.output.clone().unwrap_or_else(|| {
            let ext = match self.format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            PathBuf::from(format!("dperm-{}.{ext}", self.experiment))
        })
    }

    pub fn validate(&self) -> Result<()> {
        if catalog::find(&self.experiment).is_none() {
            return Err(CliError::UnknownExperiment(self.experiment.clone()));
        }
        if !dperm_core::problems::PROBLEM_NAMES.contains(&self.problem.as_str()) {
            return Err(invalid(format!(
                "unknown problem `{}` (expected one of {})",
                self.problem,
                dperm_core::problems::PROBLEM_NAMES.join(", ")
            )));
        }
        if !MECHANISM_NAMES.contains(&self.mechanism.as_str()) {
            return Err(invalid(format!(
                "unknown mechanism `{}` (expected one of {})",
                self.mechanism,
                MECHANISM_NAMES.join(", ")
            )));
        }
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(invalid("epsilon must be finite and nonnegative"));
        }
        if let Some(d) = self.delta {
            if !(0.0..1.0).contains(&d) {
                return Err(invalid("delta must lie in [0, 1)"));
            }
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(invalid("gamma must lie in (0, 1]"));
            }
        }
        if self.mcmc_steps == Some(0) {
            return Err(invalid("mcmc_steps must be at least 1"));
        }
        if self.n == Some(0) {
            return Err(invalid("n must be at least 1"));
        }
        if let Some(grid) = &self.n_grid {
            if grid.is_empty() || grid.contains(&0) {
                return Err(invalid("n_grid must be nonempty with entries >= 1"));
            }
        }
        if self.resolution == Some(0) {
            return Err(invalid("resolution must be at least 1"));
        }
        if let Some(r) = &self.resolutions {
            if r.is_empty() || r.contains(&0) {
                return Err(invalid("resolutions must be nonempty with entries >= 1"));
            }
        }
        if let Some(t) = self.trials {
            if t < 2 {
                return Err(invalid("trials must be at least 2"));
            }
        }
        if let Some(u) = &self.universe {
            if u.is_empty() || u.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(invalid("universe must be nonempty with values in [0, 1]"));
            }
        }
        if matches!(self.mechanism.as_str(), "subsampled" | "subsampled-mixture") && self.gamma.is_none() {
            return Err(invalid(format!("mechanism `{}` needs gamma", self.mechanism)));
        }
        if matches!(self.mechanism.as_str(), "mixture" | "subsampled-mixture") && self.delta.is_none() {
            return Err(invalid(format!("mechanism `{}` needs delta", self.mechanism)));
        }
        if self.mechanism == "mcmc" && self.mcmc_steps.is_none() {
            return Err(invalid("mechanism `mcmc` needs mcmc_steps"));
        }
        Ok(())
    }
}
