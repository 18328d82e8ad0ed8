//! Experiment configuration, read from TOML.
//!
//! ```toml
//! seed = 7
//! epsilons = [0.4, 0.2, 0.1, 0.05]
//! smoothing_rounds = 1          # optional, default 1
//!
//! [mesh]
//! kind = "circle"               # circle | torus | sphere
//! resolution = 2000
//! size = 1.0
//!
//! [target]
//! kind = "snowflake"            # identity | snowflake | scaled | conformal | qs_power
//! alpha = 0.5
//!
//! [overrides]                   # optional
//! r = 6.0
//! c = 10.0
//! l = 2.0
//!
//! [output]                      # optional
//! dir = "out"
//! stem = "report"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{MeshSpec, TargetSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mesh: MeshSpec,
    pub target: TargetSpec,
    pub epsilons: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_rounds")]
    pub smoothing_rounds: usize,
    #[serde(default)]
    pub overrides: Overrides,
    #[serde(default)]
    pub output: OutputPaths,
}

fn default_rounds() -> usize {
    1
}

/// Replacements for the computed `R`, `C` and `L`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub r: Option<f64>,
    pub c: Option<f64>,
    pub l: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_stem")]
    pub stem: String,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_stem() -> String {
    "report".into()
}

impl Default for OutputPaths {
    fn default() -> Self {
        OutputPaths { dir: default_dir(), stem: default_stem() }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(e) = self.epsilons.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(Error::Configuration(format!("epsilon {e} is not a positive number")));
        }
        if let Some(w) = self.epsilons.windows(2).find(|w| w[1] >= w[0]) {
            return Err(Error::Configuration(format!(
                "epsilon schedule must be strictly decreasing, found {} then {}",
                w[0], w[1]
            )));
        }
        let o = &self.overrides;
        for (name, v) in [("r", o.r), ("c", o.c), ("l", o.l)] {
            if let Some(v) = v {
                if !(v >= 1.0 && v.is_finite()) {
                    return Err(Error::Configuration(format!("override {name} must be at least 1, got {v}")));
                }
            }
        }
        Ok(())
    }

    pub fn table_path(&self) -> PathBuf {
        self.output.dir.join(format!("{}.csv", self.output.stem))
    }

    pub fn document_path(&self) -> PathBuf {
        self.output.dir.join(format!("{}.json", self.output.stem))
    }

    pub fn plot_path(&self) -> PathBuf {
        self.output.dir.join(format!("{}.svg", self.output.stem))
    }
}
