//! Pipeline configuration file. Every section and field is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimation::FitConfig;
use crate::numerics::{DeConfig, IntegratorSpec};
use crate::persist::load_json;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    pub integrator: IntegratorSpec,
    pub de: DeConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub checkpoints: Vec<usize>,
    pub lambdas: Vec<f64>,
    /// First horizon at which the finite-n bound is tested.
    pub n0: usize,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig { checkpoints: vec![100, 1000, 10_000], lambdas: vec![2.0, 5.0, 10.0], n0: 100 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub fit: FitConfig,
    pub optimize: OptimizeConfig,
    pub simulate: SimulateConfig,
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let cfg: PipelineConfig = load_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.fit.de.validate()?;
        self.optimize.de.validate()?;
        self.optimize.integrator.validate()
    }

    /// Sets every seed in the file to `seed`.
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.fit.de.seed = seed;
        self.optimize.de.seed = seed;
        self.optimize.integrator.seed = seed;
        self
    }
}
