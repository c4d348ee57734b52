//! One TOML document describing a whole experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::augment::AugmentConfig;
use crate::channel::{SimScenario, SystemConfig};
use crate::error::{Error, Result};
use crate::metaenv::MetaEnvConfig;
use crate::model::ModelConfig;
use crate::train::TrainConfig;

/// Size of the simulated target scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    /// Seed UEs `Ñ_ue`.
    pub n_ue: usize,
    /// Seed slots per UE `Ñ_slot`.
    pub n_slot: usize,
    /// Extra held-out UEs simulated for testing; 0 disables the test set.
    #[serde(default)]
    pub n_test_ue: usize,
    /// Slots per held-out UE.
    #[serde(default = "default_test_slots")]
    pub n_test_slot: usize,
    /// Eval share when retraining without an explicit eval set.
    #[serde(default = "default_eval_fraction")]
    pub eval_fraction: f64,
}

fn default_test_slots() -> usize {
    5
}

fn default_eval_fraction() -> f64 {
    0.1
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self {
            n_ue: 20,
            n_slot: 5,
            n_test_ue: 100,
            n_test_slot: default_test_slots(),
            eval_fraction: default_eval_fraction(),
        }
    }
}

/// Input files consumed by the later pipeline stages.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathsConfig {
    pub meta_env: Option<PathBuf>,
    pub target_channels: Option<PathBuf>,
    pub target_csi: Option<PathBuf>,
    pub train_set: Option<PathBuf>,
    pub eval_set: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed, copied into every component seed on load.
    pub seed: u64,
    pub system: SystemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<SimScenario>,
    pub meta_env: MetaEnvConfig,
    #[serde(default)]
    pub augment: AugmentConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub target: TargetConfig,
    #[serde(default)]
    pub paths: PathsConfig,
}

impl ExperimentConfig {
    /// The desk-scale setup: 8 ports, 4 subbands, 16 feedback bits.
    pub fn desk() -> Self {
        let system = SystemConfig::desk();
        Self {
            seed: 0,
            system,
            scenario: None,
            meta_env: MetaEnvConfig::desk(&system),
            augment: AugmentConfig::default(),
            model: ModelConfig::desk(system.n_t, system.n_sb),
            train: TrainConfig::default(),
            target: TargetConfig::default(),
            paths: PathsConfig::default(),
        }
    }

    pub fn scenario(&self) -> SimScenario {
        self.scenario
            .clone()
            .unwrap_or_else(|| SimScenario::desk(&self.system))
    }

    /// Sets the master seed and every component seed.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.meta_env.seed = seed;
        self.train.seed = seed;
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: Self =
            toml::from_str(text).map_err(|e| Error::config("config", e.message().to_string()))?;
        cfg.set_seed(cfg.seed);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        let sys = &self.system;
        sys.validate()?;
        self.scenario().validate(sys)?;
        self.meta_env.validate(sys)?;
        self.augment.validate()?;
        self.model.validate()?;
        if self.model.n_t != sys.n_t {
            return Err(Error::config(
                "model.n_t",
                format!("must equal system.n_t = {}", sys.n_t),
            ));
        }
        if self.model.n_sb != sys.n_sb {
            return Err(Error::config(
                "model.n_sb",
                format!("must equal system.n_sb = {}", sys.n_sb),
            ));
        }
        self.train.validate()?;
        if self.train.meta_holdout_tasks >= self.meta_env.tasks {
            return Err(Error::config(
                "train.meta_holdout_tasks",
                format!("must be below meta_env.tasks = {}", self.meta_env.tasks),
            ));
        }
        if self.target.n_ue == 0 {
            return Err(Error::config("target.n_ue", "must be at least 1"));
        }
        if self.target.n_slot == 0 {
            return Err(Error::config("target.n_slot", "must be at least 1"));
        }
        if self.target.n_test_ue > 0 && self.target.n_test_slot == 0 {
            return Err(Error::config("target.n_test_slot", "must be at least 1"));
        }
        if !(self.target.eval_fraction > 0.0 && self.target.eval_fraction < 1.0) {
            return Err(Error::config("target.eval_fraction", "must lie in (0, 1)"));
        }
        Ok(())
    }
}
