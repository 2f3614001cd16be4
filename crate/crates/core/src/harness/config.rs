use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::algorithms::{Algorithm, LearnerConfig};
use crate::env::{BoxPushing, Warehouse};
use crate::error::{Error, Result};

/// Environment selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum EnvConfig {
    BoxPushing {
        size: usize,
        /// Replace the macro set with the four one-step primitive actions.
        #[serde(default)]
        primitive: bool,
    },
    Warehouse {
        scenario: String,
    },
}

impl EnvConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            EnvConfig::BoxPushing { size, primitive } => {
                if *primitive {
                    BoxPushing::primitive(*size)?;
                } else {
                    BoxPushing::new(*size)?;
                }
                Ok(())
            }
            EnvConfig::Warehouse { scenario } if scenario == "A" => Ok(()),
            EnvConfig::Warehouse { scenario } => Err(Error::Config(format!(
                "warehouse scenario `{scenario}` is not available (only A)"
            ))),
        }
    }

    pub fn label(&self) -> String {
        match self {
            EnvConfig::BoxPushing { size, .. } => format!("box-pushing-{size}"),
            EnvConfig::Warehouse { scenario } => format!("warehouse-{}", scenario.to_lowercase()),
        }
    }

    pub fn box_pushing(&self) -> Result<BoxPushing> {
        match self {
            EnvConfig::BoxPushing { size, primitive: true } => BoxPushing::primitive(*size),
            EnvConfig::BoxPushing { size, primitive: false } => BoxPushing::new(*size),
            _ => Err(Error::Config("not a box pushing config".into())),
        }
    }

    pub fn warehouse(&self) -> Result<Warehouse> {
        self.validate()?;
        match self {
            EnvConfig::Warehouse { .. } => Ok(Warehouse::new()),
            _ => Err(Error::Config("not a warehouse config".into())),
        }
    }
}

fn default_eval_period() -> usize {
    100
}

fn default_eval_episodes() -> usize {
    10
}

/// A complete experiment description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Training episodes per trial.
    pub episodes: usize,
    #[serde(default = "default_eval_period")]
    pub eval_period: usize,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    pub env: EnvConfig,
    pub learner: LearnerConfig,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.learner.validate()?;
        if self.eval_period == 0 || self.eval_episodes == 0 {
            return Err(Error::Config("evaluation period and episode count must be positive".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        if let (EnvConfig::BoxPushing { primitive: true, .. }, Algorithm::NaiveMacIacc | Algorithm::MacIaicc) =
            (&self.env, self.learner.algorithm)
        {
            return Err(Error::Config(
                "primitive box pushing only pairs with mac-iac or mac-cac".into(),
            ));
        }
        Ok(())
    }

    /// Method label: the algorithm, or `iac`/`cac` on primitive actions.
    pub fn method(&self) -> String {
        match (&self.env, self.learner.algorithm) {
            (EnvConfig::BoxPushing { primitive: true, .. }, Algorithm::MacIac) => "iac".into(),
            (EnvConfig::BoxPushing { primitive: true, .. }, Algorithm::MacCac) => "cac".into(),
            (_, a) => a.name().into(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?).map_err(|e| Error::io(path, e))
    }

    /// SHA-256 of the canonical TOML serialization, excluding the output directory.
    pub fn hash(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.out_dir = None;
        let digest = Sha256::digest(canonical.to_toml()?.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::presets::{preset, Method, Scale};

    #[test]
    fn toml_round_trip_and_stable_hash() {
        let cfg = preset("box-pushing", 8, Method::MacIaicc, Scale::Desk).unwrap();
        let text = cfg.to_toml().unwrap();
        let back = RunConfig::from_toml(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash().unwrap(), cfg.hash().unwrap());
        let mut other = cfg.clone();
        other.learner.gamma = 0.99;
        assert_ne!(other.hash().unwrap(), cfg.hash().unwrap());
        let mut moved = cfg.clone();
        moved.out_dir = Some("elsewhere".into());
        assert_eq!(moved.hash().unwrap(), cfg.hash().unwrap());
    }

    #[test]
    fn gamma_is_mandatory() {
        let cfg = preset("box-pushing", 8, Method::MacIac, Scale::Desk).unwrap();
        let text = cfg.to_toml().unwrap();
        let without: String = text
            .lines()
            .filter(|l| !l.starts_with("gamma"))
            .map(|l| format!("{l}\n"))
            .collect();
        assert!(RunConfig::from_toml(&without).is_err());
    }

    #[test]
    fn unknown_scenario_is_rejected() {
        let mut cfg = preset("warehouse", 0, Method::MacIac, Scale::Desk).unwrap();
        cfg.env = EnvConfig::Warehouse { scenario: "C".into() };
        assert!(cfg.validate().is_err());
    }
}
