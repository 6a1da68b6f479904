use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};
use vxslice::agent::TrainConfig;
use vxslice::NetworkConfig;

use crate::UsageError;

pub const DEFAULT_CONFIG: &str = include_str!("../../../configs/default.toml");

/// Evaluation and explanation sizes for a profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub episodes: usize,
    pub steps: usize,
    /// States analysed by `explain`.
    pub explain_states: usize,
    /// Shared states for `fidelity`: episodes × (steps / stride).
    pub fidelity_episodes: usize,
    pub fidelity_stride: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            episodes: 50,
            steps: 100,
            explain_states: 5,
            fidelity_episodes: 5,
            fidelity_stride: 20,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Profile {
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub network: NetworkConfig,
    #[serde(default)]
    pub profiles: BTreeMap<String, Profile>,
}

/// Network plus one selected profile: everything a command needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub profile: String,
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl FileConfig {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        toml::from_str(text).map_err(|e| anyhow!(UsageError(format!("invalid config: {e}"))))
    }

    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Self::parse(DEFAULT_CONFIG),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| anyhow!(UsageError(format!("cannot read config {}: {e}", p.display()))))?;
                Self::parse(&text).with_context(|| format!("in {}", p.display()))
            }
        }
    }

    pub fn resolve(&self, profile: &str) -> anyhow::Result<RunConfig> {
        let p = self.profiles.get(profile).ok_or_else(|| {
            let known: Vec<&str> = self.profiles.keys().map(String::as_str).collect();
            anyhow!(UsageError(format!("unknown profile {profile:?}; available: {}", known.join(", "))))
        })?;
        let run = RunConfig {
            profile: profile.to_string(),
            network: self.network.clone(),
            train: p.train.clone(),
            eval: p.eval.clone(),
        };
        run.validate()?;
        Ok(run)
    }
}

impl RunConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        self.network
            .validate()
            .map_err(|e| anyhow!(UsageError(format!("network: {e}"))))?;
        self.train
            .validate()
            .map_err(|e| anyhow!(UsageError(format!("profile {}: {e}", self.profile))))?;
        if self.eval.episodes == 0 || self.eval.steps == 0 {
            return Err(anyhow!(UsageError("eval episodes and steps must be ≥ 1".into())));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_config_has_three_valid_profiles() {
        let c = FileConfig::parse(DEFAULT_CONFIG).unwrap();
        for p in ["paper", "desk", "smoke"] {
            c.resolve(p).unwrap();
        }
        assert_eq!(c.resolve("paper").unwrap().train.episodes, 500);
        assert!(c.resolve("nope").is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(FileConfig::parse("[network]\nbogus = 1\n").is_err());
    }
}
