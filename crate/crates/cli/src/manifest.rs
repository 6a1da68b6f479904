use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::UsageError;

pub const MANIFEST_FILE: &str = "manifest.toml";

/// What was run; paths are absolute so a replay can find its inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum CommandSpec {
    Train,
    Evaluate {
        random: bool,
        checkpoints: Vec<PathBuf>,
    },
    Explain {
        checkpoint: PathBuf,
        samples: usize,
        states: usize,
    },
    Fidelity {
        checkpoints: Vec<PathBuf>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub code_version: String,
    pub seed: u64,
    pub command: CommandSpec,
    pub outputs: Vec<String>,
    pub started_at: u64,
    pub finished_at: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replayed_from: Option<PathBuf>,
    /// Fully resolved configuration, including command-line overrides.
    pub config: RunConfig,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> anyhow::Result<PathBuf> {
        let path = dir.join(MANIFEST_FILE);
        let text = toml::to_string(self).context("serializing manifest")?;
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow!(UsageError(format!("cannot read manifest {}: {e}", path.display()))))?;
        toml::from_str(&text).map_err(|e| anyhow!(UsageError(format!("invalid manifest {}: {e}", path.display()))))
    }
}
