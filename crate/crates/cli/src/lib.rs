//! Command-line driver: train agents, compare policies, and export Shapley
//! and attention explanations. Every run writes a manifest from which it can
//! be replayed.

use std::path::PathBuf;

use anyhow::anyhow;
use clap::{Args, Parser, Subcommand};
use vxslice::agent::Variant;

pub mod commands;
pub mod config;
pub mod manifest;

use commands::{execute, Invocation};
use config::FileConfig;
use manifest::{CommandSpec, RunManifest};

/// Bad input from the user: flags, config or missing files. Exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.downcast_ref::<UsageError>().is_some()) {
        2
    } else {
        1
    }
}

#[derive(Debug, Parser)]
#[command(name = "vxslice", version, about = "Vehicular network slicing with explainable DDPG")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// TOML config; the bundled default is used when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Profile from the config file: paper, desk or smoke.
    #[arg(long, default_value = "desk")]
    pub profile: String,
}

fn parse_variant(s: &str) -> Result<Variant, String> {
    Variant::parse(s).ok_or_else(|| format!("expected one of ddpg, attention, attention-sverl; got {s:?}"))
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an agent; writes checkpoint.json and metrics.csv.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_variant)]
        variant: Option<Variant>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Compare QoS satisfaction of the random policy and trained checkpoints.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Include a baseline policy; only `random` is available.
        #[arg(long = "policy")]
        policies: Vec<String>,
        #[arg(long = "checkpoint")]
        checkpoints: Vec<PathBuf>,
        /// Evaluation episodes.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Shapley values and attention weights on states visited by a checkpoint.
    Explain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Monte-Carlo permutations per state.
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        states: Option<usize>,
    },
    /// Pearson fidelity of attention weights for one or more checkpoints.
    Fidelity {
        #[command(flatten)]
        common: Common,
        #[arg(long = "checkpoint", required = true)]
        checkpoints: Vec<PathBuf>,
    },
    /// Re-run the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn absolute(p: &PathBuf) -> anyhow::Result<PathBuf> {
    std::fs::canonicalize(p).map_err(|e| anyhow!(UsageError(format!("cannot access {}: {e}", p.display()))))
}

pub fn run(cli: Cli) -> anyhow::Result<RunManifest> {
    let quiet = cli.quiet;
    let build = |common: &Common, command: CommandSpec| -> anyhow::Result<Invocation> {
        let config = FileConfig::load(common.config.as_deref())?.resolve(&common.profile)?;
        Ok(Invocation {
            config,
            seed: common.seed,
            command,
            out: common.out.clone(),
            replayed_from: None,
            quiet,
        })
    };
    let inv = match cli.command {
        Command::Train {
            common,
            variant,
            episodes,
        } => {
            let mut inv = build(&common, CommandSpec::Train)?;
            if let Some(v) = variant {
                inv.config.train.variant = v;
            }
            if let Some(e) = episodes {
                inv.config.train.episodes = e;
            }
            inv
        }
        Command::Evaluate {
            common,
            policies,
            checkpoints,
            episodes,
        } => {
            if let Some(p) = policies.iter().find(|p| p.as_str() != "random") {
                return Err(anyhow!(UsageError(format!("unknown policy {p:?}; only `random` is built in"))));
            }
            if policies.is_empty() && checkpoints.is_empty() {
                return Err(anyhow!(UsageError("give --policy random and/or --checkpoint PATH".into())));
            }
            let checkpoints = checkpoints.iter().map(absolute).collect::<anyhow::Result<_>>()?;
            let mut inv = build(
                &common,
                CommandSpec::Evaluate {
                    random: !policies.is_empty(),
                    checkpoints,
                },
            )?;
            if let Some(e) = episodes {
                inv.config.eval.episodes = e;
            }
            inv
        }
        Command::Explain {
            common,
            checkpoint,
            samples,
            states,
        } => {
            let config = FileConfig::load(common.config.as_deref())?.resolve(&common.profile)?;
            let spec = CommandSpec::Explain {
                checkpoint: absolute(&checkpoint)?,
                samples: samples.unwrap_or(config.train.shapley_samples),
                states: states.unwrap_or(config.eval.explain_states),
            };
            build(&common, spec)?
        }
        Command::Fidelity { common, checkpoints } => {
            let checkpoints = checkpoints.iter().map(absolute).collect::<anyhow::Result<_>>()?;
            build(&common, CommandSpec::Fidelity { checkpoints })?
        }
        Command::Replay { manifest, out } => {
            let m = RunManifest::read(&manifest)?;
            m.config.validate()?;
            Invocation {
                config: m.config,
                seed: m.seed,
                command: m.command,
                out,
                replayed_from: Some(absolute(&manifest)?),
                quiet,
            }
        }
    };
    execute(&inv)
}
