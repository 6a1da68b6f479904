use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use serde::Serialize;
use vxslice::agent::{train_with, Agent};
use vxslice::env::{Environment, FeatureLayout};
use vxslice::eval::{
    collect_states, eval_seeds, feature_std, fidelity_pearson, run_comparison, ActorPolicy, ComparisonRow, Policy,
    RandomPolicy,
};
use vxslice::explain::{normalize_importance, shapley_mc, RolloutGame, RolloutSettings};
use vxslice::seeds::{derive_seed, rng_for, stream};

use crate::config::RunConfig;
use crate::manifest::{unix_now, CommandSpec, RunManifest};
use crate::UsageError;

pub const CHECKPOINT_FILE: &str = "checkpoint.json";

/// Everything needed to (re)run a command.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub config: RunConfig,
    pub seed: u64,
    pub command: CommandSpec,
    pub out: PathBuf,
    pub replayed_from: Option<PathBuf>,
    pub quiet: bool,
}

pub fn execute(inv: &Invocation) -> anyhow::Result<RunManifest> {
    std::fs::create_dir_all(&inv.out).with_context(|| format!("creating output directory {}", inv.out.display()))?;
    let started_at = unix_now();
    let outputs = match &inv.command {
        CommandSpec::Train => train(inv)?,
        CommandSpec::Evaluate { random, checkpoints } => evaluate(inv, *random, checkpoints)?,
        CommandSpec::Explain {
            checkpoint,
            samples,
            states,
        } => explain(inv, checkpoint, *samples, *states)?,
        CommandSpec::Fidelity { checkpoints } => fidelity(inv, checkpoints)?,
    };
    let manifest = RunManifest {
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: inv.seed,
        command: inv.command.clone(),
        outputs,
        started_at,
        finished_at: unix_now(),
        replayed_from: inv.replayed_from.clone(),
        config: inv.config.clone(),
    };
    manifest.write(&inv.out)?;
    Ok(manifest)
}

fn write_csv<T: Serialize>(dir: &Path, name: &str, rows: &[T]) -> anyhow::Result<String> {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(name.to_string())
}

/// Loads a checkpoint and checks it matches the configured network.
pub fn load_agent(path: &Path, config: &RunConfig) -> anyhow::Result<Agent> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow!(UsageError(format!("cannot read checkpoint {}: {e}", path.display()))))?;
    let agent = Agent::from_json(&text).with_context(|| format!("loading {}", path.display()))?;
    let (d, a) = (config.network.observation_dim(), config.network.action_dim());
    if agent.state_dim() != d || agent.action_dim() != a {
        return Err(anyhow!(UsageError(format!(
            "checkpoint {} expects state/action dims {}/{} but the network config gives {d}/{a}",
            path.display(),
            agent.state_dim(),
            agent.action_dim()
        ))));
    }
    Ok(agent)
}

fn train(inv: &Invocation) -> anyhow::Result<Vec<String>> {
    let cfg = &inv.config.train;
    let quiet = inv.quiet;
    let (agent, run) = train_with(&inv.config.network, cfg, inv.seed, |log| {
        if !quiet && (log.episode % cfg.eval_interval == 0 || log.episode + 1 == cfg.episodes) {
            eprintln!(
                "episode {:>4}  reward {:>9.4}  urllc {:>6}  embb {:>6}",
                log.episode,
                log.mean_reward,
                fmt_pct(log.urllc_pct),
                fmt_pct(log.embb_pct)
            );
        }
    })?;
    let checkpoint = inv.out.join(CHECKPOINT_FILE);
    std::fs::write(&checkpoint, agent.to_json()?).with_context(|| format!("writing {}", checkpoint.display()))?;
    let metrics = write_csv(&inv.out, "metrics.csv", &run.logs)?;
    Ok(vec![CHECKPOINT_FILE.to_string(), metrics])
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |p| format!("{p:.2}%"))
}

fn evaluate(inv: &Invocation, random: bool, checkpoints: &[PathBuf]) -> anyhow::Result<Vec<String>> {
    let net = &inv.config.network;
    let agents = checkpoints
        .iter()
        .map(|p| load_agent(p, &inv.config))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let random_policy = RandomPolicy::for_network(net);
    let actor_policies: Vec<ActorPolicy> = agents.iter().map(|a| ActorPolicy::new(a, net)).collect();
    let names: Vec<String> = agents.iter().map(|a| a.variant.to_string()).collect();
    let mut methods: Vec<(&str, &dyn Policy)> = Vec::new();
    if random {
        methods.push(("random", &random_policy));
    }
    for (name, p) in names.iter().zip(&actor_policies) {
        methods.push((name.as_str(), p));
    }
    let seeds = eval_seeds(inv.seed, inv.config.eval.episodes);
    let rows = run_comparison(&methods, net, &seeds, inv.config.eval.steps)?;
    if !inv.quiet {
        print_table(&rows);
    }
    Ok(vec![write_csv(&inv.out, "comparison.csv", &rows)?])
}

fn print_table(rows: &[ComparisonRow]) {
    println!("{:<18} {:>9} {:>9} {:>12}", "method", "urllc", "embb", "mean reward");
    for r in rows {
        println!(
            "{:<18} {:>9} {:>9} {:>12.4}",
            r.method,
            fmt_pct(r.urllc_pct),
            fmt_pct(r.embb_pct),
            r.mean_reward
        );
    }
}

#[derive(Serialize)]
struct ShapleyRow<'a> {
    state: usize,
    feature: usize,
    name: &'a str,
    psi: f64,
    psi_norm: f64,
    alpha: f64,
    alpha_norm: f64,
}

#[derive(Serialize)]
struct AttentionRow<'a> {
    feature: usize,
    name: &'a str,
    mean_alpha: f64,
    mean_psi_norm: f64,
}

#[derive(Serialize)]
struct RankRow<'a> {
    rank: usize,
    feature: usize,
    name: &'a str,
    mean_alpha: f64,
    mean_psi_norm: f64,
}

fn explain(inv: &Invocation, checkpoint: &Path, samples: usize, states: usize) -> anyhow::Result<Vec<String>> {
    if samples == 0 {
        return Err(anyhow!(UsageError("--samples must be ≥ 1".into())));
    }
    if states == 0 {
        return Err(anyhow!(UsageError("--states must be ≥ 1".into())));
    }
    let cfg = &inv.config;
    let agent = load_agent(checkpoint, cfg)?;
    let layout = FeatureLayout {
        num_vehicles: cfg.network.num_vehicles,
        num_gnbs: cfg.network.num_gnbs,
    };
    let names = layout.names();
    let d = layout.dim();

    // One noise-free episode of the trained policy supplies the analysed
    // states and the masking baseline (their mean).
    let episode_seed = eval_seeds(inv.seed, 1)[0];
    let mut env = Environment::new(cfg.network.clone(), episode_seed)?;
    let policy = ActorPolicy::new(&agent, &cfg.network);
    let mut snapshots = Vec::with_capacity(cfg.eval.steps);
    let mut rng = rng_for(episode_seed, &[stream::NOISE]);
    for _ in 0..cfg.eval.steps {
        snapshots.push(env.clone());
        let obs = env.observe().0;
        env.step(&policy.act(&obs, &mut rng)?)?;
    }
    let mut baseline = vec![0.0; d];
    for s in &snapshots {
        let obs = s.observe();
        baseline.iter_mut().zip(obs.iter()).for_each(|(b, v)| *b += v);
    }
    baseline.iter_mut().for_each(|b| *b /= snapshots.len() as f64);

    let settings = RolloutSettings {
        horizon: cfg.train.rollout_horizon,
        gamma: cfg.train.gamma,
        rollouts: cfg.train.rollouts_per_coalition,
    };
    let k = states.min(snapshots.len());
    let stride = snapshots.len() / k;
    let mut shapley_rng = rng_for(inv.seed, &[stream::SHAPLEY]);
    let mut rows = Vec::new();
    let mut mean_alpha = vec![0.0; d];
    let mut mean_psi = vec![0.0; d];
    for state in 0..k {
        let snapshot = &snapshots[state * stride];
        let game = RolloutGame::new(
            &agent.actor,
            snapshot.clone(),
            baseline.clone(),
            settings,
            derive_seed(inv.seed, &[stream::SHAPLEY, state as u64]),
        )?;
        let report = shapley_mc(&game, samples, &mut shapley_rng)?;
        let psi_norm = normalize_importance(&report.values);
        let (alpha, _) = agent.actor.attention_forward(game.state())?;
        let alpha_norm = normalize_importance(&alpha);
        for i in 0..d {
            mean_alpha[i] += alpha[i] / k as f64;
            mean_psi[i] += psi_norm[i] / k as f64;
            rows.push(ShapleyRow {
                state,
                feature: i,
                name: &names[i],
                psi: report.values[i],
                psi_norm: psi_norm[i],
                alpha: alpha[i],
                alpha_norm: alpha_norm[i],
            });
        }
        if !inv.quiet {
            eprintln!("state {}/{k} analysed", state + 1);
        }
    }
    let attention: Vec<AttentionRow> = (0..d)
        .map(|i| AttentionRow {
            feature: i,
            name: &names[i],
            mean_alpha: mean_alpha[i],
            mean_psi_norm: mean_psi[i],
        })
        .collect();
    let mut order: Vec<usize> = (0..d).collect();
    // stable sort keeps index order among ties
    order.sort_by(|&a, &b| mean_alpha[b].total_cmp(&mean_alpha[a]));
    let top: Vec<RankRow> = order
        .iter()
        .take(10)
        .enumerate()
        .map(|(r, &i)| RankRow {
            rank: r + 1,
            feature: i,
            name: &names[i],
            mean_alpha: mean_alpha[i],
            mean_psi_norm: mean_psi[i],
        })
        .collect();
    Ok(vec![
        write_csv(&inv.out, "shapley.csv", &rows)?,
        write_csv(&inv.out, "attention.csv", &attention)?,
        write_csv(&inv.out, "top10.csv", &top)?,
    ])
}

#[derive(Serialize)]
struct FidelityStateRow<'a> {
    method: &'a str,
    state: usize,
    r: Option<f64>,
}

#[derive(Serialize)]
struct FidelitySummaryRow<'a> {
    method: &'a str,
    mean_r: Option<f64>,
    states: usize,
    skipped: usize,
}

fn fidelity(inv: &Invocation, checkpoints: &[PathBuf]) -> anyhow::Result<Vec<String>> {
    if checkpoints.is_empty() {
        return Err(anyhow!(UsageError("fidelity needs at least one --checkpoint".into())));
    }
    let cfg = &inv.config;
    let seeds = eval_seeds(inv.seed, cfg.eval.fidelity_episodes);
    let states = collect_states(&cfg.network, &seeds, cfg.eval.steps, cfg.eval.fidelity_stride)?;
    let delta = feature_std(&states);
    let mut per_state = Vec::new();
    let mut summary = Vec::new();
    let agents = checkpoints
        .iter()
        .map(|p| load_agent(p, cfg))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let names: Vec<String> = agents.iter().map(|a| a.variant.to_string()).collect();
    for (agent, name) in agents.iter().zip(&names) {
        let report = fidelity_pearson(&agent.actor, &states, &delta)?;
        for (state, r) in report.per_state.iter().enumerate() {
            per_state.push(FidelityStateRow {
                method: name,
                state,
                r: *r,
            });
        }
        if !inv.quiet {
            println!("{name:<18} mean r {}", report.mean_r.map_or("n/a".into(), |r| format!("{r:.4}")));
        }
        summary.push(FidelitySummaryRow {
            method: name,
            mean_r: report.mean_r,
            states: report.states,
            skipped: report.skipped,
        });
    }
    Ok(vec![
        write_csv(&inv.out, "fidelity.csv", &per_state)?,
        write_csv(&inv.out, "fidelity_summary.csv", &summary)?,
    ])
}
