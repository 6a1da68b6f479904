//! Training loop: act with decaying exploration noise, store transitions,
//! update once the buffer holds a batch, and periodically supervise the
//! attention layer with Monte-Carlo Shapley targets.

use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::ddpg::{Agent, ExplainTargets};
use super::replay::{ReplayBuffer, Transition};
use crate::config::NetworkConfig;
use crate::env::Environment;
use crate::error::Result;
use crate::eval::QosTally;
use crate::explain::{normalize_importance, shapley_mc, RolloutGame, RolloutSettings};
use crate::seeds::{derive_seed, rng_for, stream};

/// One row of the per-episode training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub mean_reward: f64,
    /// Mean losses over the episode's updates; empty before the buffer warms up.
    pub critic_loss: Option<f64>,
    pub actor_loss: Option<f64>,
    pub explain_loss: Option<f64>,
    pub noise_sigma: f64,
    pub updates: usize,
    pub urllc_pct: Option<f64>,
    pub embb_pct: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainingRun {
    pub logs: Vec<EpisodeLog>,
    pub buffer_len: usize,
    pub updates: usize,
}

#[derive(Default)]
struct Mean {
    sum: f64,
    n: usize,
}

impl Mean {
    fn add(&mut self, v: f64) {
        self.sum += v;
        self.n += 1;
    }

    fn get(&self) -> Option<f64> {
        (self.n > 0).then(|| self.sum / self.n as f64)
    }
}

/// Builds environment and agent from the seed's `ENV` and `INIT` streams and trains.
pub fn train(network: &NetworkConfig, config: &TrainConfig, seed: u64) -> Result<(Agent, TrainingRun)> {
    train_with(network, config, seed, |_| {})
}

/// [`train`] with a per-episode callback.
pub fn train_with(
    network: &NetworkConfig,
    config: &TrainConfig,
    seed: u64,
    on_episode: impl FnMut(&EpisodeLog),
) -> Result<(Agent, TrainingRun)> {
    let mut env = Environment::new(network.clone(), derive_seed(seed, &[stream::ENV]))?;
    let mut init = rng_for(seed, &[stream::INIT]);
    let mut agent = Agent::new(network.observation_dim(), network.action_dim(), config, &mut init)?;
    let run = run_training(&mut env, &mut agent, config, seed, on_episode)?;
    Ok((agent, run))
}

/// Runs `config.episodes` episodes; `on_episode` sees each log row as it is produced.
pub fn run_training(
    env: &mut Environment,
    agent: &mut Agent,
    config: &TrainConfig,
    seed: u64,
    mut on_episode: impl FnMut(&EpisodeLog),
) -> Result<TrainingRun> {
    config.validate()?;
    let (n, m) = (env.config().num_vehicles, env.config().num_gnbs);
    let mut noise_rng = rng_for(seed, &[stream::NOISE]);
    let mut replay_rng = rng_for(seed, &[stream::REPLAY]);
    let mut shapley_rng = rng_for(seed, &[stream::SHAPLEY]);
    let mut buffer = ReplayBuffer::new(config.buffer_capacity);
    let mut logs = Vec::with_capacity(config.episodes);
    let mut total_updates = 0;
    // Environment snapshots from the previous episode, candidates for supervision.
    let mut snapshots: Vec<Environment> = Vec::new();

    for episode in 0..config.episodes {
        let sigma = config.noise_for_episode(episode);
        let supervise = config.variant.uses_shapley() && episode % config.eval_interval == 0;
        let targets = if supervise && !snapshots.is_empty() {
            Some(shapley_targets(agent, &snapshots, &buffer, config, seed, episode, &mut shapley_rng)?)
        } else {
            None
        };

        let mut state = env.reset().0;
        let mut recent = Vec::with_capacity(config.steps_per_episode);
        let (mut reward, mut critic, mut actor, mut explain) =
            (Mean::default(), Mean::default(), Mean::default(), Mean::default());
        let mut qos = QosTally::default();
        let mut updates = 0;
        for _ in 0..config.steps_per_episode {
            recent.push(env.clone());
            // noise is added before the action is executed
            let action = agent.act_flat(&state, sigma, &mut noise_rng)?;
            let outcome = env.step(&crate::env::RelaxedAction::from_flat(&action, n, m)?)?;
            reward.add(outcome.reward);
            qos.record(&outcome);
            let next_state = outcome.observation.0;
            buffer.push(Transition {
                state: std::mem::replace(&mut state, next_state.clone()),
                action,
                reward: outcome.reward,
                next_state,
            });
            if buffer.len() >= config.batch_size {
                for _ in 0..config.updates_per_step {
                    let losses = agent.train_batch(&buffer, &mut replay_rng, targets.as_ref())?;
                    critic.add(losses.critic);
                    actor.add(losses.actor);
                    if let Some(e) = losses.explain {
                        explain.add(e);
                    }
                    updates += 1;
                }
            }
        }
        snapshots = recent;
        total_updates += updates;
        let log = EpisodeLog {
            episode,
            mean_reward: reward.get().unwrap_or(0.0),
            critic_loss: critic.get(),
            actor_loss: actor.get(),
            explain_loss: explain.get(),
            noise_sigma: sigma,
            updates,
            urllc_pct: qos.urllc_pct(),
            embb_pct: qos.embb_pct(),
        };
        on_episode(&log);
        logs.push(log);
    }
    Ok(TrainingRun {
        logs,
        buffer_len: buffer.len(),
        updates: total_updates,
    })
}

/// Samples states from `snapshots` and computes normalized Shapley targets
/// under the current policy. Targets are fixed for the rest of the episode.
fn shapley_targets<R: Rng + ?Sized>(
    agent: &Agent,
    snapshots: &[Environment],
    buffer: &ReplayBuffer,
    config: &TrainConfig,
    seed: u64,
    episode: usize,
    rng: &mut R,
) -> Result<ExplainTargets> {
    let d = agent.state_dim();
    let baseline = if buffer.len() >= config.batch_size {
        buffer.mean_state().unwrap_or_else(|| vec![0.0; d])
    } else {
        vec![0.0; d]
    };
    let k = config.supervision_states.clamp(1, snapshots.len());
    let picks = sample(rng, snapshots.len(), k).into_vec();
    let settings = RolloutSettings {
        horizon: config.rollout_horizon,
        gamma: config.gamma,
        rollouts: config.rollouts_per_coalition,
    };
    let mut states = Array2::zeros((k, d));
    let mut targets = Array2::zeros((k, d));
    for (row, &idx) in picks.iter().enumerate() {
        let state_seed = derive_seed(seed, &[stream::SHAPLEY, episode as u64, row as u64]);
        let game = RolloutGame::new(&agent.actor, snapshots[idx].clone(), baseline.clone(), settings, state_seed)?;
        let report = shapley_mc(&game, config.shapley_samples, rng)?;
        states.row_mut(row).assign(&ndarray::ArrayView1::from(game.state()));
        targets
            .row_mut(row)
            .assign(&ndarray::Array1::from(normalize_importance(&report.values)));
    }
    Ok(ExplainTargets { states, targets })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::Variant;

    fn tiny(variant: Variant) -> (NetworkConfig, TrainConfig) {
        let net = NetworkConfig {
            num_vehicles: 2,
            num_gnbs: 2,
            ..Default::default()
        };
        let cfg = TrainConfig {
            variant,
            episodes: 3,
            steps_per_episode: 6,
            batch_size: 4,
            eval_interval: 2,
            shapley_samples: 2,
            rollout_horizon: 2,
            rollouts_per_coalition: 1,
            supervision_states: 2,
            actor_hidden: vec![8],
            critic_hidden: vec![8],
            ..Default::default()
        };
        (net, cfg)
    }

    #[test]
    fn no_updates_before_buffer_holds_a_batch() {
        let (net, mut cfg) = tiny(Variant::Ddpg);
        cfg.episodes = 1;
        cfg.steps_per_episode = 3;
        cfg.batch_size = 4;
        let (_, run) = train(&net, &cfg, 1).unwrap();
        assert_eq!(run.updates, 0);
        assert_eq!(run.buffer_len, 3);
        assert!(run.logs[0].critic_loss.is_none());
    }

    #[test]
    fn supervision_produces_explain_loss_and_is_deterministic() {
        let (net, cfg) = tiny(Variant::AttentionSverl);
        let (a, run) = train(&net, &cfg, 9).unwrap();
        assert!(run.logs[2].explain_loss.is_some());
        assert!(run.logs[1].explain_loss.is_none());
        let (b, again) = train(&net, &cfg, 9).unwrap();
        assert_eq!(run.logs, again.logs);
        assert_eq!(a, b);
    }
}
