use rand::{Rng, RngCore};
use serde::Serialize;

use super::metrics::{qos_satisfaction, EpisodeMetrics};
use crate::agent::{Agent, AttentionActor};
use crate::config::NetworkConfig;
use crate::env::{Environment, RelaxedAction};
use crate::error::Result;
use crate::seeds::{derive_seed, rng_for, stream};

pub trait Policy {
    fn act(&self, observation: &[f64], rng: &mut dyn RngCore) -> Result<RelaxedAction>;
}

/// Every q-score and fraction drawn uniformly from `[0, 1]`.
#[derive(Debug, Clone, Copy)]
pub struct RandomPolicy {
    pub num_vehicles: usize,
    pub num_gnbs: usize,
}

impl RandomPolicy {
    pub fn for_network(config: &NetworkConfig) -> Self {
        Self {
            num_vehicles: config.num_vehicles,
            num_gnbs: config.num_gnbs,
        }
    }
}

pub fn random_action<R: Rng + ?Sized>(num_vehicles: usize, num_gnbs: usize, rng: &mut R) -> RelaxedAction {
    let flat: Vec<f64> = (0..2 * num_vehicles * num_gnbs).map(|_| rng.gen::<f64>()).collect();
    RelaxedAction::from_flat(&flat, num_vehicles, num_gnbs).expect("length matches by construction")
}

impl Policy for RandomPolicy {
    fn act(&self, _: &[f64], rng: &mut dyn RngCore) -> Result<RelaxedAction> {
        Ok(random_action(self.num_vehicles, self.num_gnbs, rng))
    }
}

/// Noise-free actor output.
#[derive(Debug, Clone, Copy)]
pub struct ActorPolicy<'a> {
    pub actor: &'a AttentionActor,
    pub num_vehicles: usize,
    pub num_gnbs: usize,
}

impl<'a> ActorPolicy<'a> {
    pub fn new(agent: &'a Agent, config: &NetworkConfig) -> Self {
        Self {
            actor: &agent.actor,
            num_vehicles: config.num_vehicles,
            num_gnbs: config.num_gnbs,
        }
    }
}

impl Policy for ActorPolicy<'_> {
    fn act(&self, observation: &[f64], _: &mut dyn RngCore) -> Result<RelaxedAction> {
        RelaxedAction::from_flat(&self.actor.predict(observation)?, self.num_vehicles, self.num_gnbs)
    }
}

/// Seeds of the shared evaluation episodes.
pub fn eval_seeds(master: u64, episodes: usize) -> Vec<u64> {
    (0..episodes as u64).map(|i| derive_seed(master, &[stream::EVAL, i])).collect()
}

/// Runs one episode per seed; the policy's own randomness comes from the
/// same seed so every method sees identical environments.
pub fn evaluate_policy(
    policy: &dyn Policy,
    network: &NetworkConfig,
    seeds: &[u64],
    steps: usize,
) -> Result<Vec<EpisodeMetrics>> {
    seeds
        .iter()
        .map(|&seed| {
            let mut env = Environment::new(network.clone(), seed)?;
            let mut rng = rng_for(seed, &[stream::NOISE]);
            let mut obs = env.observe().0;
            let mut metrics = EpisodeMetrics::default();
            for _ in 0..steps {
                let action = policy.act(&obs, &mut rng)?;
                let outcome = env.step(&action)?;
                metrics.record(&outcome);
                obs = outcome.observation.0;
            }
            Ok(metrics)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub method: String,
    pub urllc_pct: Option<f64>,
    pub embb_pct: Option<f64>,
    pub mean_reward: f64,
    pub episodes: usize,
}

/// Evaluates every method on the same seeds.
pub fn run_comparison(
    methods: &[(&str, &dyn Policy)],
    network: &NetworkConfig,
    seeds: &[u64],
    steps: usize,
) -> Result<Vec<ComparisonRow>> {
    methods
        .iter()
        .map(|&(name, policy)| {
            let series = evaluate_policy(policy, network, seeds, steps)?;
            let (urllc_pct, embb_pct) = qos_satisfaction(&series);
            let mean_reward = series.iter().map(|m| m.mean_reward()).sum::<f64>() / series.len().max(1) as f64;
            Ok(ComparisonRow {
                method: name.to_string(),
                urllc_pct,
                embb_pct,
                mean_reward,
                episodes: series.len(),
            })
        })
        .collect()
}

/// States visited by the random policy on the given seeds, every `stride`-th
/// slot. Independent of any trained agent, so variants can share them.
pub fn collect_states(network: &NetworkConfig, seeds: &[u64], steps: usize, stride: usize) -> Result<Vec<Vec<f64>>> {
    let policy = RandomPolicy::for_network(network);
    let stride = stride.max(1);
    let mut states = Vec::new();
    for &seed in seeds {
        let mut env = Environment::new(network.clone(), seed)?;
        let mut rng = rng_for(seed, &[stream::NOISE]);
        for t in 0..steps {
            let obs = env.observe().0;
            if t % stride == 0 {
                states.push(obs.clone());
            }
            env.step(&policy.act(&obs, &mut rng)?)?;
        }
    }
    Ok(states)
}
