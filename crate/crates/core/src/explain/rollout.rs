//! Characteristic function from masked-policy rollouts: `v(C)` is the mean
//! truncated discounted return when the policy only observes the features in
//! `C` (the rest are replaced by a baseline) while the environment evolves on
//! its true state.

use ndarray::Array2;

use super::coalition::{mask_state, Coalition};
use super::shapley::{CoalitionGame, RolloutInfo};
use crate::agent::AttentionActor;
use crate::env::{Environment, RelaxedAction};
use crate::error::{Error, Result};
use crate::seeds::derive_seed;

/// Deterministic policy evaluated on a batch of (possibly masked) states.
pub trait BatchPolicy {
    fn act_batch(&self, states: &Array2<f64>) -> Result<Array2<f64>>;
}

impl BatchPolicy for AttentionActor {
    fn act_batch(&self, states: &Array2<f64>) -> Result<Array2<f64>> {
        self.predict_batch(states)
    }
}

/// Environment that can be cloned and stepped with a flat action.
pub trait RolloutEnv: Clone {
    fn observation(&self) -> Vec<f64>;
    fn step_flat(&mut self, action: &[f64]) -> Result<f64>;
    fn reseed(&mut self, seed: u64);
}

impl RolloutEnv for Environment {
    fn observation(&self) -> Vec<f64> {
        self.observe().0
    }

    fn step_flat(&mut self, action: &[f64]) -> Result<f64> {
        let cfg = self.config();
        let raw = RelaxedAction::from_flat(action, cfg.num_vehicles, cfg.num_gnbs)?;
        Ok(self.step(&raw)?.reward)
    }

    fn reseed(&mut self, seed: u64) {
        Environment::reseed(self, seed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RolloutSettings {
    pub horizon: usize,
    pub gamma: f64,
    pub rollouts: usize,
}

/// Game over the features of the state held by `env`.
///
/// Rollout `r` of every coalition uses the same environment seed, so
/// coalitions are compared under common random numbers and marginal
/// contributions are not swamped by mobility noise.
pub struct RolloutGame<'a, P: ?Sized, E> {
    policy: &'a P,
    env: E,
    state: Vec<f64>,
    baseline: Vec<f64>,
    settings: RolloutSettings,
    seed: u64,
}

impl<'a, P: BatchPolicy + ?Sized, E: RolloutEnv> RolloutGame<'a, P, E> {
    /// `seed` identifies the analysed state; rollout seeds derive from it.
    pub fn new(policy: &'a P, env: E, baseline: Vec<f64>, settings: RolloutSettings, seed: u64) -> Result<Self> {
        let state = env.observation();
        if baseline.len() != state.len() {
            return Err(Error::DimensionMismatch {
                context: "masking baseline",
                expected: state.len(),
                actual: baseline.len(),
            });
        }
        if settings.rollouts == 0 {
            return Err(Error::InvalidArgument("at least one rollout per coalition is required".into()));
        }
        Ok(Self {
            policy,
            env,
            state,
            baseline,
            settings,
            seed,
        })
    }

    pub fn state(&self) -> &[f64] {
        &self.state
    }

    fn rollout_seed(&self, rollout: usize) -> u64 {
        derive_seed(self.seed, &[rollout as u64])
    }
}

impl<P: BatchPolicy + ?Sized, E: RolloutEnv> CoalitionGame for RolloutGame<'_, P, E> {
    fn num_players(&self) -> usize {
        self.state.len()
    }

    fn value(&self, coalition: &Coalition) -> Result<f64> {
        Ok(self.values(std::slice::from_ref(coalition))?[0])
    }

    /// All coalitions × rollouts advance in lockstep so the policy runs once
    /// per time step on a single batch.
    fn values(&self, coalitions: &[Coalition]) -> Result<Vec<f64>> {
        let RolloutSettings { horizon, gamma, rollouts } = self.settings;
        let d = self.state.len();
        if let Some(c) = coalitions.iter().find(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch {
                context: "coalition",
                expected: d,
                actual: c.dim(),
            });
        }
        if horizon == 0 || coalitions.is_empty() {
            return Ok(vec![0.0; coalitions.len()]);
        }
        let runs = coalitions.len() * rollouts;
        let mut envs: Vec<E> = (0..runs)
            .map(|j| {
                let mut e = self.env.clone();
                e.reseed(self.rollout_seed(j % rollouts));
                e
            })
            .collect();
        let mut returns = vec![0.0; runs];
        let mut discount = 1.0;
        let mut states = Array2::zeros((runs, d));
        for t in 0..horizon {
            for (j, env) in envs.iter().enumerate() {
                let obs = if t == 0 { self.state.clone() } else { env.observation() };
                let masked = mask_state(&obs, &coalitions[j / rollouts], &self.baseline)?;
                states.row_mut(j).iter_mut().zip(masked).for_each(|(dst, v)| *dst = v);
            }
            let actions = self.policy.act_batch(&states)?;
            for (j, env) in envs.iter_mut().enumerate() {
                let a = actions.row(j);
                let r = env.step_flat(a.as_slice().expect("standard layout"))?;
                returns[j] += discount * r;
            }
            discount *= gamma;
        }
        Ok(returns
            .chunks(rollouts)
            .map(|c| c.iter().sum::<f64>() / rollouts as f64)
            .collect())
    }

    fn rollout_info(&self) -> Option<RolloutInfo> {
        Some(RolloutInfo {
            horizon: self.settings.horizon,
            gamma: self.settings.gamma,
            rollouts: self.settings.rollouts,
            baseline: self.baseline.clone(),
        })
    }
}

/// `v(C)` for one coalition.
pub fn characteristic_value<P: BatchPolicy + ?Sized, E: RolloutEnv>(
    policy: &P,
    env: &E,
    coalition: &Coalition,
    baseline: &[f64],
    settings: RolloutSettings,
    seed: u64,
) -> Result<f64> {
    RolloutGame::new(policy, env.clone(), baseline.to_vec(), settings, seed)?.value(coalition)
}
