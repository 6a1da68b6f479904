//! DDPG updates for the attention actor, with the optional explanation term
//! folded into the actor objective.

use ndarray::{concatenate, s, Array2, Axis};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::actor::{ActorGradients, AttentionActor, AttentionMode};
use super::config::{TrainConfig, Variant};
use super::replay::{Batch, ReplayBuffer};
use crate::env::RelaxedAction;
use crate::error::{Error, Result};
use crate::nn::{Activation, AdamConfig, DenseNet, Layer, OptimizerState};

/// States with fixed normalized Shapley targets, one row each.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplainTargets {
    pub states: Array2<f64>,
    pub targets: Array2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BatchLosses {
    pub critic: f64,
    pub actor: f64,
    /// Explanation loss when targets were supplied.
    pub explain: Option<f64>,
}

const CHECKPOINT_FORMAT: &str = "vxslice-agent";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    format: String,
    pub variant: Variant,
    pub actor: AttentionActor,
    pub critic: DenseNet,
    pub actor_target: AttentionActor,
    pub critic_target: DenseNet,
    attention_opt: OptimizerState,
    body_opt: OptimizerState,
    critic_opt: OptimizerState,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    pub lambda_explain: f64,
    pub reward_scale: f64,
}

impl Agent {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, action_dim: usize, config: &TrainConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let actor = AttentionActor::new(
            state_dim,
            action_dim,
            &config.actor_hidden,
            config.variant.attention_mode(),
            rng,
        )?;
        let mut layers = Vec::new();
        let mut width = state_dim + action_dim;
        for &h in &config.critic_hidden {
            layers.push(Layer::new(width, h, Activation::Relu, rng));
            width = h;
        }
        layers.push(Layer::uniform(width, 1, Activation::Identity, 3e-3, rng));
        let critic = DenseNet::from_layers(layers)?;
        Ok(Self {
            format: CHECKPOINT_FORMAT.to_string(),
            variant: config.variant,
            attention_opt: OptimizerState::new(&actor.attention, AdamConfig::with_lr(config.attention_lr)),
            body_opt: OptimizerState::new(&actor.body, AdamConfig::with_lr(config.actor_lr)),
            critic_opt: OptimizerState::new(&critic, AdamConfig::with_lr(config.critic_lr)),
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            gamma: config.gamma,
            tau: config.tau,
            batch_size: config.batch_size,
            lambda_explain: config.effective_lambda(),
            reward_scale: config.reward_scale,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.actor.state_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.actor.action_dim()
    }

    /// Policy output plus Gaussian noise, clipped to `[0, 1]`.
    pub fn act_flat<R: Rng + ?Sized>(&self, state: &[f64], noise_sigma: f64, rng: &mut R) -> Result<Vec<f64>> {
        let mut a = self.actor.predict(state)?;
        if noise_sigma > 0.0 {
            for v in &mut a {
                let z: f64 = rng.sample(StandardNormal);
                *v += noise_sigma * z;
            }
        }
        a.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        Ok(a)
    }

    pub fn act<R: Rng + ?Sized>(
        &self,
        state: &[f64],
        noise_sigma: f64,
        num_vehicles: usize,
        num_gnbs: usize,
        rng: &mut R,
    ) -> Result<RelaxedAction> {
        RelaxedAction::from_flat(&self.act_flat(state, noise_sigma, rng)?, num_vehicles, num_gnbs)
    }

    fn critic_input(states: &Array2<f64>, actions: &Array2<f64>) -> Array2<f64> {
        concatenate![Axis(1), *states, *actions]
    }

    /// Critic loss (mean squared TD error) on a batch without updating anything.
    pub fn critic_loss(&self, batch: &Batch) -> Result<f64> {
        let targets = self.td_targets(batch)?;
        let q = self.critic.predict_batch(&Self::critic_input(&batch.states, &batch.actions))?;
        let k = batch.rewards.len() as f64;
        Ok(q.column(0).iter().zip(&targets).map(|(q, y)| (q - y).powi(2)).sum::<f64>() / k)
    }

    fn td_targets(&self, batch: &Batch) -> Result<Vec<f64>> {
        let next_actions = self.actor_target.predict_batch(&batch.next_states)?;
        let next_q = self
            .critic_target
            .predict_batch(&Self::critic_input(&batch.next_states, &next_actions))?;
        Ok(batch
            .rewards
            .iter()
            .zip(next_q.column(0))
            .map(|(r, q)| r * self.reward_scale + self.gamma * q)
            .collect())
    }

    fn update_critic(&mut self, batch: &Batch) -> Result<f64> {
        let targets = self.td_targets(batch)?;
        let input = Self::critic_input(&batch.states, &batch.actions);
        let cache = self.critic.forward_batch(&input)?;
        let q = cache.output();
        let k = batch.rewards.len() as f64;
        let mut dq = Array2::zeros((q.nrows(), 1));
        let mut loss = 0.0;
        for (row, y) in targets.iter().enumerate() {
            let err = q[[row, 0]] - y;
            loss += err * err;
            dq[[row, 0]] = 2.0 * err / k;
        }
        let (grads, _) = self.critic.backward(&cache, &dq)?;
        self.critic_opt.adam_step(&mut self.critic, &grads)?;
        Ok(loss / k)
    }

    /// Actor objective `-mean Q(s, actor(s)) + λ L_explain` and its gradient.
    /// Returns `(ddpg_loss, explain_loss, gradients)`.
    pub fn actor_gradients(
        &self,
        states: &Array2<f64>,
        explain: Option<&ExplainTargets>,
        lambda: f64,
    ) -> Result<(f64, Option<f64>, ActorGradients)> {
        let cache = self.actor.forward_batch(states)?;
        let input = Self::critic_input(states, cache.actions());
        let critic_cache = self.critic.forward_batch(&input)?;
        let k = states.nrows() as f64;
        let actor_loss = -critic_cache.output().sum() / k;
        let dq = Array2::from_elem((states.nrows(), 1), -1.0 / k);
        let (_, d_input) = self.critic.backward(&critic_cache, &dq)?;
        let d_actions = d_input.slice(s![.., self.state_dim()..]).to_owned();
        let mut grads = self.actor.backward(&cache, &d_actions)?;
        let mut explain_loss = None;
        if let Some(targets) = explain {
            let (loss, g) = self.actor.explanation_loss(&targets.states, &targets.targets)?;
            explain_loss = Some(loss);
            if lambda > 0.0 && self.actor.mode == AttentionMode::Learned {
                grads.add_scaled(&g, lambda);
            }
        }
        Ok((actor_loss, explain_loss, grads))
    }

    fn apply_actor_gradients(&mut self, grads: &ActorGradients) -> Result<()> {
        if let Some(g) = &grads.attention {
            self.attention_opt.adam_step(&mut self.actor.attention, g)?;
        }
        self.body_opt.adam_step(&mut self.actor.body, &grads.body)
    }

    /// One DDPG update on a sampled mini-batch: critic TD step, actor step
    /// (including the explanation term when targets are given), then soft
    /// target updates.
    pub fn train_batch<R: Rng + ?Sized>(
        &mut self,
        buffer: &ReplayBuffer,
        rng: &mut R,
        explain: Option<&ExplainTargets>,
    ) -> Result<BatchLosses> {
        if buffer.len() < self.batch_size {
            return Err(Error::InsufficientBuffer {
                have: buffer.len(),
                need: self.batch_size,
            });
        }
        let batch = buffer.sample(self.batch_size, rng)?;
        self.train_on(&batch, explain)
    }

    pub fn train_on(&mut self, batch: &Batch, explain: Option<&ExplainTargets>) -> Result<BatchLosses> {
        let critic = self.update_critic(batch)?;
        let (actor, explain_loss, grads) = self.actor_gradients(&batch.states, explain, self.lambda_explain)?;
        self.apply_actor_gradients(&grads)?;
        self.actor_target.attention.soft_update(&self.actor.attention, self.tau)?;
        self.actor_target.body.soft_update(&self.actor.body, self.tau)?;
        self.critic_target.soft_update(&self.critic, self.tau)?;
        Ok(BatchLosses {
            critic,
            actor,
            explain: explain_loss,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let agent: Agent = serde_json::from_str(text)?;
        if agent.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!("unexpected format tag {:?}", agent.format)));
        }
        if agent.critic.input_dim() != agent.state_dim() + agent.action_dim() {
            return Err(Error::Checkpoint("critic input does not match actor dimensions".into()));
        }
        Ok(agent)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::replay::Transition;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_config(variant: Variant) -> TrainConfig {
        TrainConfig {
            variant,
            batch_size: 8,
            actor_hidden: vec![16, 8],
            critic_hidden: vec![16, 8],
            ..Default::default()
        }
    }

    fn filled_buffer(reward: f64, n: usize) -> ReplayBuffer {
        let mut b = ReplayBuffer::new(100);
        for _ in 0..n {
            b.push(Transition {
                state: vec![0.5; 6],
                action: vec![0.5; 4],
                reward,
                next_state: vec![0.5; 6],
            });
        }
        b
    }

    #[test]
    fn noise_free_action_is_policy_output_and_noisy_is_clipped() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let agent = Agent::new(6, 4, &small_config(Variant::AttentionSverl), &mut rng).unwrap();
        let s = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        assert_eq!(agent.act_flat(&s, 0.0, &mut rng).unwrap(), agent.actor.predict(&s).unwrap());
        for _ in 0..100 {
            let a = agent.act_flat(&s, 10.0, &mut rng).unwrap();
            assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn critic_loss_small_for_zero_reward_at_init() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let agent = Agent::new(6, 4, &small_config(Variant::Ddpg), &mut rng).unwrap();
        let buffer = filled_buffer(0.0, 20);
        let batch = buffer.sample(8, &mut rng).unwrap();
        // Q ≈ 0 from the small output layer, targets ≈ γ Q' ≈ 0.
        assert!(agent.critic_loss(&batch).unwrap() < 1e-3);
    }

    #[test]
    fn critic_step_reduces_loss_on_constant_batch() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut agent = Agent::new(6, 4, &small_config(Variant::Attention), &mut rng).unwrap();
        let buffer = filled_buffer(-5.0, 20);
        let batch = buffer.sample(8, &mut rng).unwrap();
        let before = agent.critic_loss(&batch).unwrap();
        agent.train_on(&batch, None).unwrap();
        let after = agent.critic_loss(&batch).unwrap();
        assert!(after < before, "{after} !< {before}");
    }

    #[test]
    fn actor_parameters_move() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut agent = Agent::new(6, 4, &small_config(Variant::Attention), &mut rng).unwrap();
        let buffer = filled_buffer(-1.0, 20);
        let before = agent.actor.clone();
        agent.train_batch(&buffer, &mut rng, None).unwrap();
        assert_ne!(agent.actor.body.flat_params(), before.body.flat_params());
        assert_ne!(agent.actor.attention.flat_params(), before.attention.flat_params());
    }

    #[test]
    fn insufficient_buffer() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut agent = Agent::new(6, 4, &small_config(Variant::Ddpg), &mut rng).unwrap();
        let buffer = filled_buffer(0.0, 3);
        assert!(matches!(
            agent.train_batch(&buffer, &mut rng, None),
            Err(Error::InsufficientBuffer { have: 3, need: 8 })
        ));
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut agent = Agent::new(6, 4, &small_config(Variant::AttentionSverl), &mut rng).unwrap();
        agent.train_batch(&filled_buffer(-1.0, 20), &mut rng, None).unwrap();
        let json = agent.to_json().unwrap();
        let back = Agent::from_json(&json).unwrap();
        assert_eq!(back, agent);
        assert_eq!(back.to_json().unwrap(), json);
    }
}
