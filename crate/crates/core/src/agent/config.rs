use serde::{Deserialize, Serialize};

use super::actor::AttentionMode;
use crate::error::{Error, Result};

/// Which of the three learned methods to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Plain DDPG: attention frozen at uniform weights.
    Ddpg,
    /// Learned attention, no Shapley supervision.
    Attention,
    /// Learned attention supervised by Monte-Carlo Shapley targets.
    AttentionSverl,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::Ddpg, Variant::Attention, Variant::AttentionSverl];

    pub fn attention_mode(self) -> AttentionMode {
        match self {
            Variant::Ddpg => AttentionMode::Uniform,
            Variant::Attention | Variant::AttentionSverl => AttentionMode::Learned,
        }
    }

    pub fn uses_shapley(self) -> bool {
        self == Variant::AttentionSverl
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Ddpg => "ddpg",
            Variant::Attention => "attention",
            Variant::AttentionSverl => "attention-sverl",
        }
    }

    pub fn parse(s: &str) -> Option<Variant> {
        Variant::ALL.into_iter().find(|v| v.name() == s)
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub variant: Variant,
    pub episodes: usize,
    pub steps_per_episode: usize,
    pub gamma: f64,
    pub batch_size: usize,
    pub tau: f64,
    pub buffer_capacity: usize,
    pub noise_sigma: f64,
    pub noise_min: f64,
    pub noise_decay: f64,
    /// Weight of the explanation loss in the actor objective.
    pub lambda_explain: f64,
    /// Shapley supervision runs in every episode whose index is a multiple of this.
    pub eval_interval: usize,
    /// Permutations drawn per Shapley estimate; each yields one marginal per feature.
    pub shapley_samples: usize,
    pub rollout_horizon: usize,
    pub rollouts_per_coalition: usize,
    /// States sampled per supervision pass.
    pub supervision_states: usize,
    pub actor_lr: f64,
    pub attention_lr: f64,
    pub critic_lr: f64,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    /// Rewards are multiplied by this before entering the TD target.
    pub reward_scale: f64,
    /// Gradient updates per environment step once the buffer holds a batch.
    pub updates_per_step: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            variant: Variant::AttentionSverl,
            episodes: 300,
            steps_per_episode: 100,
            gamma: 0.99,
            batch_size: 64,
            tau: 0.005,
            buffer_capacity: 100_000,
            noise_sigma: 0.2,
            noise_min: 0.01,
            noise_decay: 0.995,
            lambda_explain: 0.1,
            eval_interval: 10,
            shapley_samples: 32,
            rollout_horizon: 10,
            rollouts_per_coalition: 3,
            supervision_states: 4,
            actor_lr: 1e-4,
            attention_lr: 1e-4,
            critic_lr: 1e-3,
            actor_hidden: vec![256, 128],
            critic_hidden: vec![256, 128],
            reward_scale: 0.1,
            updates_per_step: 1,
        }
    }
}

impl TrainConfig {
    /// Exploration noise for episode `e` (0-based): `max(σ_min, σ0 · decay^e)`.
    pub fn noise_for_episode(&self, episode: usize) -> f64 {
        (self.noise_sigma * self.noise_decay.powi(episode as i32)).max(self.noise_min)
    }

    /// Explanation weight actually applied for the configured variant.
    pub fn effective_lambda(&self) -> f64 {
        if self.variant.uses_shapley() {
            self.lambda_explain
        } else {
            0.0
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: &str| Err(Error::config(field, reason));
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma", "must lie in (0, 1)");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be ≥ 1");
        }
        if self.batch_size > self.buffer_capacity {
            return bad("batch_size", "must not exceed buffer_capacity");
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return bad("tau", "must lie in [0, 1]");
        }
        if !(self.lambda_explain >= 0.0 && self.lambda_explain.is_finite()) {
            return bad("lambda_explain", "must be finite and ≥ 0");
        }
        if self.noise_sigma < 0.0 || self.noise_min < 0.0 || !(0.0..=1.0).contains(&self.noise_decay) {
            return bad("noise_sigma", "noise parameters must be non-negative with decay in [0, 1]");
        }
        if self.eval_interval == 0 {
            return bad("eval_interval", "must be ≥ 1");
        }
        if self.shapley_samples == 0 {
            return bad("shapley_samples", "must be ≥ 1");
        }
        if self.rollouts_per_coalition == 0 {
            return bad("rollouts_per_coalition", "must be ≥ 1");
        }
        if self.steps_per_episode == 0 {
            return bad("steps_per_episode", "must be ≥ 1");
        }
        for (field, lr) in [
            ("actor_lr", self.actor_lr),
            ("attention_lr", self.attention_lr),
            ("critic_lr", self.critic_lr),
        ] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::config(field, "must be finite and > 0"));
            }
        }
        if !(self.reward_scale > 0.0 && self.reward_scale.is_finite()) {
            return bad("reward_scale", "must be finite and > 0");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn noise_schedule() {
        let c = TrainConfig::default();
        assert_eq!(c.noise_for_episode(0), 0.2);
        assert!((c.noise_for_episode(1) - 0.199).abs() < 1e-12);
        assert_eq!(c.noise_for_episode(10_000), 0.01);
        // 0.2 * 0.995^e drops below 0.01 once e > ln(0.05)/ln(0.995) ≈ 597.6
        assert!(c.noise_for_episode(597) > 0.01);
        assert_eq!(c.noise_for_episode(598), 0.01);
    }

    #[test]
    fn variants_map_to_switches() {
        let mut c = TrainConfig::default();
        c.variant = Variant::Attention;
        assert_eq!(c.effective_lambda(), 0.0);
        c.variant = Variant::AttentionSverl;
        assert_eq!(c.effective_lambda(), 0.1);
        assert_eq!(Variant::Ddpg.attention_mode(), AttentionMode::Uniform);
        assert_eq!(Variant::parse("attention-sverl"), Some(Variant::AttentionSverl));
    }

    #[test]
    fn validation() {
        TrainConfig::default().validate().unwrap();
        let c = TrainConfig {
            gamma: 1.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        let c = TrainConfig {
            batch_size: 10,
            buffer_capacity: 5,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
