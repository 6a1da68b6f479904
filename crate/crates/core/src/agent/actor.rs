//! Actor with a feature-attention front end.
//!
//! The attention layer produces `alpha = softmax(W s + b)` and reweights the
//! state as `alpha ⊙ s`. The body sees `d · (alpha ⊙ s)`: the constant factor
//! makes uniform attention the identity, so the body's inputs keep the scale
//! of the observation instead of shrinking by `1/d`. A sigmoid head emits the
//! relaxed action. With [`AttentionMode::Uniform`] the layer is bypassed and
//! `alpha` is fixed at `1/d`, which is exactly a plain DDPG actor.

use ndarray::{Array2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::explain::normalize::NORMALIZE_EPS;
use crate::nn::{Activation, DenseNet, ForwardCache, Gradients, Layer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttentionMode {
    Learned,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttentionActor {
    pub mode: AttentionMode,
    /// Single `d -> d` softmax layer holding `W` and `b`.
    pub attention: DenseNet,
    pub body: DenseNet,
}

/// Everything [`AttentionActor::backward`] needs from a forward pass.
#[derive(Debug, Clone)]
pub struct ActorCache {
    states: Array2<f64>,
    alpha: Array2<f64>,
    attention: Option<ForwardCache>,
    body: ForwardCache,
}

impl ActorCache {
    pub fn actions(&self) -> &Array2<f64> {
        self.body.output()
    }

    pub fn alpha(&self) -> &Array2<f64> {
        &self.alpha
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorGradients {
    /// `None` when the attention layer is frozen.
    pub attention: Option<Gradients>,
    pub body: Gradients,
}

impl ActorGradients {
    pub fn zeros_like(actor: &AttentionActor) -> Self {
        Self {
            attention: match actor.mode {
                AttentionMode::Learned => Some(Gradients::zeros_like(&actor.attention)),
                AttentionMode::Uniform => None,
            },
            body: Gradients::zeros_like(&actor.body),
        }
    }

    pub fn add_scaled(&mut self, other: &ActorGradients, factor: f64) {
        if let (Some(a), Some(b)) = (self.attention.as_mut(), other.attention.as_ref()) {
            a.add_scaled(b, factor);
        }
        self.body.add_scaled(&other.body, factor);
    }
}

impl AttentionActor {
    /// Builds the actor with hidden ReLU layers of the given widths and a
    /// sigmoid head. The head starts near zero so early actions sit around 0.5.
    pub fn new<R: Rng + ?Sized>(
        state_dim: usize,
        action_dim: usize,
        hidden: &[usize],
        mode: AttentionMode,
        rng: &mut R,
    ) -> Result<Self> {
        let attention = DenseNet::from_layers(vec![Layer::new(state_dim, state_dim, Activation::Softmax, rng)])?;
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut width = state_dim;
        for &h in hidden {
            layers.push(Layer::new(width, h, Activation::Relu, rng));
            width = h;
        }
        layers.push(Layer::uniform(width, action_dim, Activation::Sigmoid, 3e-3, rng));
        Ok(Self {
            mode,
            attention,
            body: DenseNet::from_layers(layers)?,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.attention.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.body.output_dim()
    }

    fn check_states(&self, states: &Array2<f64>) -> Result<()> {
        if states.ncols() != self.state_dim() {
            return Err(Error::DimensionMismatch {
                context: "actor state",
                expected: self.state_dim(),
                actual: states.ncols(),
            });
        }
        Ok(())
    }

    fn body_input(&self, alpha: &Array2<f64>, states: &Array2<f64>) -> Array2<f64> {
        alpha * states * self.state_dim() as f64
    }

    /// Attention weights for a batch of states, one row per state.
    pub fn attention_batch(&self, states: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_states(states)?;
        match self.mode {
            AttentionMode::Learned => self.attention.predict_batch(states),
            AttentionMode::Uniform => {
                let d = self.state_dim();
                Ok(Array2::from_elem((states.nrows(), d), 1.0 / d as f64))
            }
        }
    }

    /// `(alpha, alpha ⊙ s)` for a single state.
    pub fn attention_forward(&self, state: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let s = Array2::from_shape_vec((1, state.len()), state.to_vec()).expect("row vector");
        let alpha = self.attention_batch(&s)?.row(0).to_vec();
        let weighted = alpha.iter().zip(state).map(|(a, x)| a * x).collect();
        Ok((alpha, weighted))
    }

    pub fn forward_batch(&self, states: &Array2<f64>) -> Result<ActorCache> {
        self.check_states(states)?;
        let (alpha, attention) = match self.mode {
            AttentionMode::Learned => {
                let cache = self.attention.forward_batch(states)?;
                (cache.output().clone(), Some(cache))
            }
            AttentionMode::Uniform => (self.attention_batch(states)?, None),
        };
        let body = self.body.forward_batch(&self.body_input(&alpha, states))?;
        Ok(ActorCache {
            states: states.clone(),
            alpha,
            attention,
            body,
        })
    }

    pub fn predict_batch(&self, states: &Array2<f64>) -> Result<Array2<f64>> {
        let alpha = self.attention_batch(states)?;
        self.body.predict_batch(&self.body_input(&alpha, states))
    }

    pub fn predict(&self, state: &[f64]) -> Result<Vec<f64>> {
        let s = Array2::from_shape_vec((1, state.len()), state.to_vec()).expect("row vector");
        Ok(self.predict_batch(&s)?.row(0).to_vec())
    }

    /// Gradients of a loss given its gradient w.r.t. the emitted actions.
    pub fn backward(&self, cache: &ActorCache, action_grad: &Array2<f64>) -> Result<ActorGradients> {
        let (body, d_input) = self.body.backward(&cache.body, action_grad)?;
        let attention = match (&self.mode, &cache.attention) {
            (AttentionMode::Learned, Some(att_cache)) => {
                let d_alpha = &d_input * &cache.states * self.state_dim() as f64;
                Some(self.attention.backward(att_cache, &d_alpha)?.0)
            }
            (AttentionMode::Uniform, _) => None,
            (AttentionMode::Learned, None) => {
                return Err(Error::ArchitectureMismatch("cache lacks attention activations".into()))
            }
        };
        Ok(ActorGradients { attention, body })
    }

    /// Explanation loss `mean_states (1/d) Σ (α̂ - ψ̂)^2` against fixed
    /// normalized targets (one row per state), plus its gradient w.r.t. the
    /// attention parameters. The body receives no gradient from this loss.
    pub fn explanation_loss(&self, states: &Array2<f64>, targets: &Array2<f64>) -> Result<(f64, ActorGradients)> {
        self.check_states(states)?;
        if targets.dim() != states.dim() {
            return Err(Error::DimensionMismatch {
                context: "explanation targets",
                expected: states.len(),
                actual: targets.len(),
            });
        }
        let mut grads = ActorGradients::zeros_like(self);
        let n = states.nrows() as f64;
        let d = states.ncols() as f64;
        let (alpha, cache) = match self.mode {
            AttentionMode::Learned => {
                let cache = self.attention.forward_batch(states)?;
                (cache.output().clone(), Some(cache))
            }
            AttentionMode::Uniform => (self.attention_batch(states)?, None),
        };
        let mut loss = 0.0;
        let mut d_alpha = Array2::zeros(alpha.raw_dim());
        for ((a, t), mut out) in alpha
            .axis_iter(Axis(0))
            .zip(targets.axis_iter(Axis(0)))
            .zip(d_alpha.axis_iter_mut(Axis(0)))
        {
            let sum = a.iter().map(|v| v.abs()).sum::<f64>() + NORMALIZE_EPS;
            let a_hat = a.mapv(|v| v.abs() / sum);
            let diff = &a_hat - &t;
            loss += diff.mapv(|v| v * v).sum() / d;
            // dL/dα̂ then through α̂ = α / (Σα + ε) (α > 0 under softmax).
            let g = diff.mapv(|v| 2.0 * v / (d * n));
            let gdot = g.dot(&a) / (sum * sum);
            Zip::from(&mut out).and(&g).for_each(|o, &gi| *o = gi / sum - gdot);
        }
        loss /= n;
        if let Some(cache) = cache {
            grads.attention = Some(self.attention.backward(&cache, &d_alpha)?.0);
        }
        Ok((loss, grads))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn actor(mode: AttentionMode) -> AttentionActor {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        AttentionActor::new(6, 4, &[8, 5], mode, &mut rng).unwrap()
    }

    #[test]
    fn zero_attention_params_give_uniform_alpha() {
        let mut a = actor(AttentionMode::Learned);
        let zeros = vec![0.0; a.attention.param_count()];
        a.attention.set_flat_params(&zeros).unwrap();
        let (alpha, _) = a.attention_forward(&[0.1, 0.9, 0.3, 0.4, 0.5, 0.2]).unwrap();
        for v in alpha {
            assert!((v - 1.0 / 6.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_state_weights_to_zero() {
        let a = actor(AttentionMode::Learned);
        let (alpha, weighted) = a.attention_forward(&[0.0; 6]).unwrap();
        assert!(weighted.iter().all(|&v| v == 0.0));
        assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn uniform_mode_has_no_attention_gradient() {
        let a = actor(AttentionMode::Uniform);
        let s = Array2::from_elem((3, 6), 0.5);
        let cache = a.forward_batch(&s).unwrap();
        let g = a.backward(&cache, &Array2::ones((3, 4))).unwrap();
        assert!(g.attention.is_none());
        assert!(cache.alpha().iter().all(|&v| (v - 1.0 / 6.0).abs() < 1e-15));
    }

    #[test]
    fn explanation_loss_two_feature_example() {
        // α̂ = (1, 0) vs ψ̂ = (0, 1): (1/2)(1 + 1) = 1, approached as α saturates.
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut a = AttentionActor::new(2, 1, &[3], AttentionMode::Learned, &mut rng).unwrap();
        a.attention
            .set_flat_params(&[0.0, 0.0, 0.0, 0.0, 60.0, -60.0])
            .unwrap();
        let s = ndarray::array![[0.3, 0.7]];
        let (loss, _) = a.explanation_loss(&s, &ndarray::array![[0.0, 1.0]]).unwrap();
        assert!((loss - 1.0).abs() < 1e-9, "{loss}");
        let alpha = a.attention_batch(&s).unwrap();
        let (loss, _) = a.explanation_loss(&s, &alpha).unwrap();
        assert!(loss < 1e-20);
    }

    #[test]
    fn dimension_mismatch() {
        let a = actor(AttentionMode::Learned);
        assert!(a.predict(&[0.0; 5]).is_err());
    }
}
