use serde::{Deserialize, Serialize};

use super::{DenseNet, Gradients};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Default::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// First and second moment estimates, flattened in parameter order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerState {
    pub config: AdamConfig,
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
}

impl OptimizerState {
    pub fn new(net: &DenseNet, config: AdamConfig) -> Self {
        let n = net.param_count();
        Self {
            config,
            step: 0,
            first_moment: vec![0.0; n],
            second_moment: vec![0.0; n],
        }
    }

    /// One bias-corrected Adam update that descends `grads`.
    pub fn adam_step(&mut self, net: &mut DenseNet, grads: &Gradients) -> Result<()> {
        let n = net.param_count();
        if self.first_moment.len() != n {
            return Err(Error::DimensionMismatch {
                context: "optimizer moments",
                expected: n,
                actual: self.first_moment.len(),
            });
        }
        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let c1 = 1.0 - beta1.powf(self.step as f64);
        let c2 = 1.0 - beta2.powf(self.step as f64);

        let mut k = 0;
        let mut update = |param: &mut f64, g: f64| {
            let m = &mut self.first_moment[k];
            let v = &mut self.second_moment[k];
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *param -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            k += 1;
        };
        for (layer, (gw, gb)) in net
            .layers_mut()
            .iter_mut()
            .zip(grads.weights.iter().zip(&grads.biases))
        {
            if layer.weights.dim() != gw.dim() || layer.bias.len() != gb.len() {
                return Err(Error::ArchitectureMismatch("gradient shapes differ from network".into()));
            }
            for (p, &g) in layer.weights.iter_mut().zip(gw.iter()) {
                update(p, g);
            }
            for (p, &g) in layer.bias.iter_mut().zip(gb.iter()) {
                update(p, g);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Activation, Layer};

    fn scalar_net(value: f64) -> DenseNet {
        let mut net = DenseNet::from_layers(vec![Layer::zeros(1, 1, Activation::Identity)]).unwrap();
        net.set_flat_params(&[value, 0.0]).unwrap();
        net
    }

    fn grads(gw: f64, gb: f64) -> Gradients {
        Gradients {
            weights: vec![ndarray::array![[gw]]],
            biases: vec![ndarray::array![gb]],
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut net = scalar_net(0.7);
        let mut opt = OptimizerState::new(&net, AdamConfig::default());
        opt.adam_step(&mut net, &grads(0.0, 0.0)).unwrap();
        assert_eq!(net.flat_params(), vec![0.7, 0.0]);
        assert_eq!(opt.step, 1);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut net = scalar_net(0.0);
        let mut opt = OptimizerState::new(&net, AdamConfig::with_lr(0.001));
        opt.adam_step(&mut net, &grads(1.0, 0.0)).unwrap();
        // m_hat = 1, v_hat = 1 -> delta = -lr / (1 + eps)
        let expected = -0.001 / (1.0 + 1e-8);
        assert!((net.flat_params()[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn identical_runs_match() {
        let run = || {
            let mut net = scalar_net(0.3);
            let mut opt = OptimizerState::new(&net, AdamConfig::default());
            for k in 0..20 {
                opt.adam_step(&mut net, &grads((k as f64).sin(), 0.5)).unwrap();
            }
            net.flat_params()
        };
        assert_eq!(run(), run());
    }
}
