//! Small dense-network engine: batched forward/backward, Adam, soft target
//! updates and a JSON checkpoint format.

mod adam;
mod checkpoint;
pub mod gradcheck;

pub use adam::{AdamConfig, OptimizerState};
pub use checkpoint::{LayerDocument, NetDocument};

use ndarray::{Array1, Array2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
    Sigmoid,
    /// Row-wise softmax over the layer outputs.
    Softmax,
}

impl Activation {
    fn apply(self, z: &mut Array2<f64>) {
        match self {
            Activation::Identity => {}
            Activation::Relu => z.mapv_inplace(|v| v.max(0.0)),
            Activation::Sigmoid => z.mapv_inplace(sigmoid),
            Activation::Softmax => {
                for mut row in z.rows_mut() {
                    let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    row.mapv_inplace(|v| (v - max).exp());
                    let sum = row.sum();
                    row.mapv_inplace(|v| v / sum);
                }
            }
        }
    }

    /// Gradient w.r.t. the pre-activation given the activation output `y`
    /// and the gradient `dy` w.r.t. that output.
    fn backprop(self, y: &Array2<f64>, dy: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Identity => dy.clone(),
            Activation::Relu => {
                let mut dz = dy.clone();
                Zip::from(&mut dz).and(y).for_each(|d, &o| {
                    if o <= 0.0 {
                        *d = 0.0;
                    }
                });
                dz
            }
            Activation::Sigmoid => {
                let mut dz = dy.clone();
                Zip::from(&mut dz).and(y).for_each(|d, &o| *d *= o * (1.0 - o));
                dz
            }
            Activation::Softmax => {
                let mut dz = Array2::zeros(y.raw_dim());
                for ((mut out, yr), dr) in dz.rows_mut().into_iter().zip(y.rows()).zip(dy.rows()) {
                    let dot = yr.dot(&dr);
                    Zip::from(&mut out)
                        .and(&yr)
                        .and(&dr)
                        .for_each(|o, &yv, &dv| *o = yv * (dv - dot));
                }
                dz
            }
        }
    }
}

pub fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

/// Numerically stable softmax of a single vector.
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Fully connected layer `y = act(x W^T + b)` with `W` stored as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Layer {
    /// Uniform fan-in initialization in `±1/sqrt(inputs)`.
    pub fn new<R: Rng + ?Sized>(inputs: usize, outputs: usize, activation: Activation, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs as f64).sqrt();
        Self::uniform(inputs, outputs, activation, bound, rng)
    }

    pub fn uniform<R: Rng + ?Sized>(
        inputs: usize,
        outputs: usize,
        activation: Activation,
        bound: f64,
        rng: &mut R,
    ) -> Self {
        let weights = Array2::from_shape_fn((outputs, inputs), |_| rng.gen_range(-bound..=bound));
        let bias = Array1::from_shape_fn(outputs, |_| rng.gen_range(-bound..=bound));
        Self {
            weights,
            bias,
            activation,
        }
    }

    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self {
            weights: Array2::zeros((outputs, inputs)),
            bias: Array1::zeros(outputs),
            activation,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weights.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weights.nrows()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNet {
    layers: Vec<Layer>,
}

/// Per-layer inputs and outputs recorded by a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    inputs: Vec<Array2<f64>>,
    outputs: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.outputs.last().expect("non-empty network")
    }

    pub fn batch_size(&self) -> usize {
        self.inputs[0].nrows()
    }
}

/// Parameter gradients with the same layout as the network.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNet) -> Self {
        Self {
            weights: net.layers.iter().map(|l| Array2::zeros(l.weights.raw_dim())).collect(),
            biases: net.layers.iter().map(|l| Array1::zeros(l.bias.raw_dim())).collect(),
        }
    }

    pub fn scale(&mut self, factor: f64) {
        self.weights.iter_mut().for_each(|w| *w *= factor);
        self.biases.iter_mut().for_each(|b| *b *= factor);
    }

    /// `self += factor * other`.
    pub fn add_scaled(&mut self, other: &Gradients, factor: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.scaled_add(factor, b);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.scaled_add(factor, b);
        }
    }

    /// Flattened in the same order as [`DenseNet::flat_params`].
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }

    pub fn l2_norm(&self) -> f64 {
        self.flat().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl DenseNet {
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ArchitectureMismatch("network needs at least one layer".into()));
        }
        for (k, pair) in layers.windows(2).enumerate() {
            if pair[0].outputs() != pair[1].inputs() {
                return Err(Error::ArchitectureMismatch(format!(
                    "layer {k} emits {} values but layer {} expects {}",
                    pair[0].outputs(),
                    k + 1,
                    pair[1].inputs()
                )));
            }
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.outputs() {
                return Err(Error::ArchitectureMismatch(format!(
                    "layer {k} bias has {} entries for {} outputs",
                    l.bias.len(),
                    l.outputs()
                )));
            }
            if l.weights.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::ArchitectureMismatch(format!("layer {k} has non-finite parameters")));
            }
        }
        Ok(Self { layers })
    }

    /// Stack of fan-in initialized layers; `sizes` has one more entry than `activations`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], activations: &[Activation], rng: &mut R) -> Result<Self> {
        if sizes.len() != activations.len() + 1 {
            return Err(Error::ArchitectureMismatch(format!(
                "{} sizes need {} activations, got {}",
                sizes.len(),
                sizes.len().saturating_sub(1),
                activations.len()
            )));
        }
        let layers = sizes
            .windows(2)
            .zip(activations)
            .map(|(w, &act)| Layer::new(w[0], w[1], act, rng))
            .collect();
        Self::from_layers(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").outputs()
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// Shapes and activations, used to compare architectures.
    pub fn signature(&self) -> Vec<(usize, usize, Activation)> {
        self.layers
            .iter()
            .map(|l| (l.inputs(), l.outputs(), l.activation))
            .collect()
    }

    fn check_input(&self, cols: usize) -> Result<()> {
        if cols != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                actual: cols,
            });
        }
        Ok(())
    }

    /// Forward pass over a batch (one sample per row), keeping what backward needs.
    pub fn forward_batch(&self, input: &Array2<f64>) -> Result<ForwardCache> {
        self.check_input(input.ncols())?;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut outputs = Vec::with_capacity(self.layers.len());
        let mut x = input.clone();
        for layer in &self.layers {
            let mut z = x.dot(&layer.weights.t());
            z += &layer.bias;
            layer.activation.apply(&mut z);
            inputs.push(x);
            x = z.clone();
            outputs.push(z);
        }
        Ok(ForwardCache { inputs, outputs })
    }

    /// Forward pass without a cache.
    pub fn predict_batch(&self, input: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(input.ncols())?;
        let mut x = input.dot(&self.layers[0].weights.t());
        x += &self.layers[0].bias;
        self.layers[0].activation.apply(&mut x);
        for layer in &self.layers[1..] {
            let mut z = x.dot(&layer.weights.t());
            z += &layer.bias;
            layer.activation.apply(&mut z);
            x = z;
        }
        Ok(x)
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        let x = Array2::from_shape_vec((1, input.len()), input.to_vec()).expect("row vector");
        let cache = self.forward_batch(&x)?;
        Ok((cache.output().row(0).to_vec(), cache))
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        let x = Array2::from_shape_vec((1, input.len()), input.to_vec()).expect("row vector");
        Ok(self.predict_batch(&x)?.row(0).to_vec())
    }

    /// Backpropagates `output_grad` (batch x outputs). Parameter gradients
    /// are summed over the batch. Also returns the gradient w.r.t. the input.
    pub fn backward(&self, cache: &ForwardCache, output_grad: &Array2<f64>) -> Result<(Gradients, Array2<f64>)> {
        if cache.outputs.len() != self.layers.len() {
            return Err(Error::ArchitectureMismatch("cache was produced by a different network".into()));
        }
        let out = cache.output();
        if output_grad.dim() != out.dim() {
            return Err(Error::DimensionMismatch {
                context: "output gradient",
                expected: out.len(),
                actual: output_grad.len(),
            });
        }
        let mut grads = Gradients::zeros_like(self);
        let mut dy = output_grad.clone();
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let dz = layer.activation.backprop(&cache.outputs[k], &dy);
            grads.weights[k] = dz.t().dot(&cache.inputs[k]);
            grads.biases[k] = dz.sum_axis(Axis(0));
            dy = dz.dot(&layer.weights);
        }
        Ok((grads, dy))
    }

    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.weights.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::DimensionMismatch {
                context: "flat parameters",
                expected: self.param_count(),
                actual: flat.len(),
            });
        }
        let mut it = flat.iter().copied();
        for l in &mut self.layers {
            l.weights.iter_mut().for_each(|w| *w = it.next().expect("length checked"));
            l.bias.iter_mut().for_each(|b| *b = it.next().expect("length checked"));
        }
        Ok(())
    }

    pub fn same_architecture(&self, other: &DenseNet) -> bool {
        self.signature() == other.signature()
    }

    /// `self <- tau * source + (1 - tau) * self`, elementwise.
    pub fn soft_update(&mut self, source: &DenseNet, tau: f64) -> Result<()> {
        if !self.same_architecture(source) {
            return Err(Error::ArchitectureMismatch("soft update between different architectures".into()));
        }
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidArgument(format!("tau must lie in [0, 1], got {tau}")));
        }
        for (t, s) in self.layers.iter_mut().zip(&source.layers) {
            Zip::from(&mut t.weights)
                .and(&s.weights)
                .for_each(|a, &b| *a = tau * b + (1.0 - tau) * *a);
            Zip::from(&mut t.bias)
                .and(&s.bias)
                .for_each(|a, &b| *a = tau * b + (1.0 - tau) * *a);
        }
        Ok(())
    }
}

/// Free-function form of [`DenseNet::soft_update`].
pub fn soft_update(target: &mut DenseNet, source: &DenseNet, tau: f64) -> Result<()> {
    target.soft_update(source, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn identity_layer_passes_input() {
        let mut layer = Layer::zeros(3, 3, Activation::Identity);
        layer.weights = Array2::eye(3);
        let net = DenseNet::from_layers(vec![layer]).unwrap();
        let (y, _) = net.forward(&[1.0, -2.0, 3.5]).unwrap();
        assert_eq!(y, vec![1.0, -2.0, 3.5]);
    }

    #[test]
    fn softmax_head_is_a_distribution() {
        let mut r = rng();
        let net = DenseNet::new(&[4, 8, 5], &[Activation::Relu, Activation::Softmax], &mut r).unwrap();
        let y = net.predict(&[0.3, -1.0, 2.0, 0.1]).unwrap();
        assert!(y.iter().all(|&v| v > 0.0));
        assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn softmax_is_stable_for_large_inputs() {
        let p = softmax(&[1000.0, 1000.0, -1000.0]);
        assert!((p[0] - 0.5).abs() < 1e-12 && p[2] >= 0.0);
    }

    #[test]
    fn pinned_forward_fixture() {
        let layers = vec![
            Layer {
                weights: array![[0.5, -0.25], [1.0, 0.75], [-0.5, 0.1]],
                bias: array![0.1, -0.2, 0.05],
                activation: Activation::Relu,
            },
            Layer {
                weights: array![[0.3, -0.6, 0.9]],
                bias: array![0.02],
                activation: Activation::Sigmoid,
            },
        ];
        let net = DenseNet::from_layers(layers).unwrap();
        let y = net.predict(&[0.8, -0.4]).unwrap();
        // hidden = relu([0.6, 0.3, -0.39]) = [0.6, 0.3, 0]; z = 0.18 - 0.18 + 0.02
        assert!((y[0] - sigmoid(0.02)).abs() < 1e-15);
    }

    #[test]
    fn linear_gradient_is_outer_product() {
        let mut r = rng();
        let net = DenseNet::new(&[3, 2], &[Activation::Identity], &mut r).unwrap();
        let x = [0.5, -1.0, 2.0];
        let (_, cache) = net.forward(&x).unwrap();
        let (g, dx) = net.backward(&cache, &array![[1.0, 1.0]]).unwrap();
        for o in 0..2 {
            for i in 0..3 {
                assert_eq!(g.weights[0][[o, i]], x[i]);
            }
            assert_eq!(g.biases[0][o], 1.0);
        }
        let w = &net.layers()[0].weights;
        for i in 0..3 {
            assert!((dx[[0, i]] - (w[[0, i]] + w[[1, i]])).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_output_gradient_gives_zero_gradients() {
        let mut r = rng();
        let net = DenseNet::new(&[3, 4, 2], &[Activation::Relu, Activation::Sigmoid], &mut r).unwrap();
        let (_, cache) = net.forward(&[0.1, 0.2, 0.3]).unwrap();
        let (g, dx) = net.backward(&cache, &Array2::zeros((1, 2))).unwrap();
        assert!(g.flat().iter().all(|&v| v == 0.0));
        assert!(dx.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut r = rng();
        let net = DenseNet::new(&[3, 2], &[Activation::Identity], &mut r).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::DimensionMismatch { .. })));
        assert!(DenseNet::new(&[3, 2], &[], &mut r).is_err());
    }

    #[test]
    fn soft_update_extremes() {
        let mut r = rng();
        let src = DenseNet::new(&[2, 3], &[Activation::Relu], &mut r).unwrap();
        let orig = DenseNet::new(&[2, 3], &[Activation::Relu], &mut r).unwrap();
        let mut t = orig.clone();
        t.soft_update(&src, 0.0).unwrap();
        assert_eq!(t, orig);
        t.soft_update(&src, 1.0).unwrap();
        assert_eq!(t, src);

        let mut scalar_t = DenseNet::from_layers(vec![Layer::zeros(1, 1, Activation::Identity)]).unwrap();
        let mut scalar_s = scalar_t.clone();
        scalar_s.set_flat_params(&[1.0, 1.0]).unwrap();
        soft_update(&mut scalar_t, &scalar_s, 0.005).unwrap();
        assert_eq!(scalar_t.flat_params(), vec![0.005, 0.005]);

        let other = DenseNet::new(&[2, 4], &[Activation::Relu], &mut r).unwrap();
        assert!(t.soft_update(&other, 0.5).is_err());
    }
}
