//! Fully connected embedding network.
//!
//! Hidden layers apply the model's activation; the output layer is always
//! affine, so the embedding space is unconstrained.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default hidden widths of the desk-scale embedder.
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];
/// Default embedding dimension.
pub const DEFAULT_EMBEDDING_DIM: usize = 32;

/// Maps feature vectors into the embedding space.
///
/// Implemented by [`EmbedderModel`] and by [`PrecomputedEmbedder`] for
/// inputs that are already embeddings produced elsewhere.
pub trait Embedder: Send + Sync {
    fn input_dim(&self) -> usize;
    fn output_dim(&self) -> usize;
    fn embed(&self, features: &[f64]) -> Result<Vec<f64>>;
}

/// Pass-through embedder for externally produced embeddings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecomputedEmbedder {
    pub dim: usize,
}

impl Embedder for PrecomputedEmbedder {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn output_dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                actual: features.len(),
            });
        }
        Ok(features.to_vec())
    }
}

/// Hidden-layer activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Linear,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Linear => 1.0,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::Format(format!("unknown activation '{other}'"))),
        }
    }
}

/// One affine layer, weights stored row-major as `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn affine(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }

    fn parameter_count(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

/// Parameters of the embedding map.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedderModel {
    activation: Activation,
    layers: Vec<DenseLayer>,
}

/// Per-layer activations recorded during a forward pass; entry 0 is the
/// input, the last entry is the embedding.
pub(crate) struct ForwardTrace {
    activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    pub(crate) fn output(&self) -> &[f64] {
        self.activations.last().expect("trace holds the input")
    }
}

impl EmbedderModel {
    /// Builds a model from explicit layers, checking shapes and finiteness.
    pub fn from_layers(activation: Activation, layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("model needs at least one layer".into()));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.inputs == 0 || layer.outputs == 0 {
                return Err(Error::InvalidConfig(format!("layer {i} has a zero dimension")));
            }
            if layer.weights.len() != layer.inputs * layer.outputs
                || layer.bias.len() != layer.outputs
            {
                return Err(Error::InvalidConfig(format!(
                    "layer {i} parameter arrays do not match {}x{}",
                    layer.outputs, layer.inputs
                )));
            }
            if i > 0 && layers[i - 1].outputs != layer.inputs {
                return Err(Error::DimensionMismatch {
                    expected: layers[i - 1].outputs,
                    actual: layer.inputs,
                });
            }
            if layer.weights.iter().chain(&layer.bias).any(|p| !p.is_finite()) {
                return Err(Error::NonFinite("model parameters"));
            }
        }
        Ok(Self { activation, layers })
    }

    /// Seeded initialization: weights uniform in `[-r, r]` with
    /// `r = sqrt(3 / fan_in)`, biases zero.
    pub fn seeded(dims: &[usize], activation: Activation, seed: u64) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::InvalidConfig(
                "layer dimensions need an input and an output size".into(),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|w| {
                let (inputs, outputs) = (w[0], w[1]);
                let mut layer = DenseLayer::zeros(inputs, outputs);
                let r = (3.0 / inputs.max(1) as f64).sqrt();
                for weight in &mut layer.weights {
                    *weight = rng.random_range(-r..=r);
                }
                layer
            })
            .collect();
        Self::from_layers(activation, layers)
    }

    /// The desk-scale default: `d_in -> 64 -> 64 -> 32` with tanh.
    pub fn default_architecture(input_dim: usize, seed: u64) -> Result<Self> {
        let mut dims = vec![input_dim];
        dims.extend(DEFAULT_HIDDEN);
        dims.push(DEFAULT_EMBEDDING_DIM);
        Self::seeded(&dims, Activation::Tanh, seed)
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Layer widths from input to embedding.
    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].inputs)
            .chain(self.layers.iter().map(|l| l.outputs))
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(DenseLayer::parameter_count).sum()
    }

    /// All parameters flattened, layer by layer, weights before biases.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for layer in &self.layers {
            out.extend(&layer.weights);
            out.extend(&layer.bias);
        }
        out
    }

    /// Overwrites the parameters from the layout used by [`Self::parameters`].
    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::DimensionMismatch {
                expected: self.parameter_count(),
                actual: params.len(),
            });
        }
        let mut rest = params;
        for layer in &mut self.layers {
            let (w, tail) = rest.split_at(layer.weights.len());
            layer.weights.copy_from_slice(w);
            let (b, tail) = tail.split_at(layer.bias.len());
            layer.bias.copy_from_slice(b);
            rest = tail;
        }
        Ok(())
    }

    pub(crate) fn forward(&self, features: &[f64]) -> Result<ForwardTrace> {
        if features.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                actual: features.len(),
            });
        }
        let last = self.layers.len() - 1;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(features.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = layer.affine(activations.last().expect("non-empty"));
            if i < last {
                z.iter_mut().for_each(|v| *v = self.activation.apply(*v));
            }
            activations.push(z);
        }
        Ok(ForwardTrace { activations })
    }

    /// Accumulates the parameter gradient for one input given the gradient
    /// of the objective with respect to that input's embedding.
    pub(crate) fn backward(
        &self,
        trace: &ForwardTrace,
        output_grad: &[f64],
        grads: &mut Gradients,
    ) {
        let last = self.layers.len() - 1;
        let mut delta = output_grad.to_vec();
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            if i < last {
                for (d, a) in delta.iter_mut().zip(&trace.activations[i + 1]) {
                    *d *= self.activation.derivative_from_output(*a);
                }
            }
            let input = &trace.activations[i];
            let g = &mut grads.layers[i];
            for (o, d) in delta.iter().enumerate() {
                g.bias[o] += d;
                let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                for (gw, x) in row.iter_mut().zip(input) {
                    *gw += d * x;
                }
            }
            if i > 0 {
                let mut upstream = vec![0.0; layer.inputs];
                for (row, d) in layer.weights.chunks_exact(layer.inputs).zip(&delta) {
                    for (u, w) in upstream.iter_mut().zip(row) {
                        *u += w * d;
                    }
                }
                delta = upstream;
            }
        }
    }

    pub(crate) fn apply_gradient(&mut self, grads: &Gradients, learning_rate: f64) {
        for (layer, g) in self.layers.iter_mut().zip(&grads.layers) {
            for (w, gw) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= learning_rate * gw;
            }
            for (b, gb) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= learning_rate * gb;
            }
        }
    }
}

impl Embedder for EmbedderModel {
    fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    fn embed(&self, features: &[f64]) -> Result<Vec<f64>> {
        let mut trace = self.forward(features)?;
        Ok(trace.activations.pop().expect("non-empty"))
    }
}

/// Gradient with the same shape as an [`EmbedderModel`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    layers: Vec<DenseLayer>,
}

impl Gradients {
    pub fn zeros_like(model: &EmbedderModel) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.inputs, l.outputs))
                .collect(),
        }
    }

    pub(crate) fn scale(&mut self, factor: f64) {
        for layer in &mut self.layers {
            layer.weights.iter_mut().for_each(|w| *w *= factor);
            layer.bias.iter_mut().for_each(|b| *b *= factor);
        }
    }

    /// Flattened in the same order as [`EmbedderModel::parameters`].
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend(&layer.weights);
            out.extend(&layer.bias);
        }
        out
    }
}
