//! Mini-batch gradient descent on the mean triplet loss over mined triplets.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::loss::triplet_loss_gradient;
use super::mining::{mine_triplets, Triplet};
use super::model::{Activation, EmbedderModel, Gradients, DEFAULT_EMBEDDING_DIM, DEFAULT_HIDDEN};
use crate::data::{class_count, validate_examples, LabeledExample};
use crate::error::{Error, Result};

/// Default triplet margin.
pub const DEFAULT_MARGIN: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub hidden: Vec<usize>,
    pub embedding_dim: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            margin: DEFAULT_MARGIN,
            learning_rate: 0.02,
            epochs: 20,
            batch_size: 64,
            seed: 0,
            hidden: DEFAULT_HIDDEN.to_vec(),
            embedding_dim: DEFAULT_EMBEDDING_DIM,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.margin >= 0.0 && self.margin.is_finite()) {
            return Err(Error::InvalidConfig(format!("margin must be >= 0, got {}", self.margin)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size < 2 {
            return Err(Error::InvalidConfig("batch size must be at least 2".into()));
        }
        if self.embedding_dim == 0 || self.hidden.contains(&0) {
            return Err(Error::InvalidConfig("layer widths must be positive".into()));
        }
        Ok(())
    }

    fn dims(&self, input_dim: usize) -> Vec<usize> {
        let mut dims = vec![input_dim];
        dims.extend(&self.hidden);
        dims.push(self.embedding_dim);
        dims
    }

    /// The model `train` starts from.
    pub fn initial_model(&self, input_dim: usize) -> Result<EmbedderModel> {
        EmbedderModel::seeded(&self.dims(input_dim), Activation::Tanh, self.seed)
    }
}

/// Mean triplet loss over `triplets` (indices into `inputs`) and its
/// gradient with respect to the model parameters. An empty triplet list
/// gives zero loss and a zero gradient.
pub fn batch_objective<V: AsRef<[f64]>>(
    model: &EmbedderModel,
    inputs: &[V],
    triplets: &[Triplet],
    margin: f64,
) -> Result<(f64, Gradients)> {
    let traces = inputs
        .iter()
        .map(|x| model.forward(x.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    objective_from_traces(model, &traces, triplets, margin)
}

fn objective_from_traces(
    model: &EmbedderModel,
    traces: &[super::model::ForwardTrace],
    triplets: &[Triplet],
    margin: f64,
) -> Result<(f64, Gradients)> {
    let mut grads = Gradients::zeros_like(model);
    if triplets.is_empty() {
        return Ok((0.0, grads));
    }
    let dim = traces.first().map_or(0, |t| t.output().len());
    let mut output_grads = vec![vec![0.0; dim]; traces.len()];
    let mut total = 0.0;
    for t in triplets {
        let g = triplet_loss_gradient(
            traces[t.anchor].output(),
            traces[t.positive].output(),
            traces[t.negative].output(),
            margin,
        )?;
        total += g.loss;
        for (slot, part) in [(t.anchor, &g.anchor), (t.positive, &g.positive), (t.negative, &g.negative)] {
            for (acc, v) in output_grads[slot].iter_mut().zip(part) {
                *acc += v;
            }
        }
    }
    for (trace, og) in traces.iter().zip(&output_grads) {
        if og.iter().any(|v| *v != 0.0) {
            model.backward(trace, og, &mut grads);
        }
    }
    let scale = 1.0 / triplets.len() as f64;
    grads.scale(scale);
    Ok((total * scale, grads))
}

/// Per-epoch training statistics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EpochStats {
    pub mean_loss: f64,
    pub triplets: usize,
}

/// Trains an embedder from the seeded initial model.
pub fn train(data: &[LabeledExample], config: &TrainingConfig) -> Result<EmbedderModel> {
    train_with_history(data, config).map(|(model, _)| model)
}

/// Like [`train`], also returning per-epoch statistics.
pub fn train_with_history(
    data: &[LabeledExample],
    config: &TrainingConfig,
) -> Result<(EmbedderModel, Vec<EpochStats>)> {
    config.validate()?;
    let classes = class_count(data);
    let input_dim = validate_examples(data, classes)?;
    let mut present = vec![false; classes];
    data.iter().for_each(|e| present[e.label] = true);
    if present.iter().filter(|p| **p).count() < 2 {
        return Err(Error::TrainingImpossible(
            "at least two classes are required to form triplets".into(),
        ));
    }

    let mut model = config.initial_model(input_dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut stats = EpochStats::default();
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(config.batch_size) {
            let traces = batch
                .iter()
                .map(|&i| model.forward(&data[i].features))
                .collect::<Result<Vec<_>>>()?;
            let labels: Vec<_> = batch.iter().map(|&i| data[i].label).collect();
            let embeddings: Vec<&[f64]> = traces.iter().map(|t| t.output()).collect();
            let triplets = mine_triplets(&embeddings, &labels)?;
            if triplets.is_empty() {
                continue;
            }
            let (loss, grads) = objective_from_traces(&model, &traces, &triplets, config.margin)?;
            model.apply_gradient(&grads, config.learning_rate);
            stats.triplets += triplets.len();
            loss_sum += loss;
            batches += 1;
        }
        if batches > 0 {
            stats.mean_loss = loss_sum / batches as f64;
        }
        history.push(stats);
    }

    if model.parameters().iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite("trained parameters (learning rate too large?)"));
    }
    Ok((model, history))
}
