//! Labeled examples and small vector helpers shared by every layer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class identifier in `[0, C)`.
pub type Label = usize;

/// A feature vector with its class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub label: Label,
}

impl LabeledExample {
    pub fn new(features: Vec<f64>, label: Label) -> Self {
        Self { features, label }
    }
}

/// Checks the dataset invariants: one shared feature dimension, finite
/// features, and every label below `classes`. Returns the feature dimension.
pub fn validate_examples(examples: &[LabeledExample], classes: usize) -> Result<usize> {
    let dim = examples.first().map_or(0, |e| e.features.len());
    for example in examples {
        if example.features.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: example.features.len(),
            });
        }
        if example.label >= classes {
            return Err(Error::LabelOutOfRange {
                label: example.label,
                classes,
            });
        }
        if example.features.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("features"));
        }
    }
    Ok(dim)
}

/// Number of classes implied by the largest label (`max + 1`).
pub fn class_count(examples: &[LabeledExample]) -> usize {
    examples.iter().map(|e| e.label + 1).max().unwrap_or(0)
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distance.
pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    squared_distance(a, b).sqrt()
}
