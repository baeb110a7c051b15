//! Text persistence for [`EmbedderModel`].
//!
//! The file is a JSON document with a magic string and a format version,
//! followed by layer dimensions, the activation name and row-major
//! parameter arrays. Floats are written in shortest round-trip decimal
//! form, so a save/load cycle is lossless.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::model::{Activation, DenseLayer, EmbedderModel};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &str = "tricp-embedder";
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LayerParams {
    weights: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    magic: String,
    version: u32,
    activation: String,
    dims: Vec<usize>,
    layers: Vec<LayerParams>,
}

impl EmbedderModel {
    pub fn to_text(&self) -> String {
        let file = ModelFile {
            magic: MODEL_MAGIC.to_owned(),
            version: MODEL_FORMAT_VERSION,
            activation: self.activation().to_string(),
            dims: self.dims(),
            layers: self
                .layers()
                .iter()
                .map(|l| LayerParams {
                    weights: l.weights.clone(),
                    bias: l.bias.clone(),
                })
                .collect(),
        };
        let mut text = serde_json::to_string_pretty(&file).expect("model serializes");
        text.push('\n');
        text
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("model file: {e}")))?;
        if file.magic != MODEL_MAGIC {
            return Err(Error::Format(format!(
                "bad magic '{}', expected '{MODEL_MAGIC}'",
                file.magic
            )));
        }
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported model format version {}, expected {MODEL_FORMAT_VERSION}",
                file.version
            )));
        }
        if file.dims.len() != file.layers.len() + 1 {
            return Err(Error::Format(format!(
                "{} layer dimensions for {} layers",
                file.dims.len(),
                file.layers.len()
            )));
        }
        let activation: Activation = file.activation.parse()?;
        let layers = file
            .dims
            .windows(2)
            .zip(file.layers)
            .map(|(w, p)| DenseLayer {
                inputs: w[0],
                outputs: w[1],
                weights: p.weights,
                bias: p.bias,
            })
            .collect();
        EmbedderModel::from_layers(activation, layers)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|e| match e {
            Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}
