//! Self-describing JSON form of a [`DenseNet`].
//!
//! Floats are written in shortest round-trip form, so save → load → save
//! reproduces the same bytes.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::{Activation, DenseNet, Layer};
use crate::error::{Error, Result};

pub const FORMAT: &str = "vxslice-densenet";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDocument {
    pub inputs: usize,
    pub outputs: usize,
    pub activation: Activation,
    /// Row-major `outputs x inputs`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetDocument {
    pub format: String,
    pub version: u32,
    pub layers: Vec<LayerDocument>,
}

impl From<&DenseNet> for NetDocument {
    fn from(net: &DenseNet) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            layers: net
                .layers()
                .iter()
                .map(|l| LayerDocument {
                    inputs: l.inputs(),
                    outputs: l.outputs(),
                    activation: l.activation,
                    weights: l.weights.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }
}

impl TryFrom<NetDocument> for DenseNet {
    type Error = Error;

    fn try_from(doc: NetDocument) -> Result<Self> {
        if doc.format != FORMAT || doc.version != VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported network document {} v{}",
                doc.format, doc.version
            )));
        }
        let layers = doc
            .layers
            .into_iter()
            .enumerate()
            .map(|(k, l)| {
                let weights = Array2::from_shape_vec((l.outputs, l.inputs), l.weights)
                    .map_err(|e| Error::Checkpoint(format!("layer {k} weights: {e}")))?;
                if l.bias.len() != l.outputs {
                    return Err(Error::Checkpoint(format!("layer {k} bias length {}", l.bias.len())));
                }
                Ok(Layer {
                    weights,
                    bias: Array1::from(l.bias),
                    activation: l.activation,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        DenseNet::from_layers(layers)
    }
}

impl Serialize for DenseNet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NetDocument::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for DenseNet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = NetDocument::deserialize(d)?;
        DenseNet::try_from(doc).map_err(serde::de::Error::custom)
    }
}

impl DenseNet {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}
