//! Versioned JSON persistence for network weights.
//!
//! Document shape:
//! `{version, input_dim, num_classes, layers: [{kind, in, out, W, b} | {kind}]}`
//! with `W` as a nested `out x in` array. Values are stored as `f64`; for a
//! `f64` network the round-trip is bit-exact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::nn::layer::{Dense, Layer};
use crate::nn::network::Network;
use crate::scalar::Scalar;

const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct NetworkDoc {
    version: u32,
    input_dim: usize,
    num_classes: usize,
    layers: Vec<LayerDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum LayerDoc {
    Dense {
        #[serde(rename = "in")]
        in_dim: usize,
        #[serde(rename = "out")]
        out_dim: usize,
        #[serde(rename = "W")]
        weights: Vec<Vec<f64>>,
        b: Vec<f64>,
    },
    Relu,
    Softmax,
}

pub fn to_json<F: Scalar>(net: &Network<F>) -> Result<String> {
    let layers = net
        .layers()
        .iter()
        .map(|layer| match layer {
            Layer::Dense(d) => LayerDoc::Dense {
                in_dim: d.in_dim(),
                out_dim: d.out_dim(),
                weights: (0..d.out_dim())
                    .map(|o| d.row(o).iter().map(|w| w.to_f64_lossy()).collect())
                    .collect(),
                b: d.bias().iter().map(|b| b.to_f64_lossy()).collect(),
            },
            Layer::Relu => LayerDoc::Relu,
            Layer::Softmax => LayerDoc::Softmax,
        })
        .collect();
    let doc = NetworkDoc {
        version: FORMAT_VERSION,
        input_dim: net.input_dim(),
        num_classes: net.num_classes(),
        layers,
    };
    Ok(serde_json::to_string(&doc)?)
}

pub fn from_json<F: Scalar>(text: &str) -> Result<Network<F>> {
    let doc: NetworkDoc = serde_json::from_str(text)?;
    if doc.version != FORMAT_VERSION {
        return Err(Error::Format {
            offset: 0,
            reason: format!("unsupported weight format version {}", doc.version),
        });
    }
    let mut layers = Vec::with_capacity(doc.layers.len());
    for (i, layer) in doc.layers.into_iter().enumerate() {
        match layer {
            LayerDoc::Dense {
                in_dim,
                out_dim,
                weights,
                b,
            } => {
                if weights.len() != out_dim || weights.iter().any(|r| r.len() != in_dim) {
                    return Err(Error::Format {
                        offset: 0,
                        reason: format!("layer {i}: W is not a {out_dim}x{in_dim} matrix"),
                    });
                }
                if b.len() != out_dim {
                    return Err(Error::Format {
                        offset: 0,
                        reason: format!("layer {i}: bias length {} != {out_dim}", b.len()),
                    });
                }
                let flat: Vec<f64> = weights.into_iter().flatten().collect();
                if flat.iter().chain(b.iter()).any(|v| !v.is_finite()) {
                    return Err(Error::Format {
                        offset: 0,
                        reason: format!("layer {i}: non-finite parameter"),
                    });
                }
                let w: Vec<F> = flat.into_iter().map(F::from_f64_lossy).collect();
                let bias: Vec<F> = b.into_iter().map(F::from_f64_lossy).collect();
                layers.push(Layer::Dense(Dense::from_parts(in_dim, out_dim, w, bias)));
            }
            LayerDoc::Relu => layers.push(Layer::Relu),
            LayerDoc::Softmax => layers.push(Layer::Softmax),
        }
    }
    let net = Network::from_layers(layers, doc.input_dim)?;
    if net.num_classes() != doc.num_classes {
        return Err(Error::Format {
            offset: 0,
            reason: format!(
                "declared num_classes {} but layers produce {}",
                doc.num_classes,
                net.num_classes()
            ),
        });
    }
    Ok(net)
}

pub fn save_network<F: Scalar>(net: &Network<F>, path: &Path) -> Result<()> {
    fs::write(path, to_json(net)?)?;
    Ok(())
}

pub fn load_network<F: Scalar>(path: &Path) -> Result<Network<F>> {
    let text = fs::read_to_string(path)?;
    from_json(&text)
}

/// Stable hex digest of the serialized weights; used by pool manifests and
/// pipeline caching.
pub fn weights_hash<F: Scalar>(net: &Network<F>) -> Result<String> {
    let json = to_json(net)?;
    let digest = Sha256::digest(json.as_bytes());
    Ok(format!("{digest:x}"))
}
