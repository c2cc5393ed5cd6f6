//! Mini-batch SGD with optional L2 regularization.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::LabeledSet;
use crate::error::{Error, Result};
use crate::nn::grad::param_gradients_indexed;
use crate::nn::layer::Layer;
use crate::nn::network::Network;
use crate::scalar::Scalar;

/// Training hyperparameters. `learning_rate = 0` is allowed and leaves
/// parameters untouched (useful as a control).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub l2: f64,
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::Config(
                "learning_rate must be finite and >= 0".into(),
            ));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !self.l2.is_finite() || self.l2 < 0.0 {
            return Err(Error::Config("l2 must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Trains a copy of `net` on `train` and returns it. Bit-identical output
/// for identical (initial weights, data, config).
pub fn sgd_train<F: Scalar>(
    net: &Network<F>,
    train: &LabeledSet<F>,
    cfg: &TrainConfig,
) -> Result<Network<F>> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::Domain("training set is empty".into()));
    }
    if train.labels().is_none() {
        return Err(Error::Domain("training set needs labels".into()));
    }

    let lr = F::from_f64_lossy(cfg.learning_rate);
    let l2 = F::from_f64_lossy(cfg.l2);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trained = net.clone();
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let (grads, loss) = param_gradients_indexed(&trained, train, chunk)?;
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged {
                    epoch,
                    loss: loss.to_f64_lossy(),
                });
            }
            let mut dense_idx = 0;
            for layer in trained.layers_mut() {
                if let Layer::Dense(d) = layer {
                    let dw = &grads.weights[dense_idx];
                    let db = &grads.bias[dense_idx];
                    for (w, g) in d.weights_mut().iter_mut().zip(dw) {
                        let step = *g + l2 * *w;
                        *w -= lr * step;
                    }
                    for (b, g) in d.bias_mut().iter_mut().zip(db) {
                        *b -= lr * *g;
                    }
                    dense_idx += 1;
                }
            }
        }
    }
    Ok(trained)
}
