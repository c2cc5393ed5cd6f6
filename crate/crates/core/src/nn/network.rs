//! Feedforward classifier: an ordered layer stack ending in softmax.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::LabeledSet;
use crate::error::{Error, Result};
use crate::nn::layer::{Dense, Layer};
use crate::nn::tensor::{argmax, Tensor};
use crate::scalar::Scalar;

/// Immutable-after-construction classifier. `forward` yields a probability
/// vector over `num_classes`; all other behavior derives from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<F> {
    layers: Vec<Layer<F>>,
    input_dim: usize,
    num_classes: usize,
}

impl<F: Scalar> Network<F> {
    /// Builds an MLP `input -> hidden[0] -> ... -> num_classes` with ReLU
    /// between dense layers and a final softmax. Weights are seeded
    /// Glorot-uniform.
    pub fn mlp(input_dim: usize, hidden: &[usize], num_classes: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Shape("input_dim must be positive".into()));
        }
        if num_classes < 2 {
            return Err(Error::Domain("need at least 2 classes".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::new();
        let mut dim = input_dim;
        for &h in hidden {
            layers.push(Layer::Dense(Dense::seeded(dim, h, &mut rng)));
            layers.push(Layer::Relu);
            dim = h;
        }
        layers.push(Layer::Dense(Dense::seeded(dim, num_classes, &mut rng)));
        layers.push(Layer::Softmax);
        Self::from_layers(layers, input_dim)
    }

    /// Validates layer chaining: dense dims must be consistent, softmax only
    /// as the terminal layer, at least one dense layer.
    pub fn from_layers(layers: Vec<Layer<F>>, input_dim: usize) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        let mut dim = input_dim;
        let mut dense_seen = 0usize;
        for (i, layer) in layers.iter().enumerate() {
            match layer {
                Layer::Dense(d) => {
                    if d.in_dim() != dim {
                        return Err(Error::Shape(format!(
                            "layer {i}: dense expects {} inputs, previous layer provides {dim}",
                            d.in_dim()
                        )));
                    }
                    dim = d.out_dim();
                    dense_seen += 1;
                }
                Layer::Relu => {}
                Layer::Softmax => {
                    if i + 1 != layers.len() {
                        return Err(Error::Shape(format!(
                            "layer {i}: softmax must be the final layer"
                        )));
                    }
                }
            }
        }
        if dense_seen == 0 {
            return Err(Error::Shape(
                "network needs at least one dense layer".into(),
            ));
        }
        if !matches!(layers.last(), Some(Layer::Softmax)) {
            return Err(Error::Shape("final layer must be softmax".into()));
        }
        if dim < 2 {
            return Err(Error::Domain("need at least 2 classes".into()));
        }
        Ok(Self {
            layers,
            input_dim,
            num_classes: dim,
        })
    }

    pub fn layers(&self) -> &[Layer<F>] {
        &self.layers
    }

    pub(crate) fn layers_mut(&mut self) -> &mut [Layer<F>] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Iterator over dense layers, in order.
    pub fn dense_layers(&self) -> impl Iterator<Item = &Dense<F>> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Dense(d) => Some(d),
            _ => None,
        })
    }

    fn check_input(&self, x: &[F]) -> Result<()> {
        if x.len() != self.input_dim {
            return Err(Error::Shape(format!(
                "input has {} features, network expects {}",
                x.len(),
                self.input_dim
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite input feature".into()));
        }
        Ok(())
    }

    /// Probability vector for one input row.
    pub fn forward_row(&self, x: &[F]) -> Result<Vec<F>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        for layer in &self.layers {
            cur = layer.forward(&cur);
        }
        Ok(cur)
    }

    /// Tensor-level forward, matching the published signature.
    pub fn forward(&self, x: &Tensor<F>) -> Result<Tensor<F>> {
        let probs = self.forward_row(x.data())?;
        Tensor::vector(probs)
    }

    /// Pre-softmax logits for one input row.
    pub fn logits_row(&self, x: &[F]) -> Result<Vec<F>> {
        self.check_input(x)?;
        let mut cur = x.to_vec();
        for layer in &self.layers {
            if matches!(layer, Layer::Softmax) {
                break;
            }
            cur = layer.forward(&cur);
        }
        Ok(cur)
    }

    /// Class prediction for one input row; ties break toward the lowest
    /// class index.
    pub fn predict_row(&self, x: &[F]) -> Result<usize> {
        Ok(argmax(&self.forward_row(x)?))
    }

    /// Class predictions for every row of `set`, order-preserving.
    pub fn predict(&self, set: &LabeledSet<F>) -> Result<Vec<usize>> {
        (0..set.len())
            .map(|i| self.predict_row(set.row(i)))
            .collect()
    }

    /// Fraction of rows whose prediction equals the ground-truth label.
    pub fn accuracy(&self, set: &LabeledSet<F>) -> Result<f64> {
        let labels = set
            .labels()
            .ok_or_else(|| Error::Domain("accuracy needs ground-truth labels".into()))?;
        let preds = self.predict(set)?;
        let hits = preds.iter().zip(labels).filter(|(p, y)| *p == *y).count();
        Ok(hits as f64 / set.len() as f64)
    }
}
