//! Network layers: dense affine, ReLU, softmax.

use rand::Rng;

use crate::scalar::Scalar;

/// One layer of a feedforward classifier.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer<F> {
    Dense(Dense<F>),
    Relu,
    Softmax,
}

impl<F: Scalar> Layer<F> {
    /// Output of this layer for `input`, appended as a fresh vector.
    pub fn forward(&self, input: &[F]) -> Vec<F> {
        match self {
            Layer::Dense(d) => d.forward(input),
            Layer::Relu => input.iter().map(|&v| v.max(F::zero())).collect(),
            Layer::Softmax => softmax(input),
        }
    }
}

/// Dense affine transform `z = W x + b` with `W` row-major `(out, in)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<F> {
    in_dim: usize,
    out_dim: usize,
    weights: Vec<F>,
    bias: Vec<F>,
}

impl<F: Scalar> Dense<F> {
    /// Glorot-uniform initialized layer: weights in ±sqrt(6/(in+out)),
    /// zero bias.
    pub fn seeded<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        assert!(in_dim > 0 && out_dim > 0, "dense dims must be positive");
        let limit = F::from_f64_lossy((6.0 / (in_dim + out_dim) as f64).sqrt());
        let weights = (0..in_dim * out_dim)
            .map(|_| F::sample_uniform(rng, -limit, limit))
            .collect();
        Self {
            in_dim,
            out_dim,
            weights,
            bias: vec![F::zero(); out_dim],
        }
    }

    pub fn from_parts(in_dim: usize, out_dim: usize, weights: Vec<F>, bias: Vec<F>) -> Self {
        assert_eq!(weights.len(), in_dim * out_dim);
        assert_eq!(bias.len(), out_dim);
        Self {
            in_dim,
            out_dim,
            weights,
            bias,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    /// Row-major weight slice, `out_dim * in_dim` long.
    pub fn weights(&self) -> &[F] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [F] {
        &mut self.weights
    }

    pub fn bias(&self) -> &[F] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [F] {
        &mut self.bias
    }

    /// Incoming weight row of one output neuron.
    pub fn row(&self, neuron: usize) -> &[F] {
        &self.weights[neuron * self.in_dim..(neuron + 1) * self.in_dim]
    }

    pub fn row_mut(&mut self, neuron: usize) -> &mut [F] {
        &mut self.weights[neuron * self.in_dim..(neuron + 1) * self.in_dim]
    }

    pub fn forward(&self, input: &[F]) -> Vec<F> {
        debug_assert_eq!(input.len(), self.in_dim);
        let mut out = Vec::with_capacity(self.out_dim);
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let mut sum = self.bias[o];
            for (w, x) in row.iter().zip(input) {
                sum += *w * *x;
            }
            out.push(sum);
        }
        out
    }
}

/// Numerically stable softmax; output entries are in `[0,1]` and sum to 1
/// within 1e-9.
pub fn softmax<F: Scalar>(logits: &[F]) -> Vec<F> {
    let max = logits.iter().cloned().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = logits.iter().map(|&v| (v - max).exp()).collect();
    let total = exps.iter().fold(F::zero(), |acc, &v| acc + v);
    exps.into_iter().map(|v| v / total).collect()
}
