//! Reverse-mode gradients: cross-entropy parameter gradients for training,
//! input gradients for attacks and Jacobian augmentation.

use crate::data::LabeledSet;
use crate::error::{Error, Result};
use crate::nn::layer::Layer;
use crate::nn::network::Network;
use crate::scalar::Scalar;

/// What the input gradient differentiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradTarget {
    /// Pre-softmax logit of the chosen class.
    Logit,
    /// Cross-entropy loss with the chosen class as label.
    Loss,
}

/// Gradients of the mean cross-entropy loss w.r.t. every dense layer's
/// parameters, in layer order. Shapes mirror the parameters.
#[derive(Debug, Clone)]
pub struct ParamGradients<F> {
    pub weights: Vec<Vec<F>>,
    pub bias: Vec<Vec<F>>,
}

impl<F: Scalar> ParamGradients<F> {
    fn zeros_like(net: &Network<F>) -> Self {
        let mut weights = Vec::new();
        let mut bias = Vec::new();
        for d in net.dense_layers() {
            weights.push(vec![F::zero(); d.weights().len()]);
            bias.push(vec![F::zero(); d.bias().len()]);
        }
        Self { weights, bias }
    }
}

/// Per-layer forward activations: `activations[0]` is the input, entry `i+1`
/// is the output of layer `i`.
fn forward_trace<F: Scalar>(net: &Network<F>, x: &[F]) -> Result<Vec<Vec<F>>> {
    let mut acts = Vec::with_capacity(net.layers().len() + 1);
    acts.push(x.to_vec());
    if x.len() != net.input_dim() {
        return Err(Error::Shape(format!(
            "input has {} features, network expects {}",
            x.len(),
            net.input_dim()
        )));
    }
    for layer in net.layers() {
        let next = layer.forward(acts.last().expect("trace never empty"));
        acts.push(next);
    }
    Ok(acts)
}

/// Backpropagates `delta` (seeded at the softmax input, i.e. the logits)
/// down to the network input. When `params` is given, dense-layer parameter
/// gradients are accumulated along the way.
fn backprop_from_logits<F: Scalar>(
    net: &Network<F>,
    acts: &[Vec<F>],
    mut delta: Vec<F>,
    mut params: Option<&mut ParamGradients<F>>,
) -> Vec<F> {
    let n_layers = net.layers().len();
    let mut dense_idx = net.dense_layers().count();
    // Walk layers in reverse, skipping the terminal softmax: delta is
    // already expressed w.r.t. its input.
    for li in (0..n_layers).rev() {
        match &net.layers()[li] {
            Layer::Softmax => {}
            Layer::Relu => {
                let out = &acts[li + 1];
                for (d, o) in delta.iter_mut().zip(out) {
                    if *o <= F::zero() {
                        *d = F::zero();
                    }
                }
            }
            Layer::Dense(d) => {
                dense_idx -= 1;
                let input = &acts[li];
                if let Some(p) = params.as_deref_mut() {
                    let dw = &mut p.weights[dense_idx];
                    let db = &mut p.bias[dense_idx];
                    for (o, &dz) in delta.iter().enumerate() {
                        db[o] += dz;
                        let row = &mut dw[o * d.in_dim()..(o + 1) * d.in_dim()];
                        for (slot, a) in row.iter_mut().zip(input) {
                            *slot += dz * *a;
                        }
                    }
                }
                let mut prev = vec![F::zero(); d.in_dim()];
                for (o, &dz) in delta.iter().enumerate() {
                    let row = d.row(o);
                    for (p_i, w) in prev.iter_mut().zip(row) {
                        *p_i += *w * dz;
                    }
                }
                delta = prev;
            }
        }
    }
    delta
}

/// Gradient of the mean cross-entropy loss over `batch` w.r.t. every dense
/// parameter, plus the loss value itself.
pub fn param_gradients<F: Scalar>(
    net: &Network<F>,
    batch: &LabeledSet<F>,
) -> Result<(ParamGradients<F>, F)> {
    let all: Vec<usize> = (0..batch.len()).collect();
    param_gradients_indexed(net, batch, &all)
}

/// Same as [`param_gradients`] but restricted to the rows in `idx`; the loss
/// mean is taken over the selected rows. Lets the trainer run mini-batches
/// without copying rows out of the set.
pub(crate) fn param_gradients_indexed<F: Scalar>(
    net: &Network<F>,
    batch: &LabeledSet<F>,
    idx: &[usize],
) -> Result<(ParamGradients<F>, F)> {
    if idx.is_empty() {
        return Err(Error::Domain("empty batch".into()));
    }
    let labels = batch
        .labels()
        .ok_or_else(|| Error::Domain("gradient batch needs labels".into()))?;
    if batch.num_classes() != net.num_classes() {
        return Err(Error::Shape(format!(
            "batch has {} classes, network {}",
            batch.num_classes(),
            net.num_classes()
        )));
    }
    let scale = F::from_f64_lossy(1.0 / idx.len() as f64);
    let mut grads = ParamGradients::zeros_like(net);
    let mut loss = F::zero();
    for &i in idx {
        let acts = forward_trace(net, batch.row(i))?;
        let probs = acts.last().expect("non-empty trace");
        let y = labels[i];
        loss -= probs[y].ln() * scale;
        let mut delta: Vec<F> = probs.iter().map(|&p| p * scale).collect();
        delta[y] -= scale;
        backprop_from_logits(net, &acts, delta, Some(&mut grads));
    }
    Ok((grads, loss))
}

/// Gradient w.r.t. the input of either the class-`class_c` logit or the
/// cross-entropy loss at label `class_c`.
pub fn input_gradient<F: Scalar>(
    net: &Network<F>,
    x: &[F],
    class_c: usize,
    target: GradTarget,
) -> Result<Vec<F>> {
    if class_c >= net.num_classes() {
        return Err(Error::Domain(format!(
            "class {class_c} out of range for {} classes",
            net.num_classes()
        )));
    }
    let acts = forward_trace(net, x)?;
    let probs = acts.last().expect("non-empty trace");
    let delta = match target {
        GradTarget::Logit => {
            let mut d = vec![F::zero(); net.num_classes()];
            d[class_c] = F::one();
            d
        }
        GradTarget::Loss => {
            let mut d: Vec<F> = probs.clone();
            d[class_c] -= F::one();
            d
        }
    };
    Ok(backprop_from_logits(net, &acts, delta, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::layer::Dense;

    fn linear_net(w: Vec<f64>, b: Vec<f64>, in_dim: usize, out_dim: usize) -> Network<f64> {
        let dense = Dense::from_parts(in_dim, out_dim, w, b);
        Network::from_layers(vec![Layer::Dense(dense), Layer::Softmax], in_dim).unwrap()
    }

    fn set(rows: Vec<Vec<f64>>, ys: Vec<usize>, c: usize) -> LabeledSet<f64> {
        LabeledSet::new(rows, Some(ys), c).unwrap()
    }

    #[test]
    fn zero_weight_net_bias_gradient_is_probs_minus_onehot() {
        // With W = 0 the bias gradient of the output layer equals the logit
        // gradient: probs - onehot = (0.5, 0.5) - (1, 0).
        let net = linear_net(vec![0.0; 4], vec![0.0; 2], 2, 2);
        let batch = set(vec![vec![0.3, 0.9]], vec![0], 2);
        let (g, _) = param_gradients(&net, &batch).unwrap();
        assert!((g.bias[0][0] - (-0.5)).abs() < 1e-12);
        assert!((g.bias[0][1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn duplicated_rows_match_single_row_gradient() {
        let net = Network::mlp(3, &[4], 2, 5).unwrap();
        let single = set(vec![vec![0.2, 0.4, 0.9]], vec![1], 2);
        let doubled = set(
            vec![vec![0.2, 0.4, 0.9], vec![0.2, 0.4, 0.9]],
            vec![1, 1],
            2,
        );
        let (g1, l1) = param_gradients(&net, &single).unwrap();
        let (g2, l2) = param_gradients(&net, &doubled).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.weights.iter().zip(&g2.weights) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn empty_batch_is_domain_error() {
        let net = Network::mlp(2, &[], 2, 0).unwrap();
        let empty = LabeledSet::<f64>::empty(2, 2);
        assert!(matches!(
            param_gradients(&net, &empty),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn linear_net_logit_gradient_is_weight_row() {
        let w = vec![0.3, -0.7, 1.1, 0.25, 0.5, -0.9];
        let net = linear_net(w.clone(), vec![0.1, 0.2], 3, 2);
        for c in 0..2 {
            let g = input_gradient(&net, &[0.4, 0.5, 0.6], c, GradTarget::Logit).unwrap();
            for (gi, wi) in g.iter().zip(&w[c * 3..(c + 1) * 3]) {
                assert!((gi - wi).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dead_relu_gives_zero_input_gradient() {
        // Hidden pre-activations are all negative for non-negative inputs.
        let hidden = Dense::from_parts(2, 2, vec![-1.0, -1.0, -1.0, -1.0], vec![-0.5, -0.5]);
        let out = Dense::from_parts(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]);
        let net = Network::from_layers(
            vec![
                Layer::Dense(hidden),
                Layer::Relu,
                Layer::Dense(out),
                Layer::Softmax,
            ],
            2,
        )
        .unwrap();
        let g = input_gradient(&net, &[0.5, 0.25], 0, GradTarget::Logit).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
        let g = input_gradient(&net, &[0.5, 0.25], 1, GradTarget::Loss).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn invalid_class_is_domain_error() {
        let net = Network::mlp(2, &[], 2, 0).unwrap();
        assert!(input_gradient(&net, &[0.1, 0.2], 2, GradTarget::Logit).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let net = Network::mlp(3, &[5, 4], 3, 99).unwrap();
        let batch = set(
            vec![
                vec![0.9, 0.1, 0.4],
                vec![0.2, 0.8, 0.5],
                vec![0.6, 0.6, 0.1],
            ],
            vec![0, 1, 2],
            3,
        );
        let (grads, _) = param_gradients(&net, &batch).unwrap();
        let h = 1e-5;

        let loss_of = |net: &Network<f64>| -> f64 {
            let mut total = 0.0;
            let labels = batch.labels().unwrap();
            for i in 0..batch.len() {
                let p = net.forward_row(batch.row(i)).unwrap();
                total -= p[labels[i]].ln();
            }
            total / batch.len() as f64
        };

        let dense_count = net.dense_layers().count();
        for d_idx in 0..dense_count {
            let n_w = net.dense_layers().nth(d_idx).unwrap().weights().len();
            for k in 0..n_w {
                let perturb = |eps: f64| {
                    let mut layers = net.layers().to_vec();
                    let mut seen = 0;
                    for l in layers.iter_mut() {
                        if let Layer::Dense(d) = l {
                            if seen == d_idx {
                                d.weights_mut()[k] += eps;
                                break;
                            }
                            seen += 1;
                        }
                    }
                    Network::from_layers(layers, net.input_dim()).unwrap()
                };
                let numeric = (loss_of(&perturb(h)) - loss_of(&perturb(-h))) / (2.0 * h);
                let analytic = grads.weights[d_idx][k];
                let denom = analytic.abs().max(numeric.abs()).max(1e-3);
                assert!(
                    ((analytic - numeric) / denom).abs() <= 1e-5,
                    "layer {d_idx} weight {k}: analytic {analytic} vs numeric {numeric}"
                );
            }
        }
    }
}
