//! Model-level mutation operators over a trained network.
//!
//! All four operators preserve the architecture. Neuron-level operators
//! (WS/NAI/NS) act on hidden dense layers only: the final dense layer's
//! units are class logits, and NS additionally needs an outgoing weight
//! column to swap. GF perturbs any dense weight, output layer included.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Layer, Network};
use crate::scalar::Scalar;

/// The four structure-preserving operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MutationOperator {
    /// Gaussian fuzzing: add noise to a sampled fraction of weights.
    Gf,
    /// Weight shuffling: permute a neuron's incoming weights.
    Ws,
    /// Neuron activation inverse: negate a neuron's pre-activation.
    Nai,
    /// Neuron switch: swap two neurons within a layer.
    Ns,
}

impl MutationOperator {
    pub fn tag(self) -> &'static str {
        match self {
            MutationOperator::Gf => "gf",
            MutationOperator::Ws => "ws",
            MutationOperator::Nai => "nai",
            MutationOperator::Ns => "ns",
        }
    }
}

/// One mutant recipe: operator, rate (fraction of weights for GF, of hidden
/// neurons for WS/NAI, of hidden neuron pairs for NS), the GF noise scale
/// relative to the per-layer weight standard deviation, and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutantSpec {
    pub operator: MutationOperator,
    pub rate: f64,
    #[serde(default = "default_gf_sigma")]
    pub gf_sigma: f64,
    pub seed: u64,
}

fn default_gf_sigma() -> f64 {
    1.0
}

impl MutantSpec {
    pub fn validate(&self) -> Result<()> {
        // rate 0 is legal and yields an identity mutant
        if !self.rate.is_finite() || self.rate < 0.0 || self.rate > 1.0 {
            return Err(Error::Config("mutation rate must be in [0, 1]".into()));
        }
        if !self.gf_sigma.is_finite() || self.gf_sigma < 0.0 {
            return Err(Error::Config("gf_sigma must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Hidden-layer neuron address: which dense layer (by layer index) and
/// which output unit.
#[derive(Debug, Clone, Copy)]
struct NeuronRef {
    layer: usize,
    neuron: usize,
}

fn dense_layer_indices<F: Scalar>(net: &Network<F>) -> Vec<usize> {
    net.layers()
        .iter()
        .enumerate()
        .filter_map(|(i, l)| matches!(l, Layer::Dense(_)).then_some(i))
        .collect()
}

/// Hidden neurons: units of every dense layer except the final one.
fn hidden_neurons<F: Scalar>(net: &Network<F>) -> Vec<NeuronRef> {
    let dense = dense_layer_indices(net);
    let mut out = Vec::new();
    for &li in &dense[..dense.len().saturating_sub(1)] {
        if let Layer::Dense(d) = &net.layers()[li] {
            for n in 0..d.out_dim() {
                out.push(NeuronRef {
                    layer: li,
                    neuron: n,
                });
            }
        }
    }
    out
}

fn round_count(rate: f64, population: usize) -> usize {
    (rate * population as f64).round() as usize
}

/// Applies `spec` to a copy of `base`. Identical `(base, spec)` always
/// yields an identical mutant; the base is never modified.
pub fn mutate<F: Scalar>(base: &Network<F>, spec: &MutantSpec) -> Result<Network<F>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut net = base.clone();
    match spec.operator {
        MutationOperator::Gf => gaussian_fuzz(&mut net, spec, &mut rng),
        MutationOperator::Ws => weight_shuffle(&mut net, spec.rate, &mut rng),
        MutationOperator::Nai => neuron_activation_inverse(&mut net, spec.rate, &mut rng),
        MutationOperator::Ns => neuron_switch(&mut net, spec.rate, &mut rng)?,
    }
    Ok(net)
}

fn gaussian_fuzz<F: Scalar>(net: &mut Network<F>, spec: &MutantSpec, rng: &mut ChaCha8Rng) {
    // Per-layer noise scale: gf_sigma times the base layer's weight std.
    let dense = dense_layer_indices(net);
    let mut layer_std = Vec::with_capacity(dense.len());
    let mut layer_sizes = Vec::with_capacity(dense.len());
    for &li in &dense {
        if let Layer::Dense(d) = &net.layers()[li] {
            let ws = d.weights();
            let n = ws.len() as f64;
            let mean = ws.iter().map(|w| w.to_f64_lossy()).sum::<f64>() / n;
            let var = ws
                .iter()
                .map(|w| (w.to_f64_lossy() - mean).powi(2))
                .sum::<f64>()
                / n;
            layer_std.push(var.sqrt());
            layer_sizes.push(ws.len());
        }
    }
    let total: usize = layer_sizes.iter().sum();
    let k = round_count(spec.rate, total);
    if k == 0 {
        return;
    }
    let mut picks: Vec<usize> = sample(rng, total, k).into_vec();
    picks.sort_unstable();

    for flat in picks {
        // Map the flat index into (dense layer ordinal, weight offset).
        let mut offset = flat;
        let mut ord = 0;
        while offset >= layer_sizes[ord] {
            offset -= layer_sizes[ord];
            ord += 1;
        }
        let noise = f64::sample_standard_normal(rng) * spec.gf_sigma * layer_std[ord];
        if let Layer::Dense(d) = &mut net.layers_mut()[dense[ord]] {
            let w = &mut d.weights_mut()[offset];
            *w += F::from_f64_lossy(noise);
        }
    }
}

fn pick_neurons<F: Scalar>(net: &Network<F>, rate: f64, rng: &mut ChaCha8Rng) -> Vec<NeuronRef> {
    let pool = hidden_neurons(net);
    let k = round_count(rate, pool.len());
    if k == 0 {
        return Vec::new();
    }
    let mut picks: Vec<usize> = sample(rng, pool.len(), k).into_vec();
    picks.sort_unstable();
    picks.into_iter().map(|i| pool[i]).collect()
}

fn weight_shuffle<F: Scalar>(net: &mut Network<F>, rate: f64, rng: &mut ChaCha8Rng) {
    for nref in pick_neurons(net, rate, rng) {
        if let Layer::Dense(d) = &mut net.layers_mut()[nref.layer] {
            d.row_mut(nref.neuron).shuffle(rng);
        }
    }
}

fn neuron_activation_inverse<F: Scalar>(net: &mut Network<F>, rate: f64, rng: &mut ChaCha8Rng) {
    for nref in pick_neurons(net, rate, rng) {
        if let Layer::Dense(d) = &mut net.layers_mut()[nref.layer] {
            for w in d.row_mut(nref.neuron) {
                *w = -*w;
            }
            let b = &mut d.bias_mut()[nref.neuron];
            *b = -*b;
        }
    }
}

fn neuron_switch<F: Scalar>(net: &mut Network<F>, rate: f64, rng: &mut ChaCha8Rng) -> Result<()> {
    let dense = dense_layer_indices(net);
    let hidden_dense: Vec<usize> = dense[..dense.len() - 1].to_vec();
    let eligible: Vec<usize> = hidden_dense
        .iter()
        .copied()
        .filter(|&li| match &net.layers()[li] {
            Layer::Dense(d) => d.out_dim() >= 2,
            _ => false,
        })
        .collect();
    if eligible.is_empty() {
        return Err(Error::OperatorInapplicable(
            "neuron switch needs a hidden dense layer with at least 2 neurons".into(),
        ));
    }

    let n_hidden = hidden_neurons(net).len();
    let wanted = round_count(rate * 0.5, n_hidden);
    if wanted == 0 {
        return Ok(());
    }

    // Disjoint pairs: shuffle each eligible layer's neurons, pair them off,
    // then sample the requested number of pairs across layers.
    let mut pairs: Vec<(usize, usize, usize)> = Vec::new();
    for &li in &eligible {
        let count = match &net.layers()[li] {
            Layer::Dense(d) => d.out_dim(),
            _ => unreachable!(),
        };
        let mut order: Vec<usize> = (0..count).collect();
        order.shuffle(rng);
        for chunk in order.chunks_exact(2) {
            pairs.push((li, chunk[0], chunk[1]));
        }
    }
    if wanted > pairs.len() {
        return Err(Error::OperatorInapplicable(format!(
            "neuron switch wants {wanted} disjoint pairs, only {} available",
            pairs.len()
        )));
    }
    pairs.shuffle(rng);
    pairs.truncate(wanted);

    for (li, a, b) in pairs {
        // Incoming rows and biases.
        if let Layer::Dense(d) = &mut net.layers_mut()[li] {
            let in_dim = d.in_dim();
            for i in 0..in_dim {
                d.weights_mut().swap(a * in_dim + i, b * in_dim + i);
            }
            d.bias_mut().swap(a, b);
        }
        // Outgoing columns in the next dense layer.
        let next = dense
            .iter()
            .copied()
            .find(|&n| n > li)
            .expect("hidden dense layers are followed by another dense layer");
        if let Layer::Dense(d) = &mut net.layers_mut()[next] {
            let in_dim = d.in_dim();
            for o in 0..d.out_dim() {
                d.weights_mut().swap(o * in_dim + a, o * in_dim + b);
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(op: MutationOperator, rate: f64, seed: u64) -> MutantSpec {
        MutantSpec {
            operator: op,
            rate,
            gf_sigma: 1.0,
            seed,
        }
    }

    fn demo_net(seed: u64) -> Network<f64> {
        Network::mlp(3, &[6, 4], 2, seed).unwrap()
    }

    #[test]
    fn tiny_rate_rounds_to_empty_selection() {
        let base = demo_net(1);
        for op in [
            MutationOperator::Gf,
            MutationOperator::Ws,
            MutationOperator::Nai,
            MutationOperator::Ns,
        ] {
            let m = mutate(&base, &spec(op, 0.005, 7)).unwrap();
            assert_eq!(
                base, m,
                "operator {op:?} with empty selection must be identity"
            );
        }
    }

    #[test]
    fn zero_sigma_gf_is_identity() {
        let base = demo_net(2);
        let m = mutate(
            &base,
            &MutantSpec {
                operator: MutationOperator::Gf,
                rate: 0.5,
                gf_sigma: 0.0,
                seed: 3,
            },
        )
        .unwrap();
        assert_eq!(base, m);
    }

    #[test]
    fn nai_is_an_involution() {
        let base = demo_net(3);
        let s = spec(MutationOperator::Nai, 0.5, 11);
        let once = mutate(&base, &s).unwrap();
        assert_ne!(base, once);
        let twice = mutate(&once, &s).unwrap();
        assert_eq!(base, twice);
    }

    #[test]
    fn ns_is_an_involution() {
        let base = demo_net(4);
        let s = spec(MutationOperator::Ns, 0.6, 13);
        let once = mutate(&base, &s).unwrap();
        assert_ne!(base, once);
        let twice = mutate(&once, &s).unwrap();
        assert_eq!(base, twice);
    }

    #[test]
    fn mutate_never_touches_the_base() {
        let base = demo_net(5);
        let snapshot = base.clone();
        for op in [
            MutationOperator::Gf,
            MutationOperator::Ws,
            MutationOperator::Nai,
        ] {
            let _ = mutate(&base, &spec(op, 1.0, 17)).unwrap();
        }
        assert_eq!(base, snapshot);
    }

    #[test]
    fn identical_specs_yield_identical_mutants() {
        let base = demo_net(6);
        let s = spec(MutationOperator::Gf, 0.3, 23);
        assert_eq!(mutate(&base, &s).unwrap(), mutate(&base, &s).unwrap());
        let other = spec(MutationOperator::Gf, 0.3, 24);
        assert_ne!(mutate(&base, &s).unwrap(), mutate(&base, &other).unwrap());
    }

    #[test]
    fn ns_without_pairable_layer_is_inapplicable() {
        // Single hidden neuron: no pair to swap.
        let base: Network<f64> = Network::mlp(2, &[1], 2, 9).unwrap();
        let res = mutate(&base, &spec(MutationOperator::Ns, 1.0, 1));
        assert!(matches!(res, Err(Error::OperatorInapplicable(_))));
    }

    #[test]
    fn ws_shuffles_only_selected_neuron_rows() {
        let base = demo_net(7);
        let m = mutate(&base, &spec(MutationOperator::Ws, 1.0, 31)).unwrap();
        // Multisets per row are preserved even though order changed.
        let base_dense: Vec<_> = base.dense_layers().collect();
        let mut_dense: Vec<_> = m.dense_layers().collect();
        for (bd, md) in base_dense.iter().zip(&mut_dense).take(base_dense.len() - 1) {
            for n in 0..bd.out_dim() {
                let mut a: Vec<u64> = bd.row(n).iter().map(|w| w.to_bits()).collect();
                let mut b: Vec<u64> = md.row(n).iter().map(|w| w.to_bits()).collect();
                a.sort_unstable();
                b.sort_unstable();
                assert_eq!(a, b);
            }
        }
        // Final layer untouched.
        assert_eq!(
            base_dense.last().unwrap().weights(),
            mut_dense.last().unwrap().weights()
        );
    }
}
