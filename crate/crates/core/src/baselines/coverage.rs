//! Neuron coverage scores: activation coverage above a threshold (NAC) and
//! activations outside training-observed bounds (NBC).

use serde::{Deserialize, Serialize};

use crate::baselines::ActivationProvider;
use crate::data::LabeledSet;
use crate::error::{Error, Result};

/// Fraction of already-scaled activations above `t`.
pub fn nac_from_scaled(scaled: &[f64], t: f64) -> f64 {
    if scaled.is_empty() {
        return 0.0;
    }
    scaled.iter().filter(|v| **v > t).count() as f64 / scaled.len() as f64
}

/// Neuron activation coverage: per-layer min-max scaling of this input's
/// activations, then the fraction of neurons above `t`. A constant layer
/// scales to all zeros.
pub fn nac<P: ActivationProvider>(provider: &P, x: &[f64], t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) || t <= 0.0 {
        return Err(Error::Config("NAC threshold must be in (0, 1)".into()));
    }
    let snap = provider.snapshot(x)?;
    let mut scaled = Vec::new();
    for layer in &snap.layers {
        let lo = layer.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = layer.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            scaled.extend(layer.iter().map(|v| (v - lo) / (hi - lo)));
        } else {
            scaled.extend(std::iter::repeat_n(0.0, layer.len()));
        }
    }
    Ok(nac_from_scaled(&scaled, t))
}

/// Per-neuron activation ranges observed on the training set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronBounds {
    pub lows: Vec<Vec<f64>>,
    pub highs: Vec<Vec<f64>>,
}

/// Records per-neuron (min, max) activations over a reference set.
pub fn activation_bounds<P: ActivationProvider>(
    provider: &P,
    reference: &LabeledSet<f64>,
) -> Result<NeuronBounds> {
    if reference.is_empty() {
        return Err(Error::Domain(
            "bounds need a non-empty reference set".into(),
        ));
    }
    let first = provider.snapshot(reference.row(0))?;
    let mut lows: Vec<Vec<f64>> = first.layers.to_vec();
    let mut highs = lows.clone();
    for i in 1..reference.len() {
        let snap = provider.snapshot(reference.row(i))?;
        for (li, layer) in snap.layers.iter().enumerate() {
            for (ni, v) in layer.iter().enumerate() {
                lows[li][ni] = lows[li][ni].min(*v);
                highs[li][ni] = highs[li][ni].max(*v);
            }
        }
    }
    Ok(NeuronBounds { lows, highs })
}

/// Neuron boundary coverage: fraction of neurons whose activation falls
/// outside the reference bounds.
pub fn nbc<P: ActivationProvider>(provider: &P, x: &[f64], bounds: &NeuronBounds) -> Result<f64> {
    let snap = provider.snapshot(x)?;
    if snap.layers.len() != bounds.lows.len()
        || snap
            .layers
            .iter()
            .zip(&bounds.lows)
            .any(|(l, b)| l.len() != b.len())
    {
        return Err(Error::Config("bounds missing for some neurons".into()));
    }
    let mut total = 0usize;
    let mut outside = 0usize;
    for (li, layer) in snap.layers.iter().enumerate() {
        for (ni, v) in layer.iter().enumerate() {
            total += 1;
            if *v < bounds.lows[li][ni] || *v > bounds.highs[li][ni] {
                outside += 1;
            }
        }
    }
    Ok(outside as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{ActivationSnapshot, NetworkActivations};
    use crate::data::synth_blobs;
    use crate::nn::Network;

    struct FixedProvider {
        layers: Vec<Vec<f64>>,
    }

    impl ActivationProvider for FixedProvider {
        fn snapshot(&self, _x: &[f64]) -> Result<ActivationSnapshot> {
            Ok(ActivationSnapshot {
                probs: vec![0.5, 0.5],
                last_hidden: self.layers[0].clone(),
                layers: self.layers.clone(),
            })
        }
    }

    #[test]
    fn all_zero_activations_have_zero_coverage() {
        let p = FixedProvider {
            layers: vec![vec![0.0; 6], vec![0.0; 2]],
        };
        assert_eq!(nac(&p, &[0.0], 0.75).unwrap(), 0.0);
    }

    #[test]
    fn scaled_ones_have_full_coverage() {
        assert_eq!(nac_from_scaled(&[1.0; 8], 0.75), 1.0);
        assert_eq!(nac_from_scaled(&[0.0; 8], 0.75), 0.0);
    }

    #[test]
    fn training_inputs_stay_within_their_own_bounds() {
        let set: LabeledSet<f64> = synth_blobs(30, 2, 2, 0.1, 3).unwrap();
        let net: Network<f64> = Network::mlp(2, &[8], 2, 4).unwrap();
        let provider = NetworkActivations::new(&net);
        let bounds = activation_bounds(&provider, &set).unwrap();
        for i in 0..set.len() {
            assert_eq!(nbc(&provider, set.row(i), &bounds).unwrap(), 0.0);
        }
    }

    #[test]
    fn out_of_distribution_inputs_can_escape_bounds() {
        let set: LabeledSet<f64> = synth_blobs(30, 2, 2, 0.02, 3).unwrap();
        let net: Network<f64> = Network::mlp(2, &[8], 2, 4).unwrap();
        let provider = NetworkActivations::new(&net);
        let bounds = activation_bounds(&provider, &set).unwrap();
        // Far corner, outside both tight clusters.
        let score = nbc(&provider, &[1.0, 0.0], &bounds).unwrap();
        assert!(
            score > 0.0,
            "expected some out-of-bounds neurons, got {score}"
        );
    }

    #[test]
    fn mismatched_bounds_are_a_config_error() {
        let set: LabeledSet<f64> = synth_blobs(10, 2, 2, 0.1, 3).unwrap();
        let net: Network<f64> = Network::mlp(2, &[8], 2, 4).unwrap();
        let other: Network<f64> = Network::mlp(2, &[5], 2, 4).unwrap();
        let provider = NetworkActivations::new(&net);
        let bounds = activation_bounds(&NetworkActivations::new(&other), &set).unwrap();
        assert!(matches!(
            nbc(&provider, set.row(0), &bounds),
            Err(Error::Config(_))
        ));
    }
}
