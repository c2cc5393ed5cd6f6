//! Reference prioritizers: softmax-confidence scores, neuron-coverage
//! scores, surprise-adequacy scores, and random ranking.
//!
//! White-box baselines read the model under test only through
//! [`ActivationProvider`]. The selection method itself never touches this
//! interface — its modules see labels alone, which a test below enforces
//! against the source tree.

mod confidence;
mod coverage;
mod surprise;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{softmax, Layer, Network};

pub use confidence::{gini, maxp, pe};
pub use coverage::{activation_bounds, nac, nac_from_scaled, nbc, NeuronBounds};
pub use surprise::{dsa, kde_score, TrainRefs};

/// Everything the white-box baselines may observe about one input.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSnapshot {
    /// Softmax output.
    pub probs: Vec<f64>,
    /// Activations entering the final dense layer.
    pub last_hidden: Vec<f64>,
    /// Post-activation values per dense layer; the final entry holds the
    /// pre-softmax logits.
    pub layers: Vec<Vec<f64>>,
}

/// White-box view of the model under test.
pub trait ActivationProvider {
    fn snapshot(&self, x: &[f64]) -> Result<ActivationSnapshot>;
}

/// The standard provider over a trained network.
pub struct NetworkActivations<'a> {
    net: &'a Network<f64>,
}

impl<'a> NetworkActivations<'a> {
    pub fn new(net: &'a Network<f64>) -> Self {
        Self { net }
    }
}

impl ActivationProvider for NetworkActivations<'_> {
    fn snapshot(&self, x: &[f64]) -> Result<ActivationSnapshot> {
        let layers = self.net.layers();
        let mut acts: Vec<Vec<f64>> = Vec::with_capacity(layers.len() + 1);
        acts.push(x.to_vec());
        if x.len() != self.net.input_dim() {
            return Err(Error::Shape(format!(
                "input has {} features, network expects {}",
                x.len(),
                self.net.input_dim()
            )));
        }
        for layer in layers {
            let next = layer.forward(acts.last().expect("never empty"));
            acts.push(next);
        }

        let dense_idx: Vec<usize> = layers
            .iter()
            .enumerate()
            .filter_map(|(i, l)| matches!(l, Layer::Dense(_)).then_some(i))
            .collect();
        let per_dense: Vec<Vec<f64>> = dense_idx
            .iter()
            .map(|&li| {
                if matches!(layers.get(li + 1), Some(Layer::Relu)) {
                    acts[li + 2].clone()
                } else {
                    acts[li + 1].clone()
                }
            })
            .collect();
        let final_dense = *dense_idx.last().expect("network has a dense layer");
        let logits = acts[final_dense + 1].clone();

        Ok(ActivationSnapshot {
            probs: softmax(&logits),
            last_hidden: acts[final_dense].clone(),
            layers: per_dense,
        })
    }
}

/// Whether large or small scores should be tested first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherFirst,
    LowerFirst,
}

/// Inputs sorted most-fault-likely first, with the scores that put them
/// there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub ids: Vec<usize>,
    pub scores: Vec<f64>,
    pub direction: Direction,
}

impl RankedList {
    pub fn top_k(&self, k: usize) -> Vec<usize> {
        self.ids.iter().take(k).copied().collect()
    }

    /// CSV in the shared suite schema; the first `k` rows are flagged
    /// selected.
    pub fn to_csv(&self, k: usize, header: &serde_json::Value) -> Result<String> {
        let mut out = format!("# {}\n", serde_json::to_string(header)?);
        out.push_str("input_id,rank,selection_iter,z,n,decision,score\n");
        for (i, (id, score)) in self.ids.iter().zip(&self.scores).enumerate() {
            let decision = if i < k { "selected" } else { "unselected" };
            out.push_str(&format!("{},{},,,,{},{}\n", id, i + 1, decision, score));
        }
        Ok(out)
    }
}

/// Stable score ranking; ties break toward the lower input id.
pub fn rank_by(ids: &[usize], scores: &[f64], direction: Direction) -> Result<RankedList> {
    if ids.is_empty() {
        return Err(Error::Domain("nothing to rank".into()));
    }
    if ids.len() != scores.len() {
        return Err(Error::Shape(format!(
            "{} ids for {} scores",
            ids.len(),
            scores.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::Domain("scores must not be NaN".into()));
    }
    let mut order: Vec<usize> = (0..ids.len()).collect();
    order.sort_by(|&a, &b| {
        let primary = match direction {
            Direction::HigherFirst => scores[b].partial_cmp(&scores[a]),
            Direction::LowerFirst => scores[a].partial_cmp(&scores[b]),
        }
        .expect("NaN rejected above");
        primary.then_with(|| ids[a].cmp(&ids[b]))
    });
    Ok(RankedList {
        ids: order.iter().map(|&i| ids[i]).collect(),
        scores: order.iter().map(|&i| scores[i]).collect(),
        direction,
    })
}

/// Seeded uniform shuffle: the random baseline.
pub fn random_rank(ids: &[usize], seed: u64) -> Result<RankedList> {
    if ids.is_empty() {
        return Err(Error::Domain("nothing to rank".into()));
    }
    let mut shuffled = ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);
    let scores = vec![0.0; shuffled.len()];
    Ok(RankedList {
        ids: shuffled,
        scores,
        direction: Direction::HigherFirst,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_by_descending_with_id_tiebreak() {
        let list = rank_by(&[10, 11, 12], &[3.0, 1.0, 2.0], Direction::HigherFirst).unwrap();
        assert_eq!(list.ids, vec![10, 12, 11]);
        let tied = rank_by(&[5, 3, 4], &[1.0, 1.0, 1.0], Direction::HigherFirst).unwrap();
        assert_eq!(tied.ids, vec![3, 4, 5]);
    }

    #[test]
    fn single_input_is_a_singleton() {
        let list = random_rank(&[42], 7).unwrap();
        assert_eq!(list.ids, vec![42]);
    }

    #[test]
    fn random_rank_is_seed_deterministic() {
        let ids: Vec<usize> = (0..50).collect();
        assert_eq!(random_rank(&ids, 9).unwrap(), random_rank(&ids, 9).unwrap());
        assert_ne!(
            random_rank(&ids, 9).unwrap().ids,
            random_rank(&ids, 10).unwrap().ids
        );
    }

    #[test]
    fn snapshot_exposes_probs_hidden_and_layers() {
        let net: Network<f64> = Network::mlp(3, &[4], 2, 5).unwrap();
        let provider = NetworkActivations::new(&net);
        let snap = provider.snapshot(&[0.1, 0.5, 0.9]).unwrap();
        assert_eq!(snap.probs.len(), 2);
        assert!((snap.probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert_eq!(snap.last_hidden.len(), 4);
        assert_eq!(snap.layers.len(), 2);
        assert_eq!(snap.layers[0].len(), 4);
        // hidden activations are post-ReLU
        assert!(snap.layers[0].iter().all(|v| *v >= 0.0));
        assert_eq!(snap.layers[1].len(), 2);
    }

    #[test]
    fn selection_modules_never_touch_the_whitebox_interface() {
        // Interface segregation, checked against the source tree: the
        // label-only modules must not reference activation access.
        for (name, src) in [
            ("surrogate", include_str!("../surrogate/mod.rs")),
            (
                "mutation/operators",
                include_str!("../mutation/operators.rs"),
            ),
            ("mutation/pool", include_str!("../mutation/pool.rs")),
            ("sprt", include_str!("../sprt/mod.rs")),
            ("sprt/calibrate", include_str!("../sprt/calibrate.rs")),
            ("sprt/prioritize", include_str!("../sprt/prioritize.rs")),
        ] {
            assert!(
                !src.contains("ActivationProvider") && !src.contains("baselines"),
                "{name} reaches into the white-box interface"
            );
        }
    }
}
