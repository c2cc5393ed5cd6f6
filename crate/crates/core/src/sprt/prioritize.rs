//! Selection and ordering of adversarial inputs under a fixed mutant budget.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::data::LabeledSet;
use crate::error::{Error, Result};
use crate::mutation::MutantPool;
use crate::scalar::Scalar;
use crate::sprt::{Decision, SprtConfig, SprtState};

/// One input's final record inside a suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub input_id: usize,
    /// Mutant iteration (1-based) at which the decision fired; for inputs
    /// still undecided after `n_max` this is `n_max`.
    pub iteration: usize,
    pub z: usize,
    pub n: usize,
}

impl SuiteEntry {
    pub fn score(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.z as f64 / self.n as f64
        }
    }
}

/// Prioritization result: selected inputs ordered by how early the test
/// chose them (ties: higher score, then lower id), plus the discarded and
/// still-undecided remainder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrioritizedSuite {
    pub selected: Vec<SuiteEntry>,
    pub discarded: Vec<SuiteEntry>,
    pub undecided: Vec<SuiteEntry>,
    pub n_max: usize,
    pub zeta_h: f64,
}

impl PrioritizedSuite {
    pub fn selected_ids(&self) -> Vec<usize> {
        self.selected.iter().map(|e| e.input_id).collect()
    }

    /// CSV export with the generating config echoed as a JSON header line.
    pub fn to_csv(&self, cfg: &SprtConfig) -> Result<String> {
        let header = serde_json::json!({
            "alpha": cfg.alpha,
            "beta": cfg.beta,
            "delta": cfg.delta,
            "zeta_h": self.zeta_h,
            "p_clamp": cfg.p_clamp,
            "n_max": self.n_max,
        });
        let mut out = format!("# {}\n", serde_json::to_string(&header)?);
        out.push_str("input_id,rank,selection_iter,z,n,decision,score\n");
        for (rank, e) in self.selected.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},selected,{}\n",
                e.input_id,
                rank + 1,
                e.iteration,
                e.z,
                e.n,
                e.score()
            ));
        }
        for e in &self.discarded {
            out.push_str(&format!(
                "{},,{},{},{},discarded,{}\n",
                e.input_id,
                e.iteration,
                e.z,
                e.n,
                e.score()
            ));
        }
        for e in &self.undecided {
            out.push_str(&format!(
                "{},,{},{},{},undecided,{}\n",
                e.input_id,
                e.iteration,
                e.z,
                e.n,
                e.score()
            ));
        }
        Ok(out)
    }
}

fn suite_order(a: &SuiteEntry, b: &SuiteEntry) -> Ordering {
    a.iteration
        .cmp(&b.iteration)
        // score descending via cross-multiplied integer compare (exact)
        .then_with(|| (b.z * a.n.max(1)).cmp(&(a.z * b.n.max(1))))
        .then_with(|| a.input_id.cmp(&b.input_id))
}

/// Runs mutants `1..=n_max` in pool order against every not-yet-processed
/// input, stepping each undecided input once per mutant. Decisions carried
/// over from calibration are merged as-is (their trials used the same pool
/// prefix, so iterations are comparable). Inputs undecided after `n_max`
/// land in `undecided`.
pub fn prioritize<F: Scalar>(
    pool: &MutantPool<F>,
    x_adv: &LabeledSet<F>,
    rest_ids: &[usize],
    n_max: usize,
    cfg: &SprtConfig,
    carried: &[SprtState],
) -> Result<PrioritizedSuite> {
    cfg.validate()?;
    if n_max == 0 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    if pool.len() < n_max {
        return Err(Error::Domain(format!(
            "pool holds {} accepted mutants, n_max = {n_max}",
            pool.len()
        )));
    }
    if let Some(&bad) = rest_ids.iter().find(|&&i| i >= x_adv.len()) {
        return Err(Error::Domain(format!(
            "input id {bad} outside the adversarial set"
        )));
    }

    let base = pool.base();
    let base_preds: Vec<usize> = rest_ids
        .iter()
        .map(|&i| base.predict_row(x_adv.row(i)))
        .collect::<Result<_>>()?;
    let mut states: Vec<SprtState> = rest_ids.iter().map(|&i| SprtState::new(i)).collect();

    for iteration in 1..=n_max {
        let mutant = pool.mutant(iteration - 1);
        for (idx, state) in states.iter_mut().enumerate() {
            if state.is_terminal() {
                continue;
            }
            let row = x_adv.row(rest_ids[idx]);
            let differs = mutant.predict_row(row)? != base_preds[idx];
            state.step(differs, cfg, iteration)?;
        }
    }

    let mut selected = Vec::new();
    let mut discarded = Vec::new();
    let mut undecided = Vec::new();
    for state in states.iter().chain(carried) {
        let entry = SuiteEntry {
            input_id: state.input_id,
            iteration: match state.decision {
                Decision::Selected { iteration } | Decision::Discarded { iteration } => iteration,
                Decision::Undecided => n_max,
            },
            z: state.z,
            n: state.n,
        };
        match state.decision {
            Decision::Selected { .. } => selected.push(entry),
            Decision::Discarded { .. } => discarded.push(entry),
            Decision::Undecided => undecided.push(entry),
        }
    }
    selected.sort_by(suite_order);
    discarded.sort_by(suite_order);
    undecided.sort_by(suite_order);

    Ok(PrioritizedSuite {
        selected,
        discarded,
        undecided,
        n_max,
        zeta_h: cfg.zeta_h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synth_blobs;
    use crate::mutation::{MutantPool, MutantSpec, MutationOperator};
    use crate::nn::{sgd_train, Network, TrainConfig};

    fn anchor_cfg() -> SprtConfig {
        SprtConfig::with_zeta(0.10)
    }

    fn blob_pool(n_mutants: usize) -> (MutantPool<f64>, LabeledSet<f64>) {
        let set = synth_blobs(100, 2, 2, 0.08, 3).unwrap();
        let net = Network::mlp(2, &[16], 2, 1).unwrap();
        let tcfg = TrainConfig {
            learning_rate: 0.5,
            epochs: 50,
            batch_size: 32,
            seed: 2,
            l2: 0.0,
        };
        let trained = sgd_train(&net, &set, &tcfg).unwrap();
        let template = MutantSpec {
            operator: MutationOperator::Gf,
            rate: 0.05,
            gf_sigma: 1.0,
            seed: 0,
        };
        let mut pool = MutantPool::new(trained, template, 7, 0.9, set.clone()).unwrap();
        pool.grow(n_mutants).unwrap();
        (pool, set)
    }

    #[test]
    fn empty_input_set_yields_empty_suite() {
        let (pool, _) = blob_pool(30);
        let adv: LabeledSet<f64> = synth_blobs(10, 2, 2, 0.08, 4).unwrap();
        let suite = prioritize(&pool, &adv, &[], 30, &anchor_cfg(), &[]).unwrap();
        assert!(suite.selected.is_empty());
        assert!(suite.discarded.is_empty());
        assert!(suite.undecided.is_empty());
    }

    #[test]
    fn per_input_decisions_are_independent_of_set_order() {
        let (pool, _) = blob_pool(30);
        let adv: LabeledSet<f64> = synth_blobs(40, 2, 2, 0.2, 5).unwrap();
        let ids: Vec<usize> = (0..adv.len()).collect();
        let mut reversed = ids.clone();
        reversed.reverse();

        let a = prioritize(&pool, &adv, &ids, 30, &anchor_cfg(), &[]).unwrap();
        let b = prioritize(&pool, &adv, &reversed, 30, &anchor_cfg(), &[]).unwrap();
        assert_eq!(a.selected, b.selected);
        assert_eq!(a.discarded, b.discarded);
    }

    #[test]
    fn iterations_are_non_decreasing_and_ranks_deterministic() {
        let (pool, _) = blob_pool(40);
        let adv: LabeledSet<f64> = synth_blobs(60, 2, 2, 0.25, 6).unwrap();
        let ids: Vec<usize> = (0..adv.len()).collect();
        let suite = prioritize(&pool, &adv, &ids, 40, &anchor_cfg(), &[]).unwrap();
        let again = prioritize(&pool, &adv, &ids, 40, &anchor_cfg(), &[]).unwrap();
        assert_eq!(suite, again);
        for pair in suite.selected.windows(2) {
            assert!(pair[0].iteration <= pair[1].iteration);
        }
    }

    #[test]
    fn always_differs_selected_early_never_differs_discarded() {
        // Hand-built net: all-neuron NAI mutants flip rows with x0 > 0.5
        // (base logits (x0, 0.5) collapse to (0, 0.5)) and leave rows with
        // x0 < 0.5 alone. The flipping input is selected at iteration 3,
        // the stable one discarded at iteration 27.
        use crate::nn::{Dense, Layer};
        let hidden = Dense::from_parts(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]);
        let out = Dense::from_parts(2, 2, vec![1.0, 0.0, 0.0, 0.0], vec![0.0, 0.5]);
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
        let gate = LabeledSet::new(vec![vec![0.9_f64, 0.0]], None, 2).unwrap();
        let template = MutantSpec {
            operator: MutationOperator::Nai,
            rate: 1.0,
            gf_sigma: 1.0,
            seed: 0,
        };
        let mut pool = MutantPool::new(net, template, 9, 0.0, gate).unwrap();
        pool.grow(30).unwrap();

        let adv = LabeledSet::new(vec![vec![0.9_f64, 0.0], vec![0.1, 0.0]], None, 2).unwrap();
        let suite = prioritize(&pool, &adv, &[0, 1], 30, &anchor_cfg(), &[]).unwrap();
        assert_eq!(suite.selected.len(), 1);
        assert_eq!(suite.selected[0].input_id, 0);
        assert_eq!(suite.selected[0].iteration, 3);
        assert_eq!((suite.selected[0].z, suite.selected[0].n), (3, 3));
        assert_eq!(suite.discarded.len(), 1);
        assert_eq!(suite.discarded[0].input_id, 1);
        assert_eq!(suite.discarded[0].iteration, 27);
        assert!(suite.undecided.is_empty());
    }

    #[test]
    fn carried_calibration_states_are_merged() {
        let (pool, _) = blob_pool(30);
        let adv: LabeledSet<f64> = synth_blobs(20, 2, 2, 0.08, 7).unwrap();
        let carried = vec![
            SprtState {
                input_id: 100,
                n: 3,
                z: 3,
                decision: Decision::Selected { iteration: 3 },
            },
            SprtState {
                input_id: 101,
                n: 27,
                z: 0,
                decision: Decision::Discarded { iteration: 27 },
            },
            SprtState {
                input_id: 102,
                n: 30,
                z: 2,
                decision: Decision::Undecided,
            },
        ];
        let suite = prioritize(&pool, &adv, &[], 30, &anchor_cfg(), &carried).unwrap();
        assert_eq!(suite.selected.len(), 1);
        assert_eq!(suite.selected[0].input_id, 100);
        assert_eq!(suite.discarded[0].input_id, 101);
        assert_eq!(suite.undecided[0].input_id, 102);
    }

    #[test]
    fn csv_has_json_header_and_one_row_per_input() {
        let (pool, _) = blob_pool(30);
        let adv: LabeledSet<f64> = synth_blobs(25, 2, 2, 0.2, 8).unwrap();
        let ids: Vec<usize> = (0..adv.len()).collect();
        let cfg = anchor_cfg();
        let suite = prioritize(&pool, &adv, &ids, 30, &cfg, &[]).unwrap();
        let csv = suite.to_csv(&cfg).unwrap();
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("# {"));
        assert!(header.contains("\"n_max\":30"));
        assert_eq!(
            lines.next().unwrap(),
            "input_id,rank,selection_iter,z,n,decision,score"
        );
        assert_eq!(csv.lines().count(), 2 + adv.len());
    }
}
