//! Evaluation metrics for prioritized suites: fault detection rate, APFD
//! (raw and normalized), fault-type RAUC, and retraining deltas.

use std::collections::{BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::data::LabeledSet;
use crate::error::{Error, Result};
use crate::nn::{sgd_train, Network, TrainConfig};
use crate::scalar::Scalar;

/// One evaluated input: what the model should have said and what it said.
/// A fault is a misclassification; its type is the ordered label pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultRecord {
    pub input_id: usize,
    pub true_label: usize,
    pub predicted: usize,
}

impl FaultRecord {
    pub fn is_fault(&self) -> bool {
        self.predicted != self.true_label
    }

    /// `(true -> predicted)`, defined only for faults.
    pub fn fault_type(&self) -> Option<(usize, usize)> {
        self.is_fault().then_some((self.true_label, self.predicted))
    }
}

/// Builds records by aligning ids, ground truth, and model predictions.
pub fn fault_records(
    ids: &[usize],
    true_labels: &[usize],
    predictions: &[usize],
) -> Result<Vec<FaultRecord>> {
    if ids.len() != true_labels.len() || ids.len() != predictions.len() {
        return Err(Error::Shape(
            "ids, labels, and predictions must align".into(),
        ));
    }
    Ok(ids
        .iter()
        .zip(true_labels)
        .zip(predictions)
        .map(|((&input_id, &true_label), &predicted)| FaultRecord {
            input_id,
            true_label,
            predicted,
        })
        .collect())
}

/// Distinct fault types present in `records`.
pub fn fault_types(records: &[FaultRecord]) -> BTreeSet<(usize, usize)> {
    records.iter().filter_map(FaultRecord::fault_type).collect()
}

/// Fault detection rate of a selected subset: faults inside the subset over
/// `min(|S|, |F|)`, where `faults` and `total_faults` describe the entire
/// evaluated dataset.
pub fn fdr(selected_ids: &[usize], faults: &[FaultRecord], total_faults: usize) -> Result<f64> {
    if selected_ids.is_empty() {
        return Err(Error::Domain(
            "FDR of an empty selection is undefined".into(),
        ));
    }
    if total_faults == 0 {
        return Err(Error::Domain(
            "FDR needs at least one fault in the dataset".into(),
        ));
    }
    let fault_ids: HashSet<usize> = faults
        .iter()
        .filter(|r| r.is_fault())
        .map(|r| r.input_id)
        .collect();
    let hits = selected_ids
        .iter()
        .filter(|id| fault_ids.contains(id))
        .count();
    Ok(hits as f64 / selected_ids.len().min(total_faults) as f64)
}

fn fault_positions(permutation_ids: &[usize], records: &[FaultRecord]) -> Result<Vec<usize>> {
    let record_ids: HashSet<usize> = records.iter().map(|r| r.input_id).collect();
    if record_ids.len() != records.len() {
        return Err(Error::Domain("duplicate input ids in fault records".into()));
    }
    let perm_set: HashSet<usize> = permutation_ids.iter().copied().collect();
    if perm_set.len() != permutation_ids.len() || perm_set != record_ids {
        return Err(Error::Domain(
            "permutation must cover the evaluated set exactly once".into(),
        ));
    }
    let fault_ids: HashSet<usize> = records
        .iter()
        .filter(|r| r.is_fault())
        .map(|r| r.input_id)
        .collect();
    Ok(permutation_ids
        .iter()
        .enumerate()
        .filter_map(|(pos, id)| fault_ids.contains(id).then_some(pos + 1))
        .collect())
}

/// Average percentage of fault detection for a permutation:
/// `raw = 1 - sum(o_i) / (k n) + 1 / (2n)`, plus the normalization between
/// the faults-last minimum and faults-first maximum. When every test is a
/// fault the bounds coincide and the normalized value is 1.
pub fn apfd(permutation_ids: &[usize], records: &[FaultRecord]) -> Result<(f64, f64)> {
    let positions = fault_positions(permutation_ids, records)?;
    let n = permutation_ids.len();
    let k = positions.len();
    if k == 0 {
        return Err(Error::Domain("APFD needs at least one fault".into()));
    }
    let n_f = n as f64;
    let k_f = k as f64;
    let raw_of = |sum: f64| 1.0 - sum / (k_f * n_f) + 1.0 / (2.0 * n_f);

    let raw = raw_of(positions.iter().sum::<usize>() as f64);
    let best = raw_of((1..=k).sum::<usize>() as f64);
    let worst = raw_of(((n - k + 1)..=n).sum::<usize>() as f64);
    let normalized = if best > worst {
        (raw - worst) / (best - worst)
    } else {
        1.0
    };
    Ok((raw, normalized))
}

/// Ratio of the cumulative-unique-fault-type curve to the ideal curve
/// `min(i, T)`, with `T` counted from the evaluated set itself.
pub fn rauc(permutation_ids: &[usize], records: &[FaultRecord]) -> Result<f64> {
    let record_ids: HashSet<usize> = records.iter().map(|r| r.input_id).collect();
    let perm_set: HashSet<usize> = permutation_ids.iter().copied().collect();
    if perm_set.len() != permutation_ids.len() || perm_set != record_ids {
        return Err(Error::Domain(
            "permutation must cover the evaluated set exactly once".into(),
        ));
    }
    let total_types = fault_types(records).len();
    if total_types == 0 {
        return Err(Error::Domain("RAUC needs at least one fault type".into()));
    }

    let type_of: std::collections::HashMap<usize, (usize, usize)> = records
        .iter()
        .filter_map(|r| r.fault_type().map(|t| (r.input_id, t)))
        .collect();
    let mut seen: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut cumulative = 0usize;
    let mut ideal = 0usize;
    for (i, id) in permutation_ids.iter().enumerate() {
        if let Some(t) = type_of.get(id) {
            seen.insert(*t);
        }
        cumulative += seen.len();
        ideal += (i + 1).min(total_types);
    }
    Ok(cumulative as f64 / ideal as f64)
}

/// Fine-tunes a copy of the model on the selected inputs (with their true
/// labels) and reports the accuracy change on a disjoint evaluation set.
#[allow(clippy::too_many_arguments)]
pub fn retrain_eval<F: Scalar>(
    model: &Network<F>,
    selected: &LabeledSet<F>,
    selected_ids: &[usize],
    eval_set: &LabeledSet<F>,
    eval_ids: &[usize],
    cfg: &TrainConfig,
) -> Result<f64> {
    if selected.is_empty() {
        return Err(Error::Domain(
            "retraining needs a non-empty selected set".into(),
        ));
    }
    if selected_ids.len() != selected.len() || eval_ids.len() != eval_set.len() {
        return Err(Error::Shape("id lists must align with their sets".into()));
    }
    let eval_id_set: HashSet<usize> = eval_ids.iter().copied().collect();
    if selected_ids.iter().any(|id| eval_id_set.contains(id)) {
        return Err(Error::Domain(
            "selected and evaluation sets must be disjoint".into(),
        ));
    }
    let before = model.accuracy(eval_set)?;
    let retrained = sgd_train(model, selected, cfg)?;
    let after = retrained.accuracy(eval_set)?;
    Ok(after - before)
}

/// One row of the method-comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub k: usize,
    pub fdr: f64,
    pub apfd_raw: f64,
    pub apfd_norm: f64,
    pub rauc: f64,
    pub retrain_delta: Option<f64>,
    pub seed: u64,
}

impl EvalReport {
    pub fn csv_header() -> &'static str {
        "method,k,fdr,apfd_raw,apfd_norm,rauc,retrain_delta,seed"
    }

    pub fn csv_row(&self) -> String {
        let delta = self.retrain_delta.map_or(String::new(), |d| d.to_string());
        format!(
            "{},{},{},{},{},{},{},{}",
            self.method,
            self.k,
            self.fdr,
            self.apfd_raw,
            self.apfd_norm,
            self.rauc,
            delta,
            self.seed
        )
    }

    /// Range checks: rates in `[0,1]`, delta in `[-1,1]`.
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("fdr", self.fdr),
            ("apfd_raw", self.apfd_raw),
            ("apfd_norm", self.apfd_norm),
            ("rauc", self.rauc),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Domain(format!("{name} = {v} outside [0, 1]")));
            }
        }
        if let Some(d) = self.retrain_delta {
            if !(-1.0..=1.0).contains(&d) {
                return Err(Error::Domain(format!(
                    "retrain_delta = {d} outside [-1, 1]"
                )));
            }
        }
        Ok(())
    }
}
