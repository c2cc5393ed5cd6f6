//! Calibration: the benign mutation-score threshold and the mutant budget.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::LabeledSet;
use crate::error::{Error, Result};
use crate::mutation::MutantPool;
use crate::scalar::Scalar;
use crate::sprt::{SprtConfig, SprtState};

/// Mutants used to estimate the benign score threshold.
pub const ZETA_POOL_SIZE: usize = 100;
/// Calibration probe floor.
const SUBSET_FLOOR: usize = 30;

/// Mean mutation score of benign validation inputs across exactly 100
/// accepted mutants: the indifference center the SPRT tests against.
pub fn calibrate_zeta<F: Scalar>(pool: &MutantPool<F>, x_val: &LabeledSet<F>) -> Result<f64> {
    if pool.len() != ZETA_POOL_SIZE {
        return Err(Error::Domain(format!(
            "threshold calibration needs exactly {ZETA_POOL_SIZE} accepted mutants, pool has {}",
            pool.len()
        )));
    }
    if x_val.is_empty() {
        return Err(Error::Domain(
            "threshold calibration needs a non-empty benign set".into(),
        ));
    }

    let base_preds = pool.base().predict(x_val)?;
    let mut differ_counts = vec![0usize; x_val.len()];
    for entry in pool.entries() {
        let preds = entry.network.predict(x_val)?;
        for (count, (p, b)) in differ_counts.iter_mut().zip(preds.iter().zip(&base_preds)) {
            if p != b {
                *count += 1;
            }
        }
    }
    let total: f64 = differ_counts
        .iter()
        .map(|&z| z as f64 / ZETA_POOL_SIZE as f64)
        .sum();
    Ok(total / x_val.len() as f64)
}

/// Outcome of the `n_max` search: the budget, the probe subset (by row
/// index into the adversarial set), and each probe input's final state.
#[derive(Debug, Clone)]
pub struct NmaxCalibration {
    pub n_max: usize,
    pub subset_ids: Vec<usize>,
    pub states: Vec<SprtState>,
}

/// Runs mutants in pool order against a seeded probe subset of the
/// adversarial inputs, one mutant per iteration, growing the pool when it
/// runs dry, until `decided_target` of the probes reach a decision. The
/// number of mutants consumed becomes `n_max`. Probe decisions are kept;
/// probes still undecided at the end stay undecided (they are dropped from
/// selection later).
pub fn calibrate_nmax<F: Scalar>(
    pool: &mut MutantPool<F>,
    x_adv: &LabeledSet<F>,
    cfg: &SprtConfig,
    subset_seed: u64,
) -> Result<NmaxCalibration> {
    cfg.validate()?;
    if x_adv.is_empty() {
        return Err(Error::Domain(
            "n_max calibration needs adversarial inputs".into(),
        ));
    }

    let n = x_adv.len();
    let want = ((cfg.subset_fraction * n as f64).ceil() as usize)
        .max(SUBSET_FLOOR)
        .min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(subset_seed);
    let mut subset_ids: Vec<usize> = sample(&mut rng, n, want).into_vec();
    subset_ids.sort_unstable();

    let base = pool.base().clone();
    let base_preds: Vec<usize> = subset_ids
        .iter()
        .map(|&i| base.predict_row(x_adv.row(i)))
        .collect::<Result<_>>()?;
    let mut states: Vec<SprtState> = subset_ids.iter().map(|&i| SprtState::new(i)).collect();

    let mut decided = 0usize;
    for iteration in 1..=cfg.nmax_ceiling {
        while pool.len() < iteration {
            pool.grow(1)?;
        }
        let mutant = pool.mutant(iteration - 1);
        for (idx, state) in states.iter_mut().enumerate() {
            if state.is_terminal() {
                continue;
            }
            let row = x_adv.row(subset_ids[idx]);
            let differs = mutant.predict_row(row)? != base_preds[idx];
            if state.step(differs, cfg, iteration)?.is_terminal() {
                decided += 1;
            }
        }
        if decided as f64 / want as f64 >= cfg.decided_target {
            return Ok(NmaxCalibration {
                n_max: iteration,
                subset_ids,
                states,
            });
        }
    }
    Err(Error::CalibrationFailed {
        decided: decided as f64 / want as f64,
        target: cfg.decided_target,
        ceiling: cfg.nmax_ceiling,
    })
}
