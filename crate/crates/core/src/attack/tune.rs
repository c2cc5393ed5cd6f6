//! Attack-strength search for the target accuracy band.

use crate::attack::{fgsm, jsma_batch, AttackConfig, AttackKind};
use crate::data::LabeledSet;
use crate::error::{Error, Result};
use crate::nn::Network;
use crate::scalar::Scalar;

/// Accuracy floor for the adversarial set.
pub const BAND_FLOOR: f64 = 0.40;
/// Required accuracy drop below the benign accuracy.
pub const BAND_DROP: f64 = 0.30;
/// Feature-budget fraction used when tuning JSMA without an explicit gamma.
pub const DEFAULT_JSMA_GAMMA: f64 = 0.1;

const FGSM_GRID_STEP: f64 = 0.05;
const JSMA_GRID_STEP: f64 = 0.1;

/// Searches attack strength (epsilon for FGSM, theta for JSMA) on an
/// ascending grid and returns the weakest config whose adversarial accuracy
/// lands in `[0.40, benign - 0.30]`.
pub fn tune_attack<F: Scalar>(
    net: &Network<F>,
    benign: &LabeledSet<F>,
    kind: AttackKind,
) -> Result<AttackConfig> {
    tune_attack_with(net, benign, kind, DEFAULT_JSMA_GAMMA)
}

/// [`tune_attack`] with an explicit JSMA feature budget.
pub fn tune_attack_with<F: Scalar>(
    net: &Network<F>,
    benign: &LabeledSet<F>,
    kind: AttackKind,
    jsma_gamma: f64,
) -> Result<AttackConfig> {
    let acc_benign = net.accuracy(benign)?;
    let hi = acc_benign - BAND_DROP;
    if acc_benign < 0.70 {
        return Err(Error::Domain(format!(
            "benign accuracy {acc_benign:.3} leaves an empty band: \
             {acc_benign:.2} - {BAND_DROP} < {BAND_FLOOR}"
        )));
    }

    let mut frontier = Vec::new();
    let grid: Vec<f64> = match kind {
        AttackKind::Fgsm => (1..=20).map(|k| f64::from(k) * FGSM_GRID_STEP).collect(),
        AttackKind::Jsma => (1..=10).map(|k| f64::from(k) * JSMA_GRID_STEP).collect(),
    };

    for param in grid {
        let config = match kind {
            AttackKind::Fgsm => AttackConfig::fgsm(param),
            AttackKind::Jsma => AttackConfig::jsma(param, jsma_gamma),
        };
        let adv = match kind {
            AttackKind::Fgsm => fgsm(net, benign, param)?,
            AttackKind::Jsma => jsma_batch(net, benign, &config)?,
        };
        let acc_adv = net.accuracy(&adv.adversarial_labeled()?)?;
        frontier.push((param, acc_adv));
        if acc_adv >= BAND_FLOOR && acc_adv <= hi {
            return Ok(config);
        }
    }
    Err(Error::Tuning {
        lo: BAND_FLOOR,
        hi,
        frontier,
    })
}
