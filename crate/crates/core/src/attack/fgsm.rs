//! Fast gradient sign method: `x' = clip(x + eps * sign(grad_x loss(x, y)))`.

use crate::attack::{sign, AdvSet, AttackConfig};
use crate::data::LabeledSet;
use crate::error::{Error, Result};
use crate::nn::{input_gradient, GradTarget, Network};
use crate::scalar::Scalar;

/// One signed-gradient step per input, clipped to the `[0,1]` box. Rows stay
/// aligned with the originals; `fooled[i]` records whether the model's
/// prediction moved off the true label.
pub fn fgsm<F: Scalar>(net: &Network<F>, set: &LabeledSet<F>, epsilon: f64) -> Result<AdvSet<F>> {
    let config = AttackConfig::fgsm(epsilon);
    config.validate(set.dim())?;
    let labels = set
        .labels()
        .ok_or_else(|| Error::Domain("FGSM needs ground-truth labels".into()))?;
    let eps = F::from_f64_lossy(epsilon);

    let mut rows = Vec::with_capacity(set.len());
    let mut fooled = Vec::with_capacity(set.len());
    for (i, &y) in labels.iter().enumerate() {
        let x = set.row(i);
        let grad = input_gradient(net, x, y, GradTarget::Loss)?;
        let adv: Vec<F> = x
            .iter()
            .zip(&grad)
            .map(|(&xi, &g)| (xi + eps * sign(g)).max(F::zero()).min(F::one()))
            .collect();
        fooled.push(net.predict_row(&adv)? != y);
        rows.push(adv);
    }
    let adversarials = LabeledSet::new(rows, None, set.num_classes())?;
    AdvSet::new(set.clone(), adversarials, config, fooled)
}
