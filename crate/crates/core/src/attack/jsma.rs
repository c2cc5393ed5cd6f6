//! Saliency-map attack, single-feature-per-step variant.
//!
//! Each step targets the currently most likely wrong class and bumps the one
//! untouched feature whose logit-gap gradient most favors that class.

use crate::attack::{AdvSet, AttackConfig, AttackKind};
use crate::data::LabeledSet;
use crate::error::{Error, Result};
use crate::nn::{input_gradient, GradTarget, Network};
use crate::scalar::Scalar;

/// Result of attacking a single input.
#[derive(Debug, Clone, PartialEq)]
pub struct JsmaOutcome<F> {
    pub adversarial: Vec<F>,
    pub fooled: bool,
    /// Distinct features perturbed; never exceeds `ceil(gamma * d)`.
    pub touched: usize,
}

/// Attacks one input. Stops on misclassification (w.r.t. `y_true`), on
/// exhausting the feature budget, or when no eligible feature improves the
/// target class. Deterministic: saliency ties break toward the lowest
/// feature index.
pub fn jsma<F: Scalar>(
    net: &Network<F>,
    x: &[F],
    y_true: usize,
    cfg: &AttackConfig,
) -> Result<JsmaOutcome<F>> {
    if cfg.kind != AttackKind::Jsma {
        return Err(Error::Config("jsma called with a non-JSMA config".into()));
    }
    cfg.validate(x.len())?;
    if y_true >= net.num_classes() {
        return Err(Error::Domain(format!(
            "label {y_true} out of range for {} classes",
            net.num_classes()
        )));
    }

    let d = x.len();
    let budget = (cfg.gamma * d as f64).ceil() as usize;
    let theta = F::from_f64_lossy(cfg.theta);
    let mut adv: Vec<F> = x.to_vec();
    let mut touched = vec![false; d];
    let mut touched_count = 0usize;

    if cfg.theta == 0.0 {
        let fooled = net.predict_row(&adv)? != y_true;
        return Ok(JsmaOutcome {
            adversarial: adv,
            fooled,
            touched: 0,
        });
    }

    loop {
        let probs = net.forward_row(&adv)?;
        let pred = crate::nn::argmax(&probs);
        if pred != y_true {
            return Ok(JsmaOutcome {
                adversarial: adv,
                fooled: true,
                touched: touched_count,
            });
        }
        if touched_count >= budget {
            return Ok(JsmaOutcome {
                adversarial: adv,
                fooled: false,
                touched: touched_count,
            });
        }

        // Most likely wrong class right now.
        let mut target = if y_true == 0 { 1 } else { 0 };
        for c in 0..net.num_classes() {
            if c != y_true && probs[c] > probs[target] {
                target = c;
            }
        }

        let g_target = input_gradient(net, &adv, target, GradTarget::Logit)?;
        let g_true = input_gradient(net, &adv, y_true, GradTarget::Logit)?;

        // Moving feature i by theta changes (logit_target - logit_true) by
        // roughly theta * (g_target[i] - g_true[i]); pick the best positive
        // move among untouched, still-movable features.
        let mut best: Option<(usize, f64)> = None;
        for i in 0..d {
            if touched[i] {
                continue;
            }
            let movable = if cfg.theta > 0.0 {
                adv[i] < F::one()
            } else {
                adv[i] > F::zero()
            };
            if !movable {
                continue;
            }
            let gain = cfg.theta * (g_target[i] - g_true[i]).to_f64_lossy();
            if gain > 0.0 && best.is_none_or(|(_, g)| gain > g) {
                best = Some((i, gain));
            }
        }
        let Some((i, _)) = best else {
            return Ok(JsmaOutcome {
                adversarial: adv,
                fooled: false,
                touched: touched_count,
            });
        };

        adv[i] = (adv[i] + theta).max(F::zero()).min(F::one());
        touched[i] = true;
        touched_count += 1;
    }
}

/// Attacks every row of `set`, assembling the aligned adversarial set.
pub fn jsma_batch<F: Scalar>(
    net: &Network<F>,
    set: &LabeledSet<F>,
    cfg: &AttackConfig,
) -> Result<AdvSet<F>> {
    let labels = set
        .labels()
        .ok_or_else(|| Error::Domain("JSMA needs ground-truth labels".into()))?;
    let mut rows = Vec::with_capacity(set.len());
    let mut fooled = Vec::with_capacity(set.len());
    for (i, &y) in labels.iter().enumerate() {
        let outcome = jsma(net, set.row(i), y, cfg)?;
        rows.push(outcome.adversarial);
        fooled.push(outcome.fooled);
    }
    let adversarials = LabeledSet::new(rows, None, set.num_classes())?;
    AdvSet::new(set.clone(), adversarials, cfg.clone(), fooled)
}
