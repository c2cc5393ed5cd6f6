//! Adversarial test-set generation against the model under test.
//!
//! FGSM takes one signed-gradient step per input; JSMA greedily perturbs the
//! most salient features one at a time. `tune_attack` searches the attack
//! strength until adversarial accuracy lands in the target band: at least
//! 0.40 absolute and at least 0.30 below benign accuracy.

mod fgsm;
mod jsma;
mod tune;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{load_idx, load_idx_images, save_idx, LabeledSet};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use fgsm::fgsm;
pub use jsma::{jsma, jsma_batch, JsmaOutcome};
pub use tune::{tune_attack, tune_attack_with, DEFAULT_JSMA_GAMMA};

/// Which attack to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    Fgsm,
    Jsma,
}

/// Attack parameters. `epsilon` drives FGSM; `theta` (signed) and `gamma`
/// (fraction of features that may be touched) drive JSMA.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub kind: AttackKind,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_gamma() -> f64 {
    DEFAULT_JSMA_GAMMA
}

impl AttackConfig {
    pub fn fgsm(epsilon: f64) -> Self {
        Self {
            kind: AttackKind::Fgsm,
            epsilon,
            theta: 0.0,
            gamma: default_gamma(),
            seed: 0,
        }
    }

    pub fn jsma(theta: f64, gamma: f64) -> Self {
        Self {
            kind: AttackKind::Jsma,
            epsilon: 0.0,
            theta,
            gamma,
            seed: 0,
        }
    }

    /// Checks parameter ranges against the feature dimension `d`. The JSMA
    /// budget `ceil(gamma * d)` must cover at least one feature.
    pub fn validate(&self, d: usize) -> Result<()> {
        match self.kind {
            AttackKind::Fgsm => {
                if !self.epsilon.is_finite() || self.epsilon < 0.0 || self.epsilon > 1.0 {
                    return Err(Error::Config("epsilon must be in [0, 1]".into()));
                }
            }
            AttackKind::Jsma => {
                if !self.theta.is_finite() || self.theta.abs() > 1.0 {
                    return Err(Error::Config("theta must be in [-1, 1]".into()));
                }
                if !self.gamma.is_finite() || self.gamma <= 0.0 || self.gamma > 1.0 {
                    return Err(Error::Config("gamma must be in (0, 1]".into()));
                }
                if (self.gamma * d as f64).ceil() < 1.0 {
                    return Err(Error::Config(
                        "gamma * d must allow at least one feature".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Originals with ground truth, row-aligned adversarials, the generating
/// config, and per-row fooled flags.
#[derive(Debug, Clone, PartialEq)]
pub struct AdvSet<F> {
    pub originals: LabeledSet<F>,
    pub adversarials: LabeledSet<F>,
    pub config: AttackConfig,
    pub fooled: Vec<bool>,
}

impl<F: Scalar> AdvSet<F> {
    pub fn new(
        originals: LabeledSet<F>,
        adversarials: LabeledSet<F>,
        config: AttackConfig,
        fooled: Vec<bool>,
    ) -> Result<Self> {
        if originals.labels().is_none() {
            return Err(Error::Domain(
                "adversarial originals need ground truth".into(),
            ));
        }
        if originals.len() != adversarials.len() || originals.dim() != adversarials.dim() {
            return Err(Error::Shape(
                "originals and adversarials must align row-wise".into(),
            ));
        }
        if fooled.len() != originals.len() {
            return Err(Error::Shape("fooled flags must align row-wise".into()));
        }
        Ok(Self {
            originals,
            adversarials,
            config,
            fooled,
        })
    }

    pub fn len(&self) -> usize {
        self.originals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.originals.is_empty()
    }

    /// Adversarial rows with the originals' ground-truth labels attached.
    pub fn adversarial_labeled(&self) -> Result<LabeledSet<F>> {
        self.adversarials.with_labels(
            self.originals
                .labels()
                .expect("validated at construction")
                .to_vec(),
        )
    }
}

#[derive(Serialize, Deserialize)]
struct AdvSidecar {
    config: AttackConfig,
    num_classes: usize,
    fooled: Vec<bool>,
}

/// Persists an adversarial set as paired IDX files plus a JSON sidecar:
/// `<stem>.originals.images.idx`, `<stem>.originals.labels.idx`,
/// `<stem>.adversarial.images.idx`, `<stem>.meta.json`.
pub fn save_adv_set<F: Scalar>(adv: &AdvSet<F>, dir: &Path, stem: &str) -> Result<()> {
    fs::create_dir_all(dir)?;
    save_idx(
        &adv.originals,
        &dir.join(format!("{stem}.originals.images.idx")),
        Some(&dir.join(format!("{stem}.originals.labels.idx"))),
    )?;
    save_idx(
        &adv.adversarials,
        &dir.join(format!("{stem}.adversarial.images.idx")),
        None,
    )?;
    let sidecar = AdvSidecar {
        config: adv.config.clone(),
        num_classes: adv.originals.num_classes(),
        fooled: adv.fooled.clone(),
    };
    fs::write(
        dir.join(format!("{stem}.meta.json")),
        serde_json::to_string_pretty(&sidecar)?,
    )?;
    Ok(())
}

/// Loads what [`save_adv_set`] wrote. Features come back quantized to the
/// byte grid, which is the persistence contract.
pub fn load_adv_set<F: Scalar>(dir: &Path, stem: &str) -> Result<AdvSet<F>> {
    let meta_path = dir.join(format!("{stem}.meta.json"));
    let sidecar: AdvSidecar = serde_json::from_str(&fs::read_to_string(&meta_path)?)?;
    let originals = load_idx::<F>(
        &dir.join(format!("{stem}.originals.images.idx")),
        &dir.join(format!("{stem}.originals.labels.idx")),
    )?
    .with_num_classes(sidecar.num_classes)?;
    let adversarials = load_idx_images::<F>(
        &dir.join(format!("{stem}.adversarial.images.idx")),
        sidecar.num_classes,
    )?;
    AdvSet::new(originals, adversarials, sidecar.config, sidecar.fooled)
}

/// Explicit zero-at-zero sign, shared by the gradient attacks:
/// `sign(0) = 0`, unlike `f64::signum`.
pub(crate) fn sign<F: Scalar>(v: F) -> F {
    if v > F::zero() {
        F::one()
    } else if v < F::zero() {
        -F::one()
    } else {
        F::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_is_zero_at_zero() {
        assert_eq!(sign(0.0_f64), 0.0);
        assert_eq!(sign(3.5_f64), 1.0);
        assert_eq!(sign(-0.2_f64), -1.0);
    }

    #[test]
    fn misaligned_adv_set_is_rejected() {
        let orig = LabeledSet::new(vec![vec![0.1_f64, 0.2]], Some(vec![0]), 2).unwrap();
        let adv = LabeledSet::new(vec![vec![0.1_f64, 0.2], vec![0.3, 0.4]], None, 2).unwrap();
        assert!(AdvSet::new(orig, adv, AttackConfig::fgsm(0.1), vec![false]).is_err());
    }

    #[test]
    fn adv_set_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let orig = LabeledSet::new(
            vec![vec![0.0_f64, 1.0], vec![128.0 / 255.0, 64.0 / 255.0]],
            Some(vec![0, 1]),
            2,
        )
        .unwrap();
        let adv_rows = LabeledSet::new(vec![vec![0.2_f64, 0.8], vec![0.6, 0.2]], None, 2).unwrap();
        let adv = AdvSet::new(orig, adv_rows, AttackConfig::fgsm(0.2), vec![true, false]).unwrap();
        save_adv_set(&adv, dir.path(), "t").unwrap();
        let back: AdvSet<f64> = load_adv_set(dir.path(), "t").unwrap();
        assert_eq!(back.config, adv.config);
        assert_eq!(back.fooled, adv.fooled);
        assert_eq!(back.len(), 2);
        // byte-grid values survive exactly
        assert_eq!(back.originals.row(1), adv.originals.row(1));
    }
}
