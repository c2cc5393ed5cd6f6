//! Experiment configuration: one JSON file reproduces one run bit-exactly.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::attack::AttackKind;
use crate::error::{Error, Result};
use crate::mutation::MutationOperator;

/// Where the benign data comes from and how much of it each split gets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DatasetSpec {
    /// IDX image/label files; a seeded shuffle assigns the first `train`
    /// rows to model training and the next `val` rows to validation.
    Idx {
        images: PathBuf,
        labels: PathBuf,
        train: usize,
        val: usize,
    },
    /// Synthetic corner blobs, generated separately for train and val.
    Blobs {
        train_per_class: usize,
        val_per_class: usize,
        classes: usize,
        dim: usize,
        spread: f64,
    },
}

/// Architecture and optimizer settings for the model under test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub l2: f64,
}

/// Attack strength: searched into the accuracy band, or pinned explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AttackStrength {
    Band,
    Explicit { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSpec {
    pub kind: AttackKind,
    pub strength: AttackStrength,
    /// JSMA feature budget fraction.
    #[serde(default = "default_attack_gamma")]
    pub gamma: f64,
}

fn default_attack_gamma() -> f64 {
    crate::attack::DEFAULT_JSMA_GAMMA
}

/// Surrogate architecture, seed-set size, and build-loop knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateSpec {
    pub hidden: Vec<usize>,
    /// Rows drawn from the training inputs to seed the build.
    pub seed_points: usize,
    pub tau: f64,
    pub patience: usize,
    pub lambda: f64,
    pub max_rounds: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub l2: f64,
}

/// Mutation operator template and gating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationSpec {
    pub operator: MutationOperator,
    pub rate: f64,
    #[serde(default = "default_gf_sigma")]
    pub gf_sigma: f64,
    #[serde(default = "default_min_agreement")]
    pub min_agreement: f64,
}

fn default_gf_sigma() -> f64 {
    1.0
}

fn default_min_agreement() -> f64 {
    0.9
}

/// Sequential-test parameters (the indifference center is calibrated, not
/// configured).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SprtParams {
    #[serde(default = "default_rate")]
    pub alpha: f64,
    #[serde(default = "default_rate")]
    pub beta: f64,
    #[serde(default = "default_rate")]
    pub delta: f64,
    #[serde(default = "default_p_clamp")]
    pub p_clamp: f64,
    #[serde(default = "default_subset_fraction")]
    pub subset_fraction: f64,
    #[serde(default = "default_decided_target")]
    pub decided_target: f64,
    #[serde(default = "default_nmax_ceiling")]
    pub nmax_ceiling: usize,
}

fn default_rate() -> f64 {
    0.05
}

fn default_p_clamp() -> f64 {
    1e-3
}

fn default_subset_fraction() -> f64 {
    0.1
}

fn default_decided_target() -> f64 {
    0.9
}

fn default_nmax_ceiling() -> usize {
    1000
}

impl Default for SprtParams {
    fn default() -> Self {
        Self {
            alpha: default_rate(),
            beta: default_rate(),
            delta: default_rate(),
            p_clamp: default_p_clamp(),
            subset_fraction: default_subset_fraction(),
            decided_target: default_decided_target(),
            nmax_ceiling: default_nmax_ceiling(),
        }
    }
}

/// Which reference prioritizers to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineToggles {
    #[serde(default = "yes")]
    pub random: bool,
    #[serde(default = "yes")]
    pub gini: bool,
    #[serde(default = "yes")]
    pub pe: bool,
    #[serde(default = "yes")]
    pub maxp: bool,
    #[serde(default = "yes")]
    pub nac: bool,
    #[serde(default = "default_nac_threshold")]
    pub nac_threshold: f64,
    #[serde(default = "yes")]
    pub nbc: bool,
    #[serde(default = "yes")]
    pub dsa: bool,
    #[serde(default = "yes")]
    pub kde: bool,
}

fn yes() -> bool {
    true
}

fn default_nac_threshold() -> f64 {
    0.75
}

impl Default for BaselineToggles {
    fn default() -> Self {
        Self {
            random: true,
            gini: true,
            pe: true,
            maxp: true,
            nac: true,
            nac_threshold: default_nac_threshold(),
            nbc: true,
            dsa: true,
            kde: true,
        }
    }
}

/// Fine-tuning settings for the retraining metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrainSpec {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    #[serde(default)]
    pub l2: f64,
}

/// The whole experiment. Everything downstream derives from this plus the
/// global seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    pub attack: AttackSpec,
    /// Fraction of the adversarial set reserved for retraining evaluation.
    #[serde(default = "default_eval_fraction")]
    pub eval_fraction: f64,
    pub surrogate: SurrogateSpec,
    pub mutation: MutationSpec,
    #[serde(default)]
    pub sprt: SprtParams,
    #[serde(default)]
    pub baselines: BaselineToggles,
    pub retrain: RetrainSpec,
    pub seed: u64,
}

fn default_eval_fraction() -> f64 {
    0.1
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        match &self.dataset {
            DatasetSpec::Idx { train, val, .. } => {
                if *train == 0 || *val == 0 {
                    return Err(Error::Config("train and val sizes must be positive".into()));
                }
            }
            DatasetSpec::Blobs {
                train_per_class,
                val_per_class,
                classes,
                dim,
                spread,
            } => {
                if *train_per_class == 0 || *val_per_class == 0 {
                    return Err(Error::Config("per-class counts must be positive".into()));
                }
                if *classes < 2 || *dim < 2 {
                    return Err(Error::Config(
                        "blobs need >= 2 classes and dimensions".into(),
                    ));
                }
                if !spread.is_finite() || *spread <= 0.0 {
                    return Err(Error::Config("spread must be positive".into()));
                }
            }
        }
        if !(self.eval_fraction > 0.0 && self.eval_fraction < 1.0) {
            return Err(Error::Config("eval_fraction must be in (0, 1)".into()));
        }
        if self.surrogate.seed_points == 0 {
            return Err(Error::Config(
                "surrogate needs at least one seed point".into(),
            ));
        }
        if let AttackStrength::Explicit { value } = self.attack.strength {
            if !value.is_finite() {
                return Err(Error::Config(
                    "explicit attack strength must be finite".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}
