//! Shared fixtures for the integration and acceptance suites.
//!
//! Each test target compiles its own copy, so not every item is used
//! everywhere.
#![allow(dead_code)]

use lbt_core::pipeline::{
    AttackSpec, AttackStrength, BaselineToggles, DatasetSpec, ExperimentConfig, ModelSpec,
    MutationSpec, RetrainSpec, SprtParams, SurrogateSpec,
};
use lbt_core::LabeledSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIDE: usize = 28;
const IMG_D: usize = SIDE * SIDE;
const IMG_CLASSES: usize = 10;

/// The standard synthetic-blobs experiment: a 3-class planar problem with
/// enough margin spread that attack strength and mutation sensitivity vary
/// across inputs.
pub fn blobs_config(seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        dataset: DatasetSpec::Blobs {
            train_per_class: 150,
            val_per_class: 166,
            classes: 3,
            dim: 2,
            spread: 0.12,
        },
        model: ModelSpec {
            hidden: vec![16],
            learning_rate: 0.5,
            epochs: 60,
            batch_size: 32,
            l2: 0.0,
        },
        attack: AttackSpec {
            kind: lbt_core::attack::AttackKind::Fgsm,
            strength: AttackStrength::Band,
            gamma: 0.1,
        },
        eval_fraction: 0.1,
        surrogate: SurrogateSpec {
            hidden: vec![8],
            seed_points: 50,
            tau: 0.95,
            patience: 5,
            lambda: 0.1,
            max_rounds: 20,
            learning_rate: 0.5,
            epochs: 20,
            batch_size: 16,
            l2: 0.0,
        },
        mutation: MutationSpec {
            operator: lbt_core::mutation::MutationOperator::Gf,
            rate: 0.4,
            gf_sigma: 1.0,
            min_agreement: 0.9,
        },
        sprt: SprtParams::default(),
        baselines: BaselineToggles::default(),
        retrain: RetrainSpec {
            learning_rate: 0.05,
            epochs: 10,
            batch_size: 32,
            l2: 0.0,
        },
        seed,
    }
}

fn class_template(c: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xD16175 + c as u64);
    let mut img = vec![0.0f64; IMG_D];
    for _ in 0..3 {
        let cx = rng.gen_range(6.0..22.0);
        let cy = rng.gen_range(6.0..22.0);
        let s = rng.gen_range(2.5..4.5);
        for y in 0..SIDE {
            for x in 0..SIDE {
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                img[y * SIDE + x] += (-d2 / (2.0 * s * s)).exp();
            }
        }
    }
    let max = img.iter().cloned().fold(f64::MIN, f64::max);
    img.iter_mut().for_each(|v| *v /= max);
    img
}

/// 28x28 ten-class images in the MNIST value range: each sample blends its
/// class template with a random other class (graded difficulty) plus pixel
/// noise, so decision margins span from confident to borderline.
pub fn synth_images(n: usize, seed: u64) -> LabeledSet {
    let templates: Vec<Vec<f64>> = (0..IMG_CLASSES).map(class_template).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let c = rng.gen_range(0..IMG_CLASSES);
        let mut other = rng.gen_range(0..IMG_CLASSES);
        while other == c {
            other = rng.gen_range(0..IMG_CLASSES);
        }
        let mix: f64 = rng.gen_range(0.0..0.45);
        let row: Vec<f64> = (0..IMG_D)
            .map(|i| {
                let v = (1.0 - mix) * templates[c][i]
                    + mix * templates[other][i]
                    + 0.15 * rng.sample::<f64, _>(rand_distr::StandardNormal);
                v.clamp(0.0, 1.0)
            })
            .collect();
        rows.push(row);
        ys.push(c);
    }
    LabeledSet::new(rows, Some(ys), IMG_CLASSES).unwrap()
}

/// Experiment over IDX image files at the 2000-train / 500-val scale.
pub fn image_config(
    images: std::path::PathBuf,
    labels: std::path::PathBuf,
    seed: u64,
) -> ExperimentConfig {
    ExperimentConfig {
        dataset: DatasetSpec::Idx {
            images,
            labels,
            train: 2000,
            val: 500,
        },
        model: ModelSpec {
            hidden: vec![32],
            learning_rate: 0.2,
            epochs: 30,
            batch_size: 32,
            l2: 1e-4,
        },
        attack: AttackSpec {
            kind: lbt_core::attack::AttackKind::Fgsm,
            strength: AttackStrength::Band,
            gamma: 0.1,
        },
        eval_fraction: 0.1,
        surrogate: SurrogateSpec {
            hidden: vec![16],
            seed_points: 150,
            tau: 0.95,
            patience: 5,
            lambda: 0.1,
            max_rounds: 10,
            learning_rate: 0.2,
            epochs: 10,
            batch_size: 32,
            l2: 0.0,
        },
        mutation: MutationSpec {
            operator: lbt_core::mutation::MutationOperator::Gf,
            rate: 0.1,
            gf_sigma: 1.0,
            min_agreement: 0.9,
        },
        sprt: SprtParams::default(),
        baselines: BaselineToggles::default(),
        retrain: RetrainSpec {
            learning_rate: 0.05,
            epochs: 10,
            batch_size: 32,
            l2: 0.0,
        },
        seed,
    }
}
