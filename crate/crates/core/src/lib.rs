//! Prioritizes adversarial test inputs for a black-box classifier.
//!
//! The toolkit trains a surrogate "behavioral" model that imitates the model
//! under test through label queries alone, perturbs that surrogate with
//! seeded mutation operators, and runs a sequential probability ratio test
//! per input to select the inputs whose predictions are most sensitive to
//! mutation — the ones most likely to expose faults. Attack generation
//! (FGSM/JSMA), reference prioritizers, and evaluation metrics (fault
//! detection rate, APFD, fault-type RAUC, retraining deltas) round out the
//! pipeline.
//!
//! Feature-space math (networks, datasets, attacks, mutation) is generic
//! over the [`scalar::Scalar`] type; the crate root pins `f64` aliases,
//! which the statistics and pipeline layers consume.

pub mod attack;
pub mod baselines;
pub mod data;
pub mod error;
pub mod metrics;
pub mod mutation;
pub mod nn;
pub mod pipeline;
pub mod scalar;
pub mod seed;
pub mod sprt;
pub mod surrogate;

pub use error::{Error, Result};

/// Double-precision tensor used throughout the pipeline.
pub type Tensor = nn::Tensor<f64>;
/// Double-precision classifier network.
pub type Network = nn::Network<f64>;
/// Double-precision dataset.
pub type LabeledSet = data::LabeledSet<f64>;
/// Double-precision adversarial set.
pub type AdvSet = attack::AdvSet<f64>;
