//! Minimal feedforward network engine: dense/ReLU/softmax classifiers with
//! cross-entropy training, parameter gradients, and input gradients.
//!
//! This is the substrate everything else runs on: models under test,
//! surrogate models, mutants, attacks, and the white-box baselines.

mod grad;
mod io;
mod layer;
mod network;
mod tensor;
mod train;

pub use grad::{input_gradient, param_gradients, GradTarget, ParamGradients};
pub use io::{from_json, load_network, save_network, to_json, weights_hash};
pub use layer::{softmax, Dense, Layer};
pub use network::Network;
pub use tensor::{argmax, Tensor};
pub use train::{sgd_train, TrainConfig};
