//! Dataset loading, synthesis, and splitting.

mod idx;
mod set;
mod split;
mod synth;

pub use idx::{load_idx, load_idx_images, save_idx};
pub use set::LabeledSet;
pub use split::{split, split_indices, SplitSpec};
pub use synth::synth_blobs;
