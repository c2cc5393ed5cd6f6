//! End-to-end experiment driver: train the model under test, generate
//! attacks, build the surrogate, calibrate, prioritize, evaluate against
//! the baselines, and write reports. One config file plus one seed
//! determines every output byte; finished stages are cached by input
//! fingerprint and reused.

mod artifacts;
mod config;
mod stages;

pub use artifacts::RunLock;
pub use config::{
    AttackSpec, AttackStrength, BaselineToggles, DatasetSpec, ExperimentConfig, ModelSpec,
    MutationSpec, RetrainSpec, SprtParams, SurrogateSpec,
};
pub use stages::{Pipeline, RunManifest, METHOD_ORDER, STAGE_ORDER};

use crate::error::Result;
use crate::metrics::EvalReport;
use std::path::Path;

/// Runs the whole pipeline for `cfg` into `out_dir` and returns the
/// per-method evaluation rows.
pub fn run_pipeline(cfg: ExperimentConfig, out_dir: &Path) -> Result<Vec<EvalReport>> {
    Pipeline::new(cfg, out_dir)?.run_all()
}
