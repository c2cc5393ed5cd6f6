//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Tensor/layer/batch dimensions do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// A precondition on values (not shapes) was violated.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed on-disk data; `offset` is the byte position that failed.
    #[error("format error at byte {offset}: {reason}")]
    Format { offset: u64, reason: String },

    /// Training produced a non-finite loss.
    #[error("training diverged at epoch {epoch}: loss = {loss}")]
    TrainingDiverged { epoch: usize, loss: f64 },

    /// Attack tuning could not place adversarial accuracy inside the target
    /// band; `frontier` lists the (parameter, accuracy) points explored.
    #[error("attack tuning failed: no parameter reached the band [{lo:.2}, {hi:.2}]; frontier: {frontier:?}")]
    Tuning {
        lo: f64,
        hi: f64,
        frontier: Vec<(f64, f64)>,
    },

    /// A mutation operator cannot be applied to this architecture.
    #[error("mutation operator inapplicable: {0}")]
    OperatorInapplicable(String),

    /// Pool growth burned through its candidate budget without producing
    /// enough accepted mutants.
    #[error("mutant pool exhausted: produced {accepted} accepted mutants out of {requested} requested after {candidates} candidates")]
    PoolExhausted {
        requested: usize,
        accepted: usize,
        candidates: usize,
    },

    /// The n_max search hit its ceiling before reaching the decided target.
    #[error("calibration failed: decided fraction {decided:.3} below target {target:.3} after {ceiling} mutants")]
    CalibrationFailed {
        decided: f64,
        target: f64,
        ceiling: usize,
    },

    /// A terminal SPRT state was stepped, or a similar API contract broken.
    #[error("contract violation: {0}")]
    Contract(String),

    /// Bad experiment configuration.
    #[error("config error: {0}")]
    Config(String),

    /// A pipeline stage needs an artifact another stage has not produced.
    #[error("missing artifact {path}: run `{producer}` first")]
    MissingArtifact { path: String, producer: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
