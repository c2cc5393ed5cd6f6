//! Behavioral-model generation: iteratively train a surrogate network that
//! imitates a black-box classifier's decision boundary.
//!
//! The build loop labels a seed set through the oracle, trains the
//! surrogate, measures label agreement on a validation set, and grows the
//! training set with Jacobian-based augmentations on which the surrogate and
//! the oracle disagree. It stops on an agreement threshold, on patience, or
//! on the round cap. The oracle interface carries labels only, so nothing
//! in here can peek at the target model's internals.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::attack::sign;
use crate::data::LabeledSet;
use crate::error::{Error, Result};
use crate::nn::{input_gradient, sgd_train, GradTarget, Network, TrainConfig};
use crate::scalar::Scalar;
use crate::seed;

/// Black-box label access to the model under test. Implementations must be
/// total and deterministic; every query is counted.
pub trait LabelOracle<F: Scalar> {
    /// Class labels for every row of `xs`.
    fn query(&self, xs: &LabeledSet<F>) -> Result<Vec<usize>>;

    /// Rows labeled so far.
    fn queries(&self) -> u64;
}

/// The standard oracle: a trained network exposed through labels only.
pub struct NetworkOracle<'a, F> {
    net: &'a Network<F>,
    queries: AtomicU64,
}

impl<'a, F: Scalar> NetworkOracle<'a, F> {
    pub fn new(net: &'a Network<F>) -> Self {
        Self {
            net,
            queries: AtomicU64::new(0),
        }
    }
}

impl<F: Scalar> LabelOracle<F> for NetworkOracle<'_, F> {
    fn query(&self, xs: &LabeledSet<F>) -> Result<Vec<usize>> {
        self.queries.fetch_add(xs.len() as u64, Ordering::Relaxed);
        self.net.predict(xs)
    }

    fn queries(&self) -> u64 {
        self.queries.load(Ordering::Relaxed)
    }
}

/// Build-loop knobs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    /// Agreement threshold that ends the build early.
    pub tau: f64,
    /// Rounds without improvement before giving up.
    pub patience: usize,
    /// Augmentation step size.
    pub lambda: f64,
    /// Hard cap on build rounds.
    pub max_rounds: usize,
    /// Per-round training settings.
    pub train: TrainConfig,
}

impl SurrogateConfig {
    pub fn defaults(train: TrainConfig) -> Self {
        Self {
            tau: 0.95,
            patience: 5,
            lambda: 0.1,
            max_rounds: 20,
            train,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tau.is_finite() || self.tau <= 0.0 || self.tau > 1.0 {
            return Err(Error::Config("tau must be in (0, 1]".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be positive".into()));
        }
        if !self.lambda.is_finite() || self.lambda <= 0.0 || self.lambda > 0.5 {
            return Err(Error::Config("lambda must be in (0, 0.5]".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::Config("max_rounds must be positive".into()));
        }
        self.train.validate()
    }
}

/// Why the build loop stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminalReason {
    Threshold,
    Patience,
    MaxRounds,
}

/// One build round: training-set size used, validation similarity reached,
/// and how many disagreement rows were added afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRound {
    pub round: usize,
    pub s_size: usize,
    pub similarity: f64,
    pub added: usize,
}

/// Per-round build history plus the stop reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityTrace {
    pub rounds: Vec<TraceRound>,
    pub terminal: TerminalReason,
}

impl SimilarityTrace {
    pub fn final_similarity(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.similarity)
    }

    /// CSV rendering: `round,s_size,similarity,added`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("round,s_size,similarity,added\n");
        for r in &self.rounds {
            out.push_str(&format!(
                "{},{},{},{}\n",
                r.round, r.s_size, r.similarity, r.added
            ));
        }
        out
    }
}

/// Fraction of validation rows where the surrogate's prediction matches the
/// stored oracle label.
pub fn similarity<F: Scalar>(
    surrogate: &Network<F>,
    oracle_labels: &[usize],
    x_val: &LabeledSet<F>,
) -> Result<f64> {
    if oracle_labels.len() != x_val.len() {
        return Err(Error::Shape(format!(
            "{} oracle labels for {} validation rows",
            oracle_labels.len(),
            x_val.len()
        )));
    }
    if x_val.is_empty() {
        return Err(Error::Domain("empty validation set".into()));
    }
    let preds = surrogate.predict(x_val)?;
    let hits = preds
        .iter()
        .zip(oracle_labels)
        .filter(|(p, y)| *p == *y)
        .count();
    Ok(hits as f64 / x_val.len() as f64)
}

/// Jacobian-based augmentation: for each labeled row `(x, y)` produce
/// `clip(x + lambda * sign(d logit_y / dx))`, pushing along the surrogate's
/// growth direction for the oracle's class. Returns the new rows only.
pub fn jacobian_augment<F: Scalar>(
    surrogate: &Network<F>,
    s: &LabeledSet<F>,
    lambda: f64,
) -> Result<Vec<Vec<F>>> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::Domain("lambda must be finite and >= 0".into()));
    }
    let labels = s
        .labels()
        .ok_or_else(|| Error::Domain("augmentation needs oracle labels".into()))?;
    let step = F::from_f64_lossy(lambda);
    let mut rows = Vec::with_capacity(s.len());
    for (i, &y) in labels.iter().enumerate() {
        let x = s.row(i);
        let grad = input_gradient(surrogate, x, y, GradTarget::Logit)?;
        let row: Vec<F> = x
            .iter()
            .zip(&grad)
            .map(|(&xi, &g)| (xi + step * sign(g)).max(F::zero()).min(F::one()))
            .collect();
        rows.push(row);
    }
    Ok(rows)
}

/// Runs the build loop and returns the trained surrogate with its trace.
///
/// The oracle labels `x_init` and `x_val` once up front; afterwards it is
/// queried only on augmented rows, and only disagreement rows (oracle label
/// != surrogate prediction) join the training set. An empty disagreement
/// round is not an error: the surrogate retrains on the same set and the
/// round counts toward patience.
pub fn build_surrogate<F: Scalar, O: LabelOracle<F>>(
    b0: &Network<F>,
    oracle: &O,
    x_init: &LabeledSet<F>,
    x_val: &LabeledSet<F>,
    cfg: &SurrogateConfig,
) -> Result<(Network<F>, SimilarityTrace)> {
    cfg.validate()?;
    if x_init.is_empty() || x_val.is_empty() {
        return Err(Error::Domain(
            "seed and validation sets must be non-empty".into(),
        ));
    }

    let y_init = oracle.query(x_init)?;
    let y_val = oracle.query(x_val)?;
    let mut s = x_init.with_labels(y_init)?;
    let mut surrogate = b0.clone();
    let mut best = 0.0f64;
    let mut no_improvement = 0usize;
    let mut rounds = Vec::new();

    for round in 1..=cfg.max_rounds {
        let mut round_train = cfg.train.clone();
        round_train.seed = seed::child_indexed(cfg.train.seed, "surrogate-round", round as u64);
        surrogate = sgd_train(&surrogate, &s, &round_train)?;
        let sim = similarity(&surrogate, &y_val, x_val)?;
        let s_size = s.len();

        let terminal = if sim > cfg.tau {
            Some(TerminalReason::Threshold)
        } else {
            // Improvement is strict, measured to 1e-6.
            if sim > best + 1e-6 {
                best = sim;
                no_improvement = 0;
            } else {
                no_improvement += 1;
            }
            if no_improvement >= cfg.patience {
                Some(TerminalReason::Patience)
            } else if round == cfg.max_rounds {
                Some(TerminalReason::MaxRounds)
            } else {
                None
            }
        };

        let mut added = 0usize;
        if terminal.is_none() {
            let aug_rows = jacobian_augment(&surrogate, &s, cfg.lambda)?;
            let aug_set = LabeledSet::new(aug_rows, None, s.num_classes())?;
            let oracle_labels = oracle.query(&aug_set)?;
            for (i, &y) in oracle_labels.iter().enumerate() {
                let row = aug_set.row(i);
                if surrogate.predict_row(row)? != y {
                    s.append_labeled(row, y)?;
                    added += 1;
                }
            }
        }
        rounds.push(TraceRound {
            round,
            s_size,
            similarity: sim,
            added,
        });

        if let Some(terminal) = terminal {
            return Ok((surrogate, SimilarityTrace { rounds, terminal }));
        }
    }
    unreachable!("the final round always sets a terminal reason");
}
