//! Sanity-gated, deterministically seeded mutant pools.

use serde::{Deserialize, Serialize};

use crate::data::LabeledSet;
use crate::error::{Error, Result};
use crate::mutation::operators::{mutate, MutantSpec};
use crate::nn::{weights_hash, Network};
use crate::scalar::Scalar;
use crate::seed;

/// Candidates allowed per accepted mutant before growth is declared failed.
const CANDIDATE_BUDGET_FACTOR: usize = 10;

/// Gate verdict with the measured agreement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateOutcome {
    pub accepted: bool,
    pub agreement: f64,
}

/// Accepts a mutant iff its predictions agree with the base on at least
/// `min_agreement` of the validation rows. A wildly divergent mutant would
/// flip even benign inputs, which defeats score-based ranking.
pub fn sanity_gate<F: Scalar>(
    base: &Network<F>,
    mutant: &Network<F>,
    x_val: &LabeledSet<F>,
    min_agreement: f64,
) -> Result<GateOutcome> {
    if x_val.is_empty() {
        return Err(Error::Domain(
            "sanity gate needs a non-empty validation set".into(),
        ));
    }
    let base_preds = base.predict(x_val)?;
    let mutant_preds = mutant.predict(x_val)?;
    let agreement = agreement_fraction(&base_preds, &mutant_preds);
    Ok(GateOutcome {
        accepted: agreement >= min_agreement,
        agreement,
    })
}

fn agreement_fraction(a: &[usize], b: &[usize]) -> f64 {
    let hits = a.iter().zip(b).filter(|(x, y)| x == y).count();
    hits as f64 / a.len() as f64
}

/// `(z, n)` for one input: how many of `n` mutants predict differently from
/// the base.
pub fn mutation_score<F: Scalar>(
    base: &Network<F>,
    mutants: &[Network<F>],
    x: &[F],
) -> Result<(usize, usize)> {
    if mutants.is_empty() {
        return Err(Error::Domain(
            "mutation score needs at least one mutant".into(),
        ));
    }
    let base_pred = base.predict_row(x)?;
    let mut z = 0;
    for m in mutants {
        if m.predict_row(x)? != base_pred {
            z += 1;
        }
    }
    Ok((z, mutants.len()))
}

/// One accepted pool member.
#[derive(Debug, Clone)]
pub struct PoolEntry<F> {
    pub spec: MutantSpec,
    pub network: Network<F>,
    pub agreement: f64,
}

/// Everything tried during growth, accepted or not; feeds the manifest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub seed: u64,
    pub agreement: f64,
    pub accepted: bool,
}

/// Deterministic, seed-indexed sequence of gated mutants.
///
/// Candidate seeds derive from `(base_seed, operator, candidate index)`, and
/// rejected candidates do not consume pool positions, so growing by 5 twice
/// equals growing by 10 once.
pub struct MutantPool<F> {
    base: Network<F>,
    base_preds: Vec<usize>,
    template: MutantSpec,
    base_seed: u64,
    min_agreement: f64,
    x_val: LabeledSet<F>,
    entries: Vec<PoolEntry<F>>,
    candidates: Vec<CandidateRecord>,
    next_candidate: u64,
}

impl<F: Scalar> MutantPool<F> {
    pub fn new(
        base: Network<F>,
        template: MutantSpec,
        base_seed: u64,
        min_agreement: f64,
        x_val: LabeledSet<F>,
    ) -> Result<Self> {
        template.validate()?;
        if !(0.0..=1.0).contains(&min_agreement) {
            return Err(Error::Config("min_agreement must be in [0, 1]".into()));
        }
        if x_val.is_empty() {
            return Err(Error::Domain(
                "pool gating needs a non-empty validation set".into(),
            ));
        }
        let base_preds = base.predict(&x_val)?;
        Ok(Self {
            base,
            base_preds,
            template,
            base_seed,
            min_agreement,
            x_val,
            entries: Vec::new(),
            candidates: Vec::new(),
            next_candidate: 0,
        })
    }

    pub fn base(&self) -> &Network<F> {
        &self.base
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[PoolEntry<F>] {
        &self.entries
    }

    pub fn mutant(&self, i: usize) -> &Network<F> {
        &self.entries[i].network
    }

    /// Cached base predictions on the gate validation set.
    pub fn base_val_preds(&self) -> &[usize] {
        &self.base_preds
    }

    /// Appends `k` accepted mutants, skipping gate rejections. Fails with
    /// the candidate tally if `10 * k` candidates cannot produce `k`
    /// acceptances.
    pub fn grow(&mut self, k: usize) -> Result<()> {
        if k == 0 {
            return Ok(());
        }
        let budget = k * CANDIDATE_BUDGET_FACTOR;
        let mut accepted = 0usize;
        let mut tried = 0usize;
        while accepted < k {
            if tried == budget {
                return Err(Error::PoolExhausted {
                    requested: k,
                    accepted,
                    candidates: tried,
                });
            }
            let mut spec = self.template.clone();
            spec.seed = seed::child_indexed(
                self.base_seed,
                self.template.operator.tag(),
                self.next_candidate,
            );
            self.next_candidate += 1;
            tried += 1;

            let network = mutate(&self.base, &spec)?;
            let preds = network.predict(&self.x_val)?;
            let agreement = agreement_fraction(&self.base_preds, &preds);
            let is_accepted = agreement >= self.min_agreement;
            self.candidates.push(CandidateRecord {
                seed: spec.seed,
                agreement,
                accepted: is_accepted,
            });
            if is_accepted {
                self.entries.push(PoolEntry {
                    spec,
                    network,
                    agreement,
                });
                accepted += 1;
            }
        }
        Ok(())
    }

    /// Rebuilds a pool from recorded candidates. Accepted seeds are
    /// re-materialized (mutation is deterministic given the base and spec);
    /// rejected seeds only advance the candidate counter, preserving the
    /// grow-prefix property for later growth.
    pub fn restore(
        base: Network<F>,
        template: MutantSpec,
        base_seed: u64,
        min_agreement: f64,
        x_val: LabeledSet<F>,
        candidates: &[CandidateRecord],
    ) -> Result<Self> {
        let mut pool = Self::new(base, template, base_seed, min_agreement, x_val)?;
        for record in candidates {
            if record.accepted {
                let mut spec = pool.template.clone();
                spec.seed = record.seed;
                let network = mutate(&pool.base, &spec)?;
                pool.entries.push(PoolEntry {
                    spec,
                    network,
                    agreement: record.agreement,
                });
            }
        }
        pool.candidates = candidates.to_vec();
        pool.next_candidate = candidates.len() as u64;
        Ok(pool)
    }

    /// JSON manifest: base-weights hash, operator settings, and per-candidate
    /// gate results.
    pub fn manifest(&self) -> Result<PoolManifest> {
        Ok(PoolManifest {
            base_weights_hash: weights_hash(&self.base)?,
            operator: self.template.operator,
            rate: self.template.rate,
            gf_sigma: self.template.gf_sigma,
            base_seed: self.base_seed,
            min_agreement: self.min_agreement,
            accepted: self.entries.len(),
            candidates: self.candidates.clone(),
        })
    }
}

/// On-disk description of a pool.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PoolManifest {
    pub base_weights_hash: String,
    pub operator: crate::mutation::MutationOperator,
    pub rate: f64,
    pub gf_sigma: f64,
    pub base_seed: u64,
    pub min_agreement: f64,
    pub accepted: usize,
    pub candidates: Vec<CandidateRecord>,
}
