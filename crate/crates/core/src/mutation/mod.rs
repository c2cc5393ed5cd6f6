//! Surrogate-model mutation: operators, sanity gating, deterministic pools,
//! and mutation scores.

mod operators;
mod pool;

pub use operators::{mutate, MutantSpec, MutationOperator};
pub use pool::{
    mutation_score, sanity_gate, CandidateRecord, GateOutcome, MutantPool, PoolEntry, PoolManifest,
};
