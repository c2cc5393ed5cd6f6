//! Seeded dataset splitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::set::LabeledSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fractions for a seeded shuffle-then-partition split. Fractions must be
/// positive and sum to 1 within 1e-9.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub fractions: Vec<f64>,
    pub seed: u64,
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::Config("split needs at least one fraction".into()));
        }
        if self.fractions.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(Error::Config("split fractions must be positive".into()));
        }
        let total: f64 = self.fractions.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split fractions sum to {total}, not 1"
            )));
        }
        Ok(())
    }
}

/// Index partition underlying [`split`]: a seeded shuffle of `0..n` cut into
/// contiguous parts sized `round(fraction * n)`, remainder to the last part.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<Vec<Vec<usize>>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Domain("cannot split an empty set".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    order.shuffle(&mut rng);

    let k = spec.fractions.len();
    let mut parts = Vec::with_capacity(k);
    let mut taken = 0usize;
    for (i, f) in spec.fractions.iter().enumerate() {
        let size = if i + 1 == k {
            n - taken
        } else {
            ((f * n as f64).round() as usize).min(n - taken)
        };
        parts.push(order[taken..taken + size].to_vec());
        taken += size;
    }
    Ok(parts)
}

/// Seeded shuffle then contiguous partition. Parts are disjoint and their
/// union is the input.
pub fn split<F: Scalar>(set: &LabeledSet<F>, spec: &SplitSpec) -> Result<Vec<LabeledSet<F>>> {
    let parts = split_indices(set.len(), spec)?;
    Ok(parts.iter().map(|idx| set.subset(idx)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn demo_set(n: usize) -> LabeledSet<f64> {
        let rows = (0..n).map(|i| vec![i as f64 / n as f64, 0.5]).collect();
        LabeledSet::new(rows, Some((0..n).map(|i| i % 2).collect()), 2).unwrap()
    }

    #[test]
    fn single_fraction_is_identity_up_to_order() {
        let set = demo_set(8);
        let parts = split(
            &set,
            &SplitSpec {
                fractions: vec![1.0],
                seed: 3,
            },
        )
        .unwrap();
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].len(), 8);
    }

    #[test]
    fn ninety_ten_of_ten_rows_is_nine_and_one() {
        let parts = split_indices(
            10,
            &SplitSpec {
                fractions: vec![0.9, 0.1],
                seed: 0,
            },
        )
        .unwrap();
        assert_eq!(parts[0].len(), 9);
        assert_eq!(parts[1].len(), 1);
    }

    #[test]
    fn same_seed_same_partition_different_seed_same_sizes() {
        let spec_a = SplitSpec {
            fractions: vec![0.5, 0.5],
            seed: 1,
        };
        let spec_b = SplitSpec {
            fractions: vec![0.5, 0.5],
            seed: 2,
        };
        let p1 = split_indices(100, &spec_a).unwrap();
        let p2 = split_indices(100, &spec_a).unwrap();
        let p3 = split_indices(100, &spec_b).unwrap();
        assert_eq!(p1, p2);
        assert_ne!(p1, p3);
        assert_eq!(p3[0].len(), 50);
    }

    #[test]
    fn empty_set_is_domain_error() {
        assert!(split_indices(
            0,
            &SplitSpec {
                fractions: vec![1.0],
                seed: 0
            }
        )
        .is_err());
    }

    proptest! {
        // No row lost or duplicated, for arbitrary sizes and seeds.
        #[test]
        fn partition_is_exact(n in 1usize..200, seed in any::<u64>()) {
            let spec = SplitSpec { fractions: vec![0.3, 0.45, 0.25], seed };
            let parts = split_indices(n, &spec).unwrap();
            let mut all: Vec<usize> = parts.into_iter().flatten().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
