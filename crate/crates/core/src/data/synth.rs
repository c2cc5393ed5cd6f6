//! Fast synthetic benchmark data: Gaussian blobs on a corner lattice.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::set::LabeledSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Coordinate pattern for class `c`: bits of `c` cycled across dimensions,
/// giving each class its own corner of the unit hypercube.
fn class_corner(c: usize, d: usize, num_classes: usize) -> Vec<f64> {
    let bits = usize::BITS - (num_classes.max(2) - 1).leading_zeros();
    (0..d)
        .map(|j| {
            let bit = (c >> (j as u32 % bits)) & 1;
            bit as f64
        })
        .collect()
}

/// `num_classes` Gaussian clusters of `n_per_class` points each, centered on
/// hypercube corners pulled into the margin box `[0.25, 0.75]^d` and clipped
/// to `[0,1]`. Deterministic per seed.
pub fn synth_blobs<F: Scalar>(
    n_per_class: usize,
    num_classes: usize,
    d: usize,
    spread: f64,
    seed: u64,
) -> Result<LabeledSet<F>> {
    if num_classes < 2 {
        return Err(Error::Domain("need at least 2 classes".into()));
    }
    if d < 2 {
        return Err(Error::Domain("need at least 2 dimensions".into()));
    }
    if !spread.is_finite() || spread < 0.0 {
        return Err(Error::Domain("spread must be finite and >= 0".into()));
    }
    if n_per_class == 0 {
        return Err(Error::Domain("need at least one point per class".into()));
    }
    let bits = usize::BITS - (num_classes - 1).leading_zeros();
    if (d as u32) < bits {
        return Err(Error::Domain(format!(
            "{num_classes} classes need at least {bits} dimensions for distinct corners"
        )));
    }

    const MARGIN: f64 = 0.25;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n_per_class * num_classes);
    let mut ys = Vec::with_capacity(n_per_class * num_classes);
    for c in 0..num_classes {
        let corner = class_corner(c, d, num_classes);
        let center: Vec<f64> = corner
            .iter()
            .map(|b| MARGIN + b * (1.0 - 2.0 * MARGIN))
            .collect();
        for _ in 0..n_per_class {
            let row: Vec<F> = center
                .iter()
                .map(|&m| {
                    let noise = f64::sample_standard_normal(&mut rng);
                    F::from_f64_lossy(m + spread * noise)
                })
                .collect();
            rows.push(row);
            ys.push(c);
        }
    }
    LabeledSet::new(rows, Some(ys), num_classes)
}
