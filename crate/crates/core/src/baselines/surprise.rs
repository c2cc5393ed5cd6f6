//! Surprise-adequacy scores over last-hidden-layer activations: distance
//! ratio to the nearest references (DSA) and Gaussian kernel density (KDE).

use crate::baselines::ActivationProvider;
use crate::data::LabeledSet;
use crate::error::{Error, Result};
use crate::nn::argmax;

/// Last-hidden activations of a reference (training) set, grouped by label.
/// Every class must contribute at least two references.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainRefs {
    per_class: Vec<Vec<Vec<f64>>>,
}

impl TrainRefs {
    pub fn new<P: ActivationProvider>(provider: &P, train: &LabeledSet<f64>) -> Result<Self> {
        let labels = train
            .labels()
            .ok_or_else(|| Error::Domain("reference set needs labels".into()))?;
        let mut per_class: Vec<Vec<Vec<f64>>> = vec![Vec::new(); train.num_classes()];
        for i in 0..train.len() {
            let snap = provider.snapshot(train.row(i))?;
            per_class[labels[i]].push(snap.last_hidden);
        }
        if let Some(class) = per_class.iter().position(|refs| refs.len() < 2) {
            return Err(Error::Domain(format!(
                "degenerate class {class}: needs at least 2 references, has {}",
                per_class[class].len()
            )));
        }
        Ok(Self { per_class })
    }

    pub fn num_classes(&self) -> usize {
        self.per_class.len()
    }

    pub fn class_refs(&self, class: usize) -> &[Vec<f64>] {
        &self.per_class[class]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest<'r>(
    point: &[f64],
    refs: impl Iterator<Item = &'r Vec<f64>>,
) -> Option<(f64, &'r Vec<f64>)> {
    let mut best: Option<(f64, &Vec<f64>)> = None;
    for r in refs {
        let d = sq_dist(point, r);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, r));
        }
    }
    best
}

/// Distance-based surprise adequacy: distance from `a(x)` to its nearest
/// same-predicted-class reference, over that reference's distance to the
/// nearest other-class reference. Higher means more surprising, test first.
pub fn dsa<P: ActivationProvider>(provider: &P, x: &[f64], refs: &TrainRefs) -> Result<f64> {
    let snap = provider.snapshot(x)?;
    let class = argmax(&snap.probs);
    if class >= refs.num_classes() {
        return Err(Error::Domain(format!(
            "predicted class {class} has no references"
        )));
    }
    let (da_sq, x_a) = nearest(&snap.last_hidden, refs.class_refs(class).iter())
        .expect("classes hold at least 2 references");
    let other = refs
        .per_class
        .iter()
        .enumerate()
        .filter(|(c, _)| *c != class)
        .flat_map(|(_, rs)| rs.iter());
    let (db_sq, _) = nearest(x_a, other)
        .ok_or_else(|| Error::Domain("need references outside the predicted class".into()))?;
    // Coincident cross-class references would zero the denominator; floor it.
    Ok(da_sq.sqrt() / db_sq.sqrt().max(1e-12))
}

/// Gaussian-kernel log-density of `a(x)` against the same-predicted-class
/// references, diagonal Scott's-rule bandwidth. Log space keeps far-away
/// inputs finite (the density itself is strictly positive); LOWER density
/// means more surprising, test first.
pub fn kde_score<P: ActivationProvider>(provider: &P, x: &[f64], refs: &TrainRefs) -> Result<f64> {
    let snap = provider.snapshot(x)?;
    let class = argmax(&snap.probs);
    if class >= refs.num_classes() {
        return Err(Error::Domain(format!(
            "predicted class {class} has no references"
        )));
    }
    let class_refs = refs.class_refs(class);
    Ok(gaussian_kde_log_density(&snap.last_hidden, class_refs))
}

/// Shared KDE core: diagonal Scott bandwidth `sigma_j * m^(-1/(d+4))`
/// (floored to keep constant dimensions finite), log-sum-exp over kernels.
pub(crate) fn gaussian_kde_log_density(point: &[f64], refs: &[Vec<f64>]) -> f64 {
    let m = refs.len();
    let d = point.len();
    let m_f = m as f64;
    let exponent = -1.0 / (d as f64 + 4.0);
    let factor = m_f.powf(exponent);

    let mut bandwidth = Vec::with_capacity(d);
    for j in 0..d {
        let mean = refs.iter().map(|r| r[j]).sum::<f64>() / m_f;
        let var = refs.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / m_f;
        bandwidth.push((var.sqrt() * factor).max(1e-9));
    }

    let log_norm: f64 = bandwidth.iter().map(|h| h.ln()).sum::<f64>()
        + 0.5 * d as f64 * (2.0 * std::f64::consts::PI).ln()
        + m_f.ln();

    let log_kernels: Vec<f64> = refs
        .iter()
        .map(|r| {
            -0.5 * point
                .iter()
                .zip(r)
                .zip(&bandwidth)
                .map(|((p, q), h)| ((p - q) / h).powi(2))
                .sum::<f64>()
        })
        .collect();
    log_sum_exp(&log_kernels) - log_norm
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
