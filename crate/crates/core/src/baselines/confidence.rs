//! Softmax-confidence scores: Gini impurity, predictive entropy, max
//! probability.

use crate::error::{Error, Result};

fn validate_probs(probs: &[f64]) -> Result<()> {
    if probs.len() < 2 {
        return Err(Error::Domain(
            "probability vector needs at least 2 classes".into(),
        ));
    }
    if probs
        .iter()
        .any(|p| !p.is_finite() || *p < -1e-9 || *p > 1.0 + 1e-9)
    {
        return Err(Error::Domain("probabilities must lie in [0, 1]".into()));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Domain(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

/// Gini impurity `1 - sum(p^2)`; higher means less confident, test first.
pub fn gini(probs: &[f64]) -> Result<f64> {
    validate_probs(probs)?;
    Ok(1.0 - probs.iter().map(|p| p * p).sum::<f64>())
}

/// Predictive entropy `-sum(p ln p)` with `0 ln 0 = 0`; higher first.
pub fn pe(probs: &[f64]) -> Result<f64> {
    validate_probs(probs)?;
    Ok(-probs
        .iter()
        .map(|&p| if p > 0.0 { p * p.ln() } else { 0.0 })
        .sum::<f64>())
}

/// Maximum class probability; LOWER means less confident, test first.
pub fn maxp(probs: &[f64]) -> Result<f64> {
    validate_probs(probs)?;
    Ok(probs.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
}
