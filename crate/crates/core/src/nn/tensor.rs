//! Row-major tensor of scalars.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Dense row-major tensor. Construction rejects non-finite values and shape
/// mismatches; afterwards the invariants hold by fiat.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor<F> {
    shape: Vec<usize>,
    data: Vec<F>,
}

impl<F: Scalar> Tensor<F> {
    pub fn new(shape: Vec<usize>, data: Vec<F>) -> Result<Self> {
        let expect: usize = shape.iter().product();
        if expect != data.len() {
            return Err(Error::Shape(format!(
                "shape {:?} implies {} elements, got {}",
                shape,
                expect,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite value at flat index {bad}"
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn vector(data: Vec<F>) -> Result<Self> {
        let n = data.len();
        Self::new(vec![n], data)
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![F::zero(); n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn into_data(self) -> Vec<F> {
        self.data
    }
}

/// Index of the largest entry; ties break toward the lowest index so
/// downstream prediction comparisons stay deterministic.
pub fn argmax<F: PartialOrd + Copy>(values: &[F]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_shape_mismatch() {
        assert!(Tensor::new(vec![2, 2], vec![1.0_f64; 3]).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Tensor::vector(vec![0.0, f64::NAN]).is_err());
        assert!(Tensor::vector(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.5_f64, 0.5]), 0);
        assert_eq!(argmax(&[0.1_f64, 0.7, 0.7]), 1);
        assert_eq!(argmax(&[0.75_f64, 0.25]), 0);
    }
}
