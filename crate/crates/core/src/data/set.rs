//! The universal dataset carrier: a feature matrix plus optional labels.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// `n x d` feature matrix with values in `[0,1]` (clipped at construction)
/// and optional ground-truth class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet<F> {
    xs: Vec<F>,
    n: usize,
    d: usize,
    ys: Option<Vec<usize>>,
    num_classes: usize,
}

impl<F: Scalar> LabeledSet<F> {
    pub fn new(rows: Vec<Vec<F>>, ys: Option<Vec<usize>>, num_classes: usize) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Shape("ragged feature rows".into()));
        }
        let mut flat = Vec::with_capacity(n * d);
        for row in rows {
            flat.extend(row);
        }
        Self::from_flat(flat, d, ys, num_classes)
    }

    /// Builds from a row-major flat buffer. Rejects non-finite features and
    /// out-of-range labels; clips features into `[0,1]`.
    pub fn from_flat(
        mut xs: Vec<F>,
        d: usize,
        ys: Option<Vec<usize>>,
        num_classes: usize,
    ) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::Domain("need at least 2 classes".into()));
        }
        if d == 0 {
            return Err(Error::Shape("feature dimension must be positive".into()));
        }
        if !xs.len().is_multiple_of(d) {
            return Err(Error::Shape(format!(
                "flat buffer length {} is not a multiple of dimension {d}",
                xs.len()
            )));
        }
        let n = xs.len() / d;
        if xs.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite feature value".into()));
        }
        for v in xs.iter_mut() {
            *v = v.max(F::zero()).min(F::one());
        }
        if let Some(labels) = &ys {
            if labels.len() != n {
                return Err(Error::Shape(format!(
                    "{} labels for {n} rows",
                    labels.len()
                )));
            }
            if let Some(bad) = labels.iter().find(|y| **y >= num_classes) {
                return Err(Error::Domain(format!(
                    "label {bad} out of range for {num_classes} classes"
                )));
            }
        }
        Ok(Self {
            xs,
            n,
            d,
            ys,
            num_classes,
        })
    }

    pub fn empty(d: usize, num_classes: usize) -> Self {
        Self {
            xs: Vec::new(),
            n: 0,
            d,
            ys: Some(Vec::new()),
            num_classes,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.xs[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[F]> {
        self.xs.chunks(self.d)
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.ys.as_deref()
    }

    pub fn label(&self, i: usize) -> Option<usize> {
        self.ys.as_ref().map(|ys| ys[i])
    }

    /// Copy of the selected rows (labels carried along when present).
    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut xs = Vec::with_capacity(idx.len() * self.d);
        for &i in idx {
            xs.extend_from_slice(self.row(i));
        }
        let ys = self
            .ys
            .as_ref()
            .map(|ys| idx.iter().map(|&i| ys[i]).collect());
        Self {
            xs,
            n: idx.len(),
            d: self.d,
            ys,
            num_classes: self.num_classes,
        }
    }

    /// Same rows, labels dropped.
    pub fn unlabeled(&self) -> Self {
        Self {
            xs: self.xs.clone(),
            n: self.n,
            d: self.d,
            ys: None,
            num_classes: self.num_classes,
        }
    }

    /// Same rows, labels replaced wholesale.
    pub fn with_labels(&self, ys: Vec<usize>) -> Result<Self> {
        Self::from_flat(self.xs.clone(), self.d, Some(ys), self.num_classes)
    }

    /// Same rows and labels, class count widened/narrowed (labels must fit).
    pub fn with_num_classes(mut self, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::Domain("need at least 2 classes".into()));
        }
        if let Some(ys) = &self.ys {
            if let Some(bad) = ys.iter().find(|y| **y >= num_classes) {
                return Err(Error::Domain(format!(
                    "label {bad} out of range for {num_classes} classes"
                )));
            }
        }
        self.num_classes = num_classes;
        Ok(self)
    }

    /// Appends one labeled row; the set must already carry labels.
    pub fn append_labeled(&mut self, row: &[F], y: usize) -> Result<()> {
        if row.len() != self.d {
            return Err(Error::Shape(format!(
                "row has {} features, set stores {}",
                row.len(),
                self.d
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("non-finite feature value".into()));
        }
        if y >= self.num_classes {
            return Err(Error::Domain(format!(
                "label {y} out of range for {} classes",
                self.num_classes
            )));
        }
        let ys = self
            .ys
            .as_mut()
            .ok_or_else(|| Error::Contract("cannot append labeled row to unlabeled set".into()))?;
        self.xs
            .extend(row.iter().map(|v| v.max(F::zero()).min(F::one())));
        ys.push(y);
        self.n += 1;
        Ok(())
    }
}
