use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{shape_err, Error, Result};

/// Width of the raw collision-event feature space.
pub const RAW_FEATURES: usize = 67;
/// Width of every reduced representation.
pub const REDUCED_FEATURES: usize = 16;

pub const SIGNAL: u8 = 1;
pub const BACKGROUND: u8 = 0;

/// Samples as rows, with one binary label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: DMatrix<f64>,
    labels: Vec<u8>,
    feature_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(values: DMatrix<f64>, labels: Vec<u8>, feature_names: Vec<String>) -> Result<Self> {
        if labels.len() != values.nrows() {
            return Err(shape_err(
                format!("{} labels", values.nrows()),
                format!("{} labels", labels.len()),
            ));
        }
        if feature_names.len() != values.ncols() {
            return Err(shape_err(
                format!("{} feature names", values.ncols()),
                format!("{}", feature_names.len()),
            ));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Domain(format!("label {bad} is not 0 or 1")));
        }
        Ok(Self {
            values,
            labels,
            feature_names,
        })
    }

    /// Names features `f0, f1, ...`.
    pub fn unnamed(values: DMatrix<f64>, labels: Vec<u8>) -> Result<Self> {
        let names = default_names(values.ncols());
        Self::new(values, labels, names)
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let values = DMatrix::from_fn(idx.len(), self.cols(), |r, c| self.values[(idx[r], c)]);
        Self {
            values,
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Same labels, new values (e.g. a reduced representation).
    pub fn with_values(&self, values: DMatrix<f64>) -> Result<Self> {
        Self::unnamed(values, self.labels.clone())
    }

    /// `(signal, background)` counts.
    pub fn class_counts(&self) -> (usize, usize) {
        let s = self.labels.iter().filter(|&&l| l == SIGNAL).count();
        (s, self.labels.len() - s)
    }

    pub fn into_parts(self) -> (DMatrix<f64>, Vec<u8>, Vec<String>) {
        (self.values, self.labels, self.feature_names)
    }
}

pub fn default_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("f{i}")).collect()
}

pub(crate) fn expect_cols(x: &DMatrix<f64>, cols: usize) -> Result<()> {
    if x.ncols() != cols {
        return Err(shape_err(format!("{cols} columns"), format!("{} columns", x.ncols())));
    }
    Ok(())
}
