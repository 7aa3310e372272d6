use alloc::vec::Vec;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::expect_cols;

/// Per-feature `(min, max)` fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationSpec {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

pub fn fit_minmax(train: &DMatrix<f64>) -> Result<NormalizationSpec> {
    if train.nrows() == 0 {
        return Err(Error::InsufficientData("min-max fit needs at least one row".into()));
    }
    let min = train.column_iter().map(|c| c.min()).collect();
    let max = train.column_iter().map(|c| c.max()).collect();
    Ok(NormalizationSpec { min, max })
}

impl NormalizationSpec {
    pub fn dims(&self) -> usize {
        self.min.len()
    }

    /// Map into `[0, 1]` with clipping; constant features map to 0.
    pub fn apply(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        expect_cols(x, self.dims())?;
        let mut out = x.clone();
        for (j, mut col) in out.column_iter_mut().enumerate() {
            let (lo, hi) = (self.min[j], self.max[j]);
            let range = hi - lo;
            for v in col.iter_mut() {
                *v = if range > 0.0 { ((*v - lo) / range).clamp(0.0, 1.0) } else { 0.0 };
            }
        }
        Ok(out)
    }
}

pub fn apply_minmax(x: &DMatrix<f64>, spec: &NormalizationSpec) -> Result<DMatrix<f64>> {
    spec.apply(x)
}
