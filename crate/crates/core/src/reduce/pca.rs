use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{center, column_means, matmul_nt, matmul_tn, symmetric_eigen};
use crate::matrix::expect_cols;

/// Principal axes of the training covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    /// `d* × D`, orthonormal rows ordered by decreasing variance.
    pub components: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub explained_variance: Vec<f64>,
    /// Trace of the sample covariance (sum over all D eigenvalues).
    pub total_variance: f64,
}

pub fn pca_fit(x: &DMatrix<f64>, d_star: usize) -> Result<PcaModel> {
    let (m, d) = x.shape();
    if m <= d_star || d_star == 0 || d_star > d {
        return Err(Error::InsufficientData(format!(
            "PCA to {d_star} components needs more than {d_star} samples and at most {d} components (have {m}x{d})"
        )));
    }
    let mean = column_means(x);
    let xc = center(x, &mean);
    let cov = matmul_tn(&xc, &xc) / (m as f64 - 1.0);
    let total_variance = cov.trace();
    if !(total_variance > 0.0) {
        return Err(Error::Rank("covariance matrix is zero".into()));
    }
    let eig = symmetric_eigen(&cov)?;
    let mut components = DMatrix::zeros(d_star, d);
    let mut explained_variance = Vec::with_capacity(d_star);
    for k in 0..d_star {
        let src = d - 1 - k;
        components.set_row(k, &eig.vectors.column(src).transpose());
        explained_variance.push(eig.values[src]);
    }
    Ok(PcaModel { components, mean, explained_variance, total_variance })
}

impl PcaModel {
    pub fn input_dims(&self) -> usize {
        self.components.ncols()
    }

    pub fn output_dims(&self) -> usize {
        self.components.nrows()
    }

    /// `Uᵀ (x − mean)` for every row of `x`.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        expect_cols(x, self.input_dims())?;
        Ok(matmul_nt(&center(x, &self.mean), &self.components))
    }

    pub fn inverse_transform(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        expect_cols(z, self.output_dims())?;
        let mut x = z * &self.components;
        for (j, mut col) in x.column_iter_mut().enumerate() {
            col.add_scalar_mut(self.mean[j]);
        }
        Ok(x)
    }

    /// `λ_i / Σ_j λ_j` over the full spectrum.
    pub fn explained_variance_ratio(&self) -> Vec<f64> {
        self.explained_variance.iter().map(|l| l / self.total_variance).collect()
    }
}

pub fn pca_transform(model: &PcaModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    model.transform(x)
}
