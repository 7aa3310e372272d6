//! FastICA with the cubic nonlinearity and symmetric decorrelation.

use alloc::format;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{center, column_means, matmul, matmul_nt, matmul_tn, symmetric_eigen};
use crate::matrix::expect_cols;
use crate::rng::{self, streams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcaConfig {
    pub max_iter: usize,
    /// Stop once every unmixing direction moves by less than this.
    pub tol: f64,
    pub seed: u64,
}

impl Default for IcaConfig {
    fn default() -> Self {
        Self { max_iter: 200, tol: 1e-4, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IcaModel {
    /// `d* × D`, maps centred inputs straight to sources.
    pub unmixing: DMatrix<f64>,
    /// `d* × D` PCA whitening.
    pub whitening: DMatrix<f64>,
    /// Orthogonal `d* × d*` rotation found by the fixed-point iteration.
    pub rotation: DMatrix<f64>,
    pub mean: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Components whose excess kurtosis is indistinguishable from a Gaussian.
    pub gaussian_components: usize,
}

/// `(W Wᵀ)^{-1/2} W`
fn symmetric_decorrelation(w: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let e = symmetric_eigen(&matmul_nt(w, w))?;
    let inv_sqrt = DVector::from_iterator(e.values.len(), e.values.iter().map(|&l| 1.0 / libm::sqrt(l.max(1e-300))));
    let s = &e.vectors * DMatrix::from_diagonal(&inv_sqrt) * e.vectors.transpose();
    Ok(matmul(&s, w))
}

pub fn ica_fit(x: &DMatrix<f64>, d_star: usize, cfg: &IcaConfig) -> Result<IcaModel> {
    let (m, d) = x.shape();
    if m <= d_star || d_star == 0 || d_star > d {
        return Err(Error::InsufficientData(format!(
            "ICA to {d_star} components needs more than {d_star} samples (have {m}x{d})"
        )));
    }
    let mean = column_means(x);
    let xc = center(x, &mean);
    let cov = matmul_tn(&xc, &xc) / m as f64;
    let eig = symmetric_eigen(&cov)?;
    let mut whitening = DMatrix::zeros(d_star, d);
    for k in 0..d_star {
        let src = d - 1 - k;
        let l = eig.values[src];
        if !(l > 1e-12 * eig.values[d - 1].max(f64::MIN_POSITIVE)) {
            return Err(Error::Rank(format!("data has fewer than {d_star} non-degenerate directions")));
        }
        whitening.set_row(k, &(eig.vectors.column(src).transpose() / libm::sqrt(l)));
    }
    // Whitened data, d* × M.
    let z = matmul_nt(&whitening, &xc);

    let mut r = rng::stream(cfg.seed, streams::ICA_INIT);
    let init = DMatrix::from_fn(d_star, d_star, |_, _| StandardNormal.sample(&mut r));
    let mut w = symmetric_decorrelation(&init)?;
    let mut converged = false;
    let mut iterations = 0;
    let inv_m = 1.0 / m as f64;
    while iterations < cfg.max_iter {
        iterations += 1;
        let u = matmul(&w, &z);
        let g = u.map(|v| v * v * v);
        let g_prime_mean = DVector::from_iterator(d_star, u.row_iter().map(|row| 3.0 * row.iter().map(|v| v * v).sum::<f64>() * inv_m));
        let mut next = matmul_nt(&g, &z) * inv_m;
        for i in 0..d_star {
            for j in 0..d_star {
                next[(i, j)] -= g_prime_mean[i] * w[(i, j)];
            }
        }
        let next = symmetric_decorrelation(&next)?;
        let change = (0..d_star)
            .map(|i| libm::fabs(1.0 - libm::fabs(next.row(i).dot(&w.row(i)))))
            .fold(0.0, f64::max);
        w = next;
        if change < cfg.tol {
            converged = true;
            break;
        }
    }

    let sources = matmul(&w, &z);
    let threshold = 4.0 * libm::sqrt(24.0 / m as f64);
    let gaussian_components = sources
        .row_iter()
        .filter(|row| {
            let m2 = row.iter().map(|v| v * v).sum::<f64>() * inv_m;
            let m4 = row.iter().map(|v| v * v * v * v).sum::<f64>() * inv_m;
            libm::fabs(m4 / (m2 * m2) - 3.0) < threshold
        })
        .count();
    Ok(IcaModel {
        unmixing: matmul(&w, &whitening),
        whitening,
        rotation: w,
        mean,
        iterations,
        converged,
        gaussian_components,
    })
}

impl IcaModel {
    pub fn input_dims(&self) -> usize {
        self.unmixing.ncols()
    }

    pub fn output_dims(&self) -> usize {
        self.unmixing.nrows()
    }

    /// Estimated sources, one row per sample.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        expect_cols(x, self.input_dims())?;
        Ok(matmul_nt(&center(x, &self.mean), &self.unmixing))
    }

    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::Convergence { what: "FastICA", iterations: self.iterations })
        }
    }

    /// False when some recovered component looks Gaussian, in which case
    /// its direction is not identifiable.
    pub fn is_identifiable(&self) -> bool {
        self.gaussian_components == 0
    }
}

pub fn ica_transform(model: &IcaModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    model.transform(x)
}
