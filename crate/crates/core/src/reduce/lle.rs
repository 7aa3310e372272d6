//! Locally linear embedding with brute-force neighbour search.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{nearest_neighbors, rows_of, solve_symmetric, symmetric_eigen};
use crate::matrix::expect_cols;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LleConfig {
    pub k_neighbors: usize,
    /// Local Gram regulariser `r`; `r · trace(G) / K` is added to the diagonal.
    pub reg: f64,
}

impl Default for LleConfig {
    fn default() -> Self {
        Self { k_neighbors: 12, reg: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LleModel {
    pub config: LleConfig,
    pub training_points: DMatrix<f64>,
    /// `M × d*` coordinates of the training points.
    pub embedding: DMatrix<f64>,
    /// Sparse weight rows: neighbour indices and matching weights.
    pub neighbors: Vec<Vec<usize>>,
    pub weights: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
}

/// Barycentric weights reconstructing `x` from `nbrs`; they sum to one.
pub fn reconstruction_weights(x: &[f64], nbrs: &[&[f64]], reg: f64, index: usize) -> Result<Vec<f64>> {
    let k = nbrs.len();
    let d = x.len();
    let z = DMatrix::from_fn(k, d, |a, c| nbrs[a][c] - x[c]);
    let mut g = &z * z.transpose();
    let trace = g.trace();
    let shift = if trace > 0.0 { reg * trace / k as f64 } else { reg };
    for a in 0..k {
        g[(a, a)] += shift;
    }
    let w = solve_symmetric(g, &DVector::from_element(k, 1.0)).ok_or(Error::DegenerateNeighborhood { index })?;
    let s = w.sum();
    if !(s.is_finite() && libm::fabs(s) > 1e-300) {
        return Err(Error::DegenerateNeighborhood { index });
    }
    Ok(w.iter().map(|v| v / s).collect())
}

pub fn lle_fit(x: &DMatrix<f64>, d_star: usize, cfg: &LleConfig) -> Result<LleModel> {
    let m = x.nrows();
    let k = cfg.k_neighbors;
    if k == 0 || m <= k || d_star == 0 || d_star >= m {
        return Err(Error::InsufficientData(format!(
            "LLE with K={k} and {d_star} components needs more than K samples (have {m})"
        )));
    }
    let pts = rows_of(x);
    let mut neighbors = Vec::with_capacity(m);
    let mut weights = Vec::with_capacity(m);
    for (i, p) in pts.iter().enumerate() {
        let nb = nearest_neighbors(&pts, p, k, Some(i));
        let refs: Vec<&[f64]> = nb.iter().map(|&j| pts[j].as_slice()).collect();
        weights.push(reconstruction_weights(p, &refs, cfg.reg, i)?);
        neighbors.push(nb);
    }

    // (I − W)ᵀ (I − W)
    let mut iw = DMatrix::<f64>::identity(m, m);
    for i in 0..m {
        for (&j, &w) in neighbors[i].iter().zip(&weights[i]) {
            iw[(i, j)] -= w;
        }
    }
    let cost = iw.transpose() * &iw;
    let eig = symmetric_eigen(&cost)?;
    // Skip the bottom (constant) eigenvector.
    let embedding = eig.vectors.columns(1, d_star).into_owned();
    let eigenvalues = eig.values[1..=d_star].to_vec();
    Ok(LleModel { config: *cfg, training_points: x.clone(), embedding, neighbors, weights, eigenvalues })
}

pub fn lle_fit_transform(x: &DMatrix<f64>, d_star: usize, cfg: &LleConfig) -> Result<DMatrix<f64>> {
    Ok(lle_fit(x, d_star, cfg)?.embedding)
}

impl LleModel {
    pub fn input_dims(&self) -> usize {
        self.training_points.ncols()
    }

    pub fn output_dims(&self) -> usize {
        self.embedding.ncols()
    }

    /// Dense `M × M` weight matrix.
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        let m = self.neighbors.len();
        let mut w = DMatrix::zeros(m, m);
        for i in 0..m {
            for (&j, &v) in self.neighbors[i].iter().zip(&self.weights[i]) {
                w[(i, j)] = v;
            }
        }
        w
    }

    /// Out-of-sample extension: each new point is reconstructed from its K
    /// nearest training points and mapped with the same weights.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        expect_cols(x, self.input_dims())?;
        let pts = rows_of(&self.training_points);
        let mut out = DMatrix::zeros(x.nrows(), self.output_dims());
        for (i, q) in rows_of(x).iter().enumerate() {
            let nb = nearest_neighbors(&pts, q, self.config.k_neighbors, None);
            let refs: Vec<&[f64]> = nb.iter().map(|&j| pts[j].as_slice()).collect();
            let w = reconstruction_weights(q, &refs, self.config.reg, i)?;
            for (&j, &wj) in nb.iter().zip(&w) {
                for c in 0..self.output_dims() {
                    out[(i, c)] += wj * self.embedding[(j, c)];
                }
            }
        }
        Ok(out)
    }
}
