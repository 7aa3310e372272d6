//! Laplacian eigenmaps on a binary, union-symmetrised KNN graph.
//!
//! Eigenvectors are computed from the symmetric normalised Laplacian
//! `I − D^{-1/2} W D^{-1/2}` and mapped back with `u = D^{-1/2} v`, which
//! makes them eigenvectors of the random-walk form `I − D⁻¹W`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{nearest_neighbors, rows_of, symmetric_eigen};
use crate::matrix::expect_cols;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SeConfig {
    pub k_neighbors: usize,
}

impl Default for SeConfig {
    fn default() -> Self {
        Self { k_neighbors: 9 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeModel {
    pub config: SeConfig,
    pub training_points: DMatrix<f64>,
    /// Sorted neighbour lists of the symmetric graph.
    pub adjacency: Vec<Vec<usize>>,
    /// Connected-component id per training point.
    pub components: Vec<usize>,
    /// `M × d*` embedding of the training points.
    pub embedding: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
}

/// Binary KNN graph with an edge whenever either endpoint lists the other.
pub fn knn_graph(pts: &[Vec<f64>], k: usize) -> Vec<Vec<usize>> {
    let m = pts.len();
    let mut adj = vec![Vec::new(); m];
    for (i, p) in pts.iter().enumerate() {
        for j in nearest_neighbors(pts, p, k, Some(i)) {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for a in adj.iter_mut() {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

fn connected_components(adj: &[Vec<usize>]) -> (Vec<usize>, usize) {
    let mut comp = vec![usize::MAX; adj.len()];
    let mut count = 0;
    for start in 0..adj.len() {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = count;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if comp[j] == usize::MAX {
                    comp[j] = count;
                    stack.push(j);
                }
            }
        }
        count += 1;
    }
    (comp, count)
}

/// Symmetric normalised Laplacian of a graph given by adjacency lists.
pub fn normalized_laplacian(adj: &[Vec<usize>]) -> DMatrix<f64> {
    let m = adj.len();
    let inv_sqrt: Vec<f64> = adj.iter().map(|a| if a.is_empty() { 0.0 } else { 1.0 / libm::sqrt(a.len() as f64) }).collect();
    let mut l = DMatrix::identity(m, m);
    for i in 0..m {
        for &j in &adj[i] {
            l[(i, j)] -= inv_sqrt[i] * inv_sqrt[j];
        }
    }
    l
}

/// `(I − D⁻¹W) v`
pub fn random_walk_laplacian_apply(adj: &[Vec<usize>], v: &[f64]) -> Vec<f64> {
    adj.iter()
        .enumerate()
        .map(|(i, a)| {
            if a.is_empty() {
                v[i]
            } else {
                v[i] - a.iter().map(|&j| v[j]).sum::<f64>() / a.len() as f64
            }
        })
        .collect()
}

pub fn se_fit(x: &DMatrix<f64>, d_star: usize, cfg: &SeConfig) -> Result<SeModel> {
    let m = x.nrows();
    let k = cfg.k_neighbors;
    if k == 0 || m <= k || d_star == 0 || d_star >= m {
        return Err(Error::InsufficientData(format!(
            "spectral embedding with K={k} and {d_star} components needs more than K samples (have {m})"
        )));
    }
    let pts = rows_of(x);
    let adjacency = knn_graph(&pts, k);
    let (components, n_comp) = connected_components(&adjacency);
    let sqrt_deg: Vec<f64> = adjacency.iter().map(|a| libm::sqrt(a.len() as f64)).collect();

    // The zero eigenspace is spanned by D^{1/2}·1 on each block. The global
    // vector is dropped; the remaining block contrasts separate components.
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let global = DVector::from_vec(sqrt_deg.clone()).normalize();
    basis.push(global);
    let mut columns: Vec<(f64, DVector<f64>)> = Vec::new();
    for c in 0..n_comp {
        if columns.len() >= d_star {
            break;
        }
        let mut v = DVector::from_fn(m, |i, _| if components[i] == c { sqrt_deg[i] } else { 0.0 });
        for b in &basis {
            let p = b.dot(&v);
            v -= b * p;
        }
        let n = v.norm();
        if n > 1e-10 {
            v /= n;
            basis.push(v.clone());
            columns.push((0.0, v));
        }
    }
    if columns.len() < d_star {
        let eig = symmetric_eigen(&normalized_laplacian(&adjacency))?;
        for idx in n_comp..m {
            if columns.len() == d_star {
                break;
            }
            columns.push((eig.values[idx], eig.vectors.column(idx).into_owned()));
        }
    }
    let mut embedding = DMatrix::zeros(m, d_star);
    let mut eigenvalues = Vec::with_capacity(d_star);
    for (c, (lambda, v)) in columns.into_iter().enumerate() {
        for i in 0..m {
            embedding[(i, c)] = v[i] / sqrt_deg[i];
        }
        eigenvalues.push(lambda);
    }
    Ok(SeModel { config: *cfg, training_points: x.clone(), adjacency, components, embedding, eigenvalues })
}

pub fn se_fit_transform(x: &DMatrix<f64>, d_star: usize, cfg: &SeConfig) -> Result<DMatrix<f64>> {
    Ok(se_fit(x, d_star, cfg)?.embedding)
}

impl SeModel {
    pub fn input_dims(&self) -> usize {
        self.training_points.ncols()
    }

    pub fn output_dims(&self) -> usize {
        self.embedding.ncols()
    }

    pub fn laplacian_apply(&self, v: &[f64]) -> Vec<f64> {
        random_walk_laplacian_apply(&self.adjacency, v)
    }

    /// Nyström extension: a new point joins the graph through its K nearest
    /// training points, so `u(x) = mean_j u_j / (1 − λ)`.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        expect_cols(x, self.input_dims())?;
        let pts = rows_of(&self.training_points);
        let d = self.output_dims();
        // Eigenvalues close to 1 would amplify noise without bound.
        let scale: Vec<f64> = self.eigenvalues.iter().map(|l| 1.0 / (1.0 - l).max(1e-3)).collect();
        let mut out = DMatrix::zeros(x.nrows(), d);
        for (i, q) in rows_of(x).iter().enumerate() {
            let nb = nearest_neighbors(&pts, q, self.config.k_neighbors, None);
            let inv_k = 1.0 / nb.len() as f64;
            for c in 0..d {
                let s: f64 = nb.iter().map(|&j| self.embedding[(j, c)]).sum();
                out[(i, c)] = s * inv_k * scale[c];
            }
        }
        Ok(out)
    }
}
