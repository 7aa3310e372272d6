//! Non-negative matrix factorisation under the generalised KL divergence,
//! with L1 penalties on both factors and NNDSVDA initialisation.
//!
//! Samples are columns of `V = Xᵀ` (D × M), factored as `V ≈ W H` with a
//! `D × d*` basis `W`.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matmul, matmul_nt, matmul_tn, symmetric_eigen};
use crate::matrix::expect_cols;

const TINY: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NmfConfig {
    pub l1: f64,
    pub max_iter: usize,
    /// Relative objective change below which iteration stops.
    pub tol: f64,
}

impl Default for NmfConfig {
    fn default() -> Self {
        Self { l1: 1e-4, max_iter: 500, tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmfModel {
    pub config: NmfConfig,
    /// `D × d*`, non-negative.
    pub basis: DMatrix<f64>,
    /// Regularised objective after every update, starting at the initialisation.
    pub objective_history: Vec<f64>,
}

fn check_non_negative(x: &DMatrix<f64>) -> Result<()> {
    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            if !(x[(i, j)] >= 0.0) {
                return Err(Error::NegativeInput { row: i, col: j });
            }
        }
    }
    Ok(())
}

/// Generalised KL divergence `Σ v ln(v / wh) − v + wh`.
pub fn kl_divergence(v: &DMatrix<f64>, wh: &DMatrix<f64>) -> f64 {
    v.iter()
        .zip(wh.iter())
        .map(|(&a, &b)| {
            let b = b.max(TINY);
            if a > 0.0 {
                a * libm::log(a / b) - a + b
            } else {
                b
            }
        })
        .sum()
}

fn objective(v: &DMatrix<f64>, w: &DMatrix<f64>, h: &DMatrix<f64>, l1: f64) -> f64 {
    kl_divergence(v, &matmul(w, h)) + l1 * (w.sum() + h.sum())
}

/// `V ⊘ (W H)`, with zero wherever `V` is zero.
fn ratio(v: &DMatrix<f64>, w: &DMatrix<f64>, h: &DMatrix<f64>) -> DMatrix<f64> {
    let mut wh = matmul(w, h);
    wh.zip_apply(v, |q, a| *q = if a > 0.0 { a / q.max(TINY) } else { 0.0 });
    wh
}

fn update_h(v: &DMatrix<f64>, w: &DMatrix<f64>, h: &mut DMatrix<f64>, l1: f64) {
    let num = matmul_tn(w, &ratio(v, w, h));
    let col_sums: Vec<f64> = w.column_iter().map(|c| c.sum()).collect();
    for j in 0..h.ncols() {
        for k in 0..h.nrows() {
            h[(k, j)] *= num[(k, j)] / (col_sums[k] + l1).max(TINY);
        }
    }
}

fn update_w(v: &DMatrix<f64>, w: &mut DMatrix<f64>, h: &DMatrix<f64>, l1: f64) {
    let num = matmul_nt(&ratio(v, w, h), h);
    let row_sums: Vec<f64> = h.row_iter().map(|r| r.sum()).collect();
    for k in 0..w.ncols() {
        for i in 0..w.nrows() {
            w[(i, k)] *= num[(i, k)] / (row_sums[k] + l1).max(TINY);
        }
    }
}

/// NNDSVD with zeros replaced by the mean of `v`.
pub fn nndsvda(v: &DMatrix<f64>, rank: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (d, m) = v.shape();
    let eig = symmetric_eigen(&matmul_nt(v, v))?;
    let mut w = DMatrix::zeros(d, rank);
    let mut h = DMatrix::zeros(rank, m);
    for j in 0..rank.min(d) {
        let src = d - 1 - j;
        let sigma = libm::sqrt(eig.values[src].max(0.0));
        if sigma <= 1e-12 {
            continue;
        }
        let u = eig.vectors.column(src).into_owned();
        let vt = v.transpose() * &u / sigma;
        let (uc, vc, s) = if j == 0 {
            (u.abs(), vt.abs(), sigma)
        } else {
            let up = u.map(|x| x.max(0.0));
            let un = u.map(|x| (-x).max(0.0));
            let vp = vt.map(|x| x.max(0.0));
            let vn = vt.map(|x| (-x).max(0.0));
            let (nup, nun, nvp, nvn) = (up.norm(), un.norm(), vp.norm(), vn.norm());
            let (mp, mn) = (nup * nvp, nun * nvn);
            if mp > mn {
                (up / nup.max(TINY), vp / nvp.max(TINY), sigma * mp)
            } else {
                (un / nun.max(TINY), vn / nvn.max(TINY), sigma * mn)
            }
        };
        let scale = libm::sqrt(s);
        w.set_column(j, &(uc * scale));
        h.set_row(j, &(vc.transpose() * scale));
    }
    let avg = v.mean();
    let fill = |x: &mut f64| {
        if *x < 1e-6 {
            *x = avg;
        }
    };
    w.iter_mut().for_each(fill);
    h.iter_mut().for_each(fill);
    Ok((w, h))
}

fn iterate(
    v: &DMatrix<f64>,
    w: &mut DMatrix<f64>,
    h: &mut DMatrix<f64>,
    cfg: &NmfConfig,
    fit_basis: bool,
    history: &mut Vec<f64>,
) {
    let mut prev = objective(v, w, h, cfg.l1);
    history.push(prev);
    for _ in 0..cfg.max_iter {
        update_h(v, w, h, cfg.l1);
        if fit_basis {
            update_w(v, w, h, cfg.l1);
        }
        let cur = objective(v, w, h, cfg.l1);
        history.push(cur);
        let rel = (prev - cur) / prev.abs().max(TINY);
        prev = cur;
        if rel.abs() < cfg.tol {
            break;
        }
    }
}

pub fn nmf_fit(x: &DMatrix<f64>, d_star: usize, cfg: &NmfConfig) -> Result<NmfModel> {
    let (m, d) = x.shape();
    if m == 0 || d_star == 0 || d_star > d {
        return Err(Error::InsufficientData(format!("NMF rank {d_star} on {m}x{d} data")));
    }
    check_non_negative(x)?;
    let v = x.transpose();
    let (mut w, mut h) = nndsvda(&v, d_star)?;
    let mut history = Vec::new();
    iterate(&v, &mut w, &mut h, cfg, true, &mut history);
    Ok(NmfModel { config: *cfg, basis: w, objective_history: history })
}

impl NmfModel {
    pub fn input_dims(&self) -> usize {
        self.basis.nrows()
    }

    pub fn output_dims(&self) -> usize {
        self.basis.ncols()
    }

    pub fn final_objective(&self) -> f64 {
        *self.objective_history.last().unwrap_or(&f64::NAN)
    }

    /// Coefficients `H` (returned as `M × d*`) with the basis held fixed.
    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        expect_cols(x, self.input_dims())?;
        check_non_negative(x)?;
        let v = x.transpose();
        let k = self.output_dims();
        let start = libm::sqrt(v.mean() / k as f64).max(1e-6);
        let mut h = DMatrix::from_element(k, v.ncols(), start);
        let mut w = self.basis.clone();
        // A fixed iteration count keeps every row independent of the others.
        let cfg = NmfConfig { tol: 0.0, ..self.config };
        iterate(&v, &mut w, &mut h, &cfg, false, &mut Vec::new());
        Ok(h.transpose())
    }
}

pub fn nmf_transform(model: &NmfModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    model.transform(x)
}
