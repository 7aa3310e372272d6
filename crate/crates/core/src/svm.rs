//! Soft-margin kernel SVM trained on a precomputed Gram matrix.
//!
//! The dual problem
//! `max Σα_i − ½ Σ_ij α_i α_j y_i y_j k_ij` subject to `0 ≤ α_i ≤ C` and
//! `Σ α_i y_i = 0` is solved by sequential minimal optimisation with
//! maximal-violating-pair selection. Once the working-set rule stops, the
//! multipliers strictly inside the box are optionally re-solved exactly from
//! the stationarity conditions on that face.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::metrics;

pub const DEFAULT_C_GRID: [f64; 5] = [1e-3, 1e-2, 1e-1, 1.0, 10.0];
/// Multipliers above this count as support vectors.
pub const SUPPORT_THRESHOLD: f64 = 1e-8;
const TAU: f64 = 1e-12;
// Tolerance of the refinement pass relative to the stopping tolerance.
const REFINE_FACTOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SmoConfig {
    /// Stop once the maximal KKT violation `m(α) − M(α)` is below this.
    pub tolerance: f64,
    /// Iteration budget per training sample.
    pub max_iterations_per_sample: usize,
    /// Re-solve the free multipliers exactly after SMO stops.
    pub polish: bool,
}

impl Default for SmoConfig {
    fn default() -> Self {
        Self { tolerance: 1e-3, max_iterations_per_sample: 10_000, polish: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSvmModel {
    pub c: f64,
    pub alphas: Vec<f64>,
    /// Training labels as ±1.
    pub labels: Vec<f64>,
    pub bias: f64,
    pub support_indices: Vec<usize>,
    pub iterations: usize,
}

/// Maps class 1 to +1 and class 0 to −1.
pub fn signed_labels(labels: &[u8]) -> Result<Vec<f64>> {
    labels
        .iter()
        .enumerate()
        .map(|(i, &l)| match l {
            0 => Ok(-1.0),
            1 => Ok(1.0),
            other => Err(Error::Domain(alloc::format!("label {other} at position {i} is not 0 or 1"))),
        })
        .collect()
}

fn check_gram(gram: &DMatrix<f64>, n: usize) -> Result<()> {
    if gram.nrows() != n || gram.ncols() != n {
        return Err(shape_err(alloc::format!("{n}x{n} Gram matrix"), alloc::format!("{}x{}", gram.nrows(), gram.ncols())));
    }
    for i in 0..n {
        for j in 0..i {
            let (a, b) = (gram[(i, j)], gram[(j, i)]);
            if !a.is_finite() || (a - b).abs() > 1e-9 * (1.0 + a.abs()) {
                return Err(Error::Domain(alloc::format!("Gram matrix not symmetric at ({i}, {j})")));
            }
        }
        if !gram[(i, i)].is_finite() {
            return Err(Error::Domain(alloc::format!("non-finite Gram entry at ({i}, {i})")));
        }
    }
    Ok(())
}

fn in_up(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

/// Fits the dual for class labels in {0, 1}.
pub fn solve_dual(gram: &DMatrix<f64>, labels: &[u8], c: f64, cfg: &SmoConfig) -> Result<KernelSvmModel> {
    let y = signed_labels(labels)?;
    solve_dual_signed(gram, &y, c, cfg)
}

/// Fits the dual for labels in {−1, +1}.
pub fn solve_dual_signed(gram: &DMatrix<f64>, y: &[f64], c: f64, cfg: &SmoConfig) -> Result<KernelSvmModel> {
    let n = y.len();
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidConfig(alloc::format!("C must be positive and finite, got {c}")));
    }
    if !(cfg.tolerance > 0.0) || cfg.max_iterations_per_sample == 0 {
        return Err(Error::InvalidConfig("SMO tolerance and iteration budget must be positive".into()));
    }
    if let Some(i) = y.iter().position(|&v| v != 1.0 && v != -1.0) {
        return Err(Error::Domain(alloc::format!("label {} at position {i} is not ±1", y[i])));
    }
    check_gram(gram, n)?;
    if !(y.iter().any(|&v| v > 0.0) && y.iter().any(|&v| v < 0.0)) {
        return Err(Error::DegenerateLabels);
    }

    let mut alpha = vec![0.0; n];
    // Gradient of ½αᵀQα − eᵀα.
    let mut grad = vec![-1.0; n];
    let max_iter = cfg.max_iterations_per_sample.saturating_mul(n);
    let iter = smo_steps(gram, y, c, &mut alpha, &mut grad, cfg.tolerance, max_iter)
        .map_err(|iterations| Error::SolverStall { iterations })?;

    if cfg.polish {
        if let Some((a, g)) = polish(gram, y, c, &alpha, cfg.tolerance, max_iter) {
            alpha = a;
            grad = g;
        }
    }
    let bias = bias_from_gradient(&alpha, y, &grad, c);
    let support_indices = (0..n).filter(|&t| alpha[t] > SUPPORT_THRESHOLD).collect();
    Ok(KernelSvmModel { c, alphas: alpha, labels: y.to_vec(), bias, support_indices, iterations: iter })
}

/// Pairwise updates until the violation drops below `tolerance`; returns the
/// number of updates, or `Err` with that count once `max_iter` is reached.
fn smo_steps(
    gram: &DMatrix<f64>,
    y: &[f64],
    c: f64,
    alpha: &mut [f64],
    grad: &mut [f64],
    tolerance: f64,
    max_iter: usize,
) -> core::result::Result<usize, usize> {
    let q = |i: usize, j: usize| y[i] * y[j] * gram[(i, j)];
    let mut iter = 0;
    loop {
        let (i, j, violation) = working_pair(alpha, y, grad, c);
        if violation < tolerance {
            break;
        }
        if iter >= max_iter {
            return Err(iter);
        }
        iter += 1;

        let (ai_old, aj_old) = (alpha[i], alpha[j]);
        let (ci, cj) = (c, c);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > ci - cj {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = ci - diff;
                }
            } else if alpha[j] > cj {
                alpha[j] = cj;
                alpha[i] = cj + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > ci {
                if alpha[i] > ci {
                    alpha[i] = ci;
                    alpha[j] = sum - ci;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > cj {
                if alpha[j] > cj {
                    alpha[j] = cj;
                    alpha[i] = sum - cj;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - ai_old, alpha[j] - aj_old);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
    }
    Ok(iter)
}

/// Maximal violating pair `(i, j)` and the violation `m(α) − M(α)`;
/// the violation is −∞ when either index set is empty.
fn working_pair(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> (usize, usize, f64) {
    let (mut gmax, mut gmin) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut i, mut j) = (usize::MAX, usize::MAX);
    for t in 0..alpha.len() {
        let v = -y[t] * grad[t];
        if in_up(y[t], alpha[t], c) && v > gmax {
            gmax = v;
            i = t;
        }
        if in_low(y[t], alpha[t], c) && v < gmin {
            gmin = v;
            j = t;
        }
    }
    if i == usize::MAX || j == usize::MAX {
        return (i, j, f64::NEG_INFINITY);
    }
    (i, j, gmax - gmin)
}

fn gradient(gram: &DMatrix<f64>, y: &[f64], alpha: &[f64]) -> Vec<f64> {
    (0..y.len())
        .map(|i| (0..y.len()).map(|j| y[i] * y[j] * gram[(i, j)] * alpha[j]).sum::<f64>() - 1.0)
        .collect()
}

fn dual_value(alpha: &[f64], grad: &[f64]) -> f64 {
    // eᵀα − ½αᵀQα = −½αᵀ(∇ − e)
    -alpha.iter().zip(grad).map(|(a, g)| 0.5 * a * (g - 1.0)).sum::<f64>()
}

// Stationary point of the dual on the face where the free set F varies and
// every other multiplier is held at its bound (U: those at C):
// Q_FF α_F + ν y_F = 1 − Q_FU C, y_Fᵀ α_F = −y_Uᵀ C.
fn face_solve(gram: &DMatrix<f64>, y: &[f64], c: f64, alpha: &[f64], free: &[usize]) -> Option<Vec<f64>> {
    let n = y.len();
    let upper: Vec<usize> = (0..n).filter(|&i| alpha[i] >= c && !free.contains(&i)).collect();
    let m = free.len();
    let mut sys = DMatrix::zeros(m + 1, m + 1);
    let mut rhs = DVector::zeros(m + 1);
    for (r, &i) in free.iter().enumerate() {
        for (s, &j) in free.iter().enumerate() {
            sys[(r, s)] = y[i] * y[j] * gram[(i, j)];
        }
        sys[(r, m)] = y[i];
        sys[(m, r)] = y[i];
        rhs[r] = 1.0 - upper.iter().map(|&j| y[i] * y[j] * gram[(i, j)] * c).sum::<f64>();
    }
    rhs[m] = -upper.iter().map(|&j| y[j] * c).sum::<f64>();
    let sol = sys.clone().svd(true, true).solve(&rhs, 1e-13).ok()?;
    if !((&sys * &sol - &rhs).norm() <= 1e-9 * (1.0 + rhs.norm())) {
        return None;
    }
    Some(sol.iter().take(m).copied().collect())
}

// Active-set refinement of the SMO point. Each pass moves the free
// multipliers toward the face optimum, stopping at the first bound that is
// reached; that multiplier is pinned and the face shrinks. The result is kept
// only if it meets the stopping rule and does not lower the dual objective.
fn polish(
    gram: &DMatrix<f64>,
    y: &[f64],
    c: f64,
    alpha: &[f64],
    tolerance: f64,
    max_iter: usize,
) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = y.len();
    let mut next = alpha.to_vec();
    // Settle which multipliers sit at a bound before solving on the face; an
    // exhausted budget still leaves a usable starting point.
    let mut grad = gradient(gram, y, &next);
    let _ = smo_steps(gram, y, c, &mut next, &mut grad, tolerance * REFINE_FACTOR, max_iter);
    let mut free: Vec<usize> = (0..n).filter(|&i| next[i] > 0.0 && next[i] < c).collect();
    while !free.is_empty() {
        let sol = face_solve(gram, y, c, &next, &free)?;
        let mut step = 1.0;
        let mut hit = None;
        for (r, &i) in free.iter().enumerate() {
            let d = sol[r] - next[i];
            let room = if d > 0.0 {
                (c - next[i]) / d
            } else if d < 0.0 {
                -next[i] / d
            } else {
                f64::INFINITY
            };
            if room < step {
                step = room;
                hit = Some((i, if d > 0.0 { c } else { 0.0 }));
            }
        }
        for (r, &i) in free.iter().enumerate() {
            next[i] = (next[i] + step * (sol[r] - next[i])).clamp(0.0, c);
        }
        let Some((h, bound)) = hit else { break };
        next[h] = bound;
        free.retain(|&i| next[i] > 0.0 && next[i] < c);
    }
    let grad = gradient(gram, y, &next);
    let (_, _, violation) = working_pair(&next, y, &grad, c);
    let old = dual_value(alpha, &gradient(gram, y, alpha));
    if violation < tolerance && dual_value(&next, &grad) >= old {
        Some((next, grad))
    } else {
        None
    }
}

// Mean of y_i − Σ_j α_j y_j k_ij over free multipliers; without any, the
// midpoint of the interval the bounded multipliers allow.
fn bias_from_gradient(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> f64 {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    let (mut sum, mut free) = (0.0, 0usize);
    for t in 0..alpha.len() {
        // −y_t ∇_t = y_t − Σ_j α_j y_j k_tj
        let v = -y[t] * grad[t];
        if alpha[t] > 0.0 && alpha[t] < c {
            sum += v;
            free += 1;
        } else if in_up(y[t], alpha[t], c) {
            lo = lo.max(v);
        } else {
            hi = hi.min(v);
        }
    }
    if free > 0 {
        sum / free as f64
    } else if lo.is_finite() && hi.is_finite() {
        (lo + hi) / 2.0
    } else if lo.is_finite() {
        lo
    } else {
        hi
    }
}

impl KernelSvmModel {
    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// `f(x) = Σ α_i y_i k(x_i, x) + b` for each row of a test×train kernel block.
    pub fn decision_values(&self, gram_cross: &DMatrix<f64>) -> Result<Vec<f64>> {
        if gram_cross.ncols() != self.len() {
            return Err(shape_err(alloc::format!("{} kernel columns", self.len()), alloc::format!("{}", gram_cross.ncols())));
        }
        Ok((0..gram_cross.nrows())
            .map(|r| {
                self.support_indices.iter().map(|&i| self.alphas[i] * self.labels[i] * gram_cross[(r, i)]).sum::<f64>() + self.bias
            })
            .collect())
    }

    /// Dual objective `Σα_i − ½ Σ_ij α_i α_j y_i y_j k_ij`.
    pub fn dual_objective(&self, gram: &DMatrix<f64>) -> f64 {
        let n = self.len();
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += self.alphas[i] * self.alphas[j] * self.labels[i] * self.labels[j] * gram[(i, j)];
            }
        }
        self.alphas.iter().sum::<f64>() - 0.5 * quad
    }

    /// `Σ α_i y_i`; zero at any feasible point.
    pub fn equality_residual(&self) -> f64 {
        self.alphas.iter().zip(&self.labels).map(|(a, y)| a * y).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridEntry {
    pub c: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub entries: Vec<GridEntry>,
    pub selected_c: f64,
    pub model: KernelSvmModel,
}

/// Index of the best entry; ties resolve to the smaller C.
pub fn select_entry(entries: &[GridEntry]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (k, e) in entries.iter().enumerate() {
        best = match best {
            None => Some(k),
            Some(b) => {
                let cur = entries[b];
                if e.auc > cur.auc || (e.auc == cur.auc && e.c < cur.c) {
                    Some(k)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Fits one model per C and keeps the one with the highest validation AUC.
pub fn grid_search_c(
    gram_train: &DMatrix<f64>,
    labels_train: &[u8],
    gram_val_cross: &DMatrix<f64>,
    labels_val: &[u8],
    grid: &[f64],
    cfg: &SmoConfig,
) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty C grid".into()));
    }
    let mut entries = Vec::with_capacity(grid.len());
    let mut models = Vec::with_capacity(grid.len());
    for &c in grid {
        let model = solve_dual(gram_train, labels_train, c, cfg)?;
        let auc = metrics::auc(&model.decision_values(gram_val_cross)?, labels_val)?;
        entries.push(GridEntry { c, auc });
        models.push(model);
    }
    let best = select_entry(&entries).expect("non-empty grid");
    Ok(GridSearchResult { selected_c: entries[best].c, model: models.swap_remove(best), entries })
}
