//! Debiased entropic optimal transport between uniformly weighted point
//! clouds with squared-Euclidean cost, solved in the log domain.
//!
//! The solver anneals ε from the squared diameter of the clouds down to the
//! target value (one Sinkhorn step per stage) and then iterates at the target
//! until the dual potentials stop moving.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SinkhornConfig {
    pub epsilon: f64,
    /// Iteration budget at the target ε (annealing steps are not counted).
    pub max_iterations: usize,
    /// Stop once no dual potential moves by more than this in one
    /// iteration. The relative row-marginal error of the plan is then of
    /// order `tolerance / epsilon`.
    pub tolerance: f64,
    /// Geometric factor between annealing stages, in (0, 1).
    pub scaling: f64,
    /// Over-relaxation factor ω ∈ (0, 2) for the iterations at the target ε;
    /// 1 gives plain Sinkhorn. The fixed point does not depend on ω.
    pub relaxation: f64,
    /// Raise `ConvergenceError` when the budget runs out; otherwise return
    /// the last iterate flagged as unconverged.
    pub strict: bool,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self { epsilon: 0.01, max_iterations: 200, tolerance: 1e-6, scaling: 0.5, relaxation: 1.8, strict: true }
    }
}

/// Dual solution of one entropic OT problem.
#[derive(Debug, Clone)]
pub struct OtSolution {
    pub value: f64,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct SinkhornOutput {
    pub value: f64,
    pub grad_a: DMatrix<f64>,
    pub grad_b: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
}

pub fn cost_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(a.nrows(), b.nrows());
    for i in 0..a.nrows() {
        for j in 0..b.nrows() {
            let mut s = 0.0;
            for k in 0..a.ncols() {
                let d = a[(i, k)] - b[(j, k)];
                s += d * d;
            }
            c[(i, j)] = s;
        }
    }
    c
}

/// Terms this far below the running maximum (in units of ε) underflow
/// relative to it and are skipped.
const LSE_CUTOFF: f64 = -50.0;

/// `out_i = −ε log Σ_j w_j exp((h_j − K_ji)/ε)` over the columns `i` of `k`.
/// Pass the transposed cost for row updates so the scan stays contiguous.
fn softmin(k: &DMatrix<f64>, h: &[f64], log_w: f64, eps: f64, out: &mut [f64]) {
    let inv = 1.0 / eps;
    for (i, col) in k.column_iter().enumerate() {
        let col = col.as_slice();
        let mx = col.iter().zip(h).map(|(c, hj)| (hj - c) * inv).fold(f64::NEG_INFINITY, f64::max);
        let mut s = 0.0;
        for (c, hj) in col.iter().zip(h) {
            let v = (hj - c) * inv - mx;
            if v > LSE_CUTOFF {
                s += libm::exp(v);
            }
        }
        out[i] = -eps * (mx + libm::log(s) + log_w);
    }
}

fn diameter_sq(c: &DMatrix<f64>) -> f64 {
    c.iter().copied().fold(0.0, f64::max)
}

fn epsilon_schedule(c: &DMatrix<f64>, cfg: &SinkhornConfig) -> Vec<f64> {
    let mut out = Vec::new();
    let mut e = diameter_sq(c).max(cfg.epsilon);
    while e > cfg.epsilon {
        out.push(e);
        e *= cfg.scaling;
    }
    out
}

fn max_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter().zip(new).map(|(a, b)| libm::fabs(a - b)).fold(0.0, f64::max)
}

fn check_cfg(cfg: &SinkhornConfig) -> Result<()> {
    if !(cfg.epsilon > 0.0) || !(cfg.scaling > 0.0 && cfg.scaling < 1.0) || !(cfg.relaxation > 0.0 && cfg.relaxation < 2.0) {
        return Err(Error::InvalidConfig(alloc::format!(
            "Sinkhorn needs epsilon > 0, scaling in (0,1) and relaxation in (0,2), got {} / {} / {}",
            cfg.epsilon, cfg.scaling, cfg.relaxation
        )));
    }
    Ok(())
}

fn finish(what: &'static str, cfg: &SinkhornConfig, iterations: usize, converged: bool) -> Result<()> {
    if !converged && cfg.strict {
        return Err(Error::Convergence { what, iterations });
    }
    Ok(())
}

/// `OT_ε(α, β)` between two different clouds with uniform weights.
pub fn entropic_ot(c: &DMatrix<f64>, cfg: &SinkhornConfig) -> Result<OtSolution> {
    check_cfg(cfg)?;
    let (n, m) = c.shape();
    let log_a = -libm::log(n as f64);
    let log_b = -libm::log(m as f64);
    let ct = c.transpose();
    let mut f = vec![0.0; n];
    let mut g = vec![0.0; m];
    for eps in epsilon_schedule(c, cfg) {
        softmin(&ct, &g, log_b, eps, &mut f);
        softmin(c, &f, log_a, eps, &mut g);
    }
    let (eps, w) = (cfg.epsilon, cfg.relaxation);
    let mut tf = vec![0.0; n];
    let mut tg = vec![0.0; m];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        iterations += 1;
        softmin(&ct, &g, log_b, eps, &mut tf);
        let df = max_change(&f, &tf);
        f.iter_mut().zip(&tf).for_each(|(x, t)| *x = (1.0 - w) * *x + w * t);
        softmin(c, &f, log_a, eps, &mut tg);
        let dg = max_change(&g, &tg);
        g.iter_mut().zip(&tg).for_each(|(x, t)| *x = (1.0 - w) * *x + w * t);
        if df.max(dg) < cfg.tolerance {
            converged = true;
            break;
        }
    }
    finish("Sinkhorn", cfg, iterations, converged)?;
    // A final plain g update makes the column marginals exact.
    softmin(c, &f, log_a, eps, &mut g);
    let value = f.iter().sum::<f64>() / n as f64 + g.iter().sum::<f64>() / m as f64;
    Ok(OtSolution { value, f, g, iterations, converged })
}

/// `OT_ε(α, α)` via the symmetric (averaged) fixed point.
pub fn entropic_ot_symmetric(c: &DMatrix<f64>, cfg: &SinkhornConfig) -> Result<OtSolution> {
    check_cfg(cfg)?;
    let n = c.nrows();
    let log_a = -libm::log(n as f64);
    let mut f = vec![0.0; n];
    let mut t = vec![0.0; n];
    for eps in epsilon_schedule(c, cfg) {
        softmin(c, &f, log_a, eps, &mut t);
        f.iter_mut().zip(&t).for_each(|(fi, ti)| *fi = 0.5 * (*fi + ti));
    }
    let eps = cfg.epsilon;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < cfg.max_iterations {
        iterations += 1;
        softmin(c, &f, log_a, eps, &mut t);
        let d = max_change(&f, &t);
        f.iter_mut().zip(&t).for_each(|(fi, ti)| *fi = 0.5 * (*fi + ti));
        if d < cfg.tolerance {
            converged = true;
            break;
        }
    }
    finish("symmetric Sinkhorn", cfg, iterations, converged)?;
    let value = 2.0 * f.iter().sum::<f64>() / n as f64;
    Ok(OtSolution { value, g: f.clone(), f, iterations, converged })
}

/// Transport plan `π_ij = α_i β_j exp((f_i + g_j − C_ij)/ε)`.
pub fn transport_plan(c: &DMatrix<f64>, sol: &OtSolution, eps: f64) -> DMatrix<f64> {
    let (n, m) = c.shape();
    let lw = -libm::log(n as f64) - libm::log(m as f64);
    DMatrix::from_fn(n, m, |i, j| libm::exp((sol.f[i] + sol.g[j] - c[(i, j)]) / eps + lw))
}

/// `Σ_j π_ij · 2 (x_i − y_j)` for every row `i` of `x`.
fn plan_gradient(plan: &DMatrix<f64>, x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(x.nrows(), x.ncols());
    for i in 0..x.nrows() {
        for j in 0..y.nrows() {
            let p = plan[(i, j)];
            if p == 0.0 {
                continue;
            }
            for k in 0..x.ncols() {
                g[(i, k)] += 2.0 * p * (x[(i, k)] - y[(j, k)]);
            }
        }
    }
    g
}

/// `S_ε(a, b) = OT_ε(a, b) − ½ OT_ε(a, a) − ½ OT_ε(b, b)` with gradients
/// with respect to both clouds.
pub fn sinkhorn_divergence(a: &DMatrix<f64>, b: &DMatrix<f64>, cfg: &SinkhornConfig) -> Result<SinkhornOutput> {
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(Error::InsufficientData("Sinkhorn divergence of an empty cloud".into()));
    }
    if a.ncols() != b.ncols() {
        return Err(shape_err(alloc::format!("{} columns", a.ncols()), alloc::format!("{}", b.ncols())));
    }
    let cab = cost_matrix(a, b);
    let caa = cost_matrix(a, a);
    let cbb = cost_matrix(b, b);
    let ab = entropic_ot(&cab, cfg)?;
    let aa = entropic_ot_symmetric(&caa, cfg)?;
    let bb = entropic_ot_symmetric(&cbb, cfg)?;
    let eps = cfg.epsilon;
    let p_ab = transport_plan(&cab, &ab, eps);
    let p_aa = transport_plan(&caa, &aa, eps);
    let p_bb = transport_plan(&cbb, &bb, eps);
    let grad_a = plan_gradient(&p_ab, a, b) - plan_gradient(&p_aa, a, a);
    let grad_b = plan_gradient(&p_ab.transpose(), b, a) - plan_gradient(&p_bb, b, b);
    Ok(SinkhornOutput {
        value: ab.value - 0.5 * aa.value - 0.5 * bb.value,
        grad_a,
        grad_b,
        iterations: ab.iterations.max(aa.iterations).max(bb.iterations),
        converged: ab.converged && aa.converged && bb.converged,
    })
}
