//! Reconstruction, classification and latent-regularisation losses. Each
//! returns the value together with its gradient.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::error::{shape_err, Error, Result};

pub const BCE_CLAMP: f64 = 1e-7;

fn same_shape(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(shape_err(
            format!("{}x{}", a.nrows(), a.ncols()),
            format!("{}x{}", b.nrows(), b.ncols()),
        ));
    }
    Ok(())
}

/// Mean over all entries of `(x − x̂)²`, with `∂/∂x̂`.
pub fn mse_loss(x: &DMatrix<f64>, x_hat: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
    same_shape(x, x_hat)?;
    let n = x.len().max(1) as f64;
    let diff = x_hat - x;
    let value = diff.iter().map(|d| d * d).sum::<f64>() / n;
    Ok((value, diff * (2.0 / n)))
}

/// Binary cross-entropy averaged over entries, with `∂/∂p`.
///
/// Probabilities are clamped to `[1e-7, 1 − 1e-7]`; the gradient is zero
/// where the clamp is active.
pub fn bce_loss(labels: &DMatrix<f64>, probs: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>)> {
    same_shape(labels, probs)?;
    let n = labels.len().max(1) as f64;
    let mut value = 0.0;
    let mut grad = DMatrix::zeros(probs.nrows(), probs.ncols());
    for ((g, &y), &p) in grad.iter_mut().zip(labels.iter()).zip(probs.iter()) {
        let pc = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
        value -= y * libm::log(pc) + (1.0 - y) * libm::log(1.0 - pc);
        if pc == p {
            *g = (-y / pc + (1.0 - y) / (1.0 - pc)) / n;
        }
    }
    Ok((value / n, grad))
}

/// `KL(N(μ, diag σ²) ‖ N(0, I)) = ½ Σ (σ² + μ² − 1 − ln σ²)` with gradients
/// with respect to `μ` and `σ`.
pub fn kl_standard_normal(mu: &[f64], sigma: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if mu.len() != sigma.len() {
        return Err(shape_err(format!("{} sigmas", mu.len()), format!("{}", sigma.len())));
    }
    if let Some(s) = sigma.iter().find(|&&s| !(s > 0.0)) {
        return Err(Error::Domain(format!("sigma must be positive, got {s}")));
    }
    let mut value = 0.0;
    for (&m, &s) in mu.iter().zip(sigma) {
        value += 0.5 * (s * s + m * m - 1.0 - 2.0 * libm::log(s));
    }
    let grad_mu = mu.to_vec();
    let grad_sigma = sigma.iter().map(|&s| s - 1.0 / s).collect();
    Ok((value, grad_mu, grad_sigma))
}

/// Batch KL from a `log σ²` head: summed over latent dimensions, averaged
/// over rows. Returns the value and gradients for `μ` and `log σ²`.
pub fn kl_logvar(mu: &DMatrix<f64>, logvar: &DMatrix<f64>) -> Result<(f64, DMatrix<f64>, DMatrix<f64>)> {
    same_shape(mu, logvar)?;
    let b = mu.nrows().max(1) as f64;
    let mut value = 0.0;
    for (&m, &lv) in mu.iter().zip(logvar.iter()) {
        value += 0.5 * (libm::exp(lv) + m * m - 1.0 - lv);
    }
    let grad_mu = mu / b;
    let grad_lv = logvar.map(|lv| 0.5 * (libm::exp(lv) - 1.0) / b);
    Ok((value / b, grad_mu, grad_lv))
}
