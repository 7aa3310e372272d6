//! Bernoulli restricted Boltzmann machine trained with persistent
//! contrastive divergence.

use alloc::format;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{matmul, matmul_nt, matmul_tn};
use crate::matrix::expect_cols;
use crate::rng::{self, streams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RbmConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for RbmConfig {
    fn default() -> Self {
        Self { learning_rate: 0.05, batch_size: 100, epochs: 10, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RbmModel {
    pub config: RbmConfig,
    /// `D × d*`
    pub weights: DMatrix<f64>,
    pub visible_bias: DVector<f64>,
    pub hidden_bias: DVector<f64>,
    /// Binary hidden states of the persistent chain, `batch × d*`.
    pub persistent_chain: DMatrix<f64>,
    /// Mean-field reconstruction MSE before training and after each epoch.
    pub reconstruction_errors: Vec<f64>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

fn add_row_bias(m: &mut DMatrix<f64>, b: &DVector<f64>) {
    for (j, mut col) in m.column_iter_mut().enumerate() {
        col.add_scalar_mut(b[j]);
    }
}

impl RbmModel {
    /// Untrained model with explicit parameters.
    pub fn from_parameters(weights: DMatrix<f64>, visible_bias: DVector<f64>, hidden_bias: DVector<f64>) -> Result<Self> {
        if weights.nrows() != visible_bias.len() || weights.ncols() != hidden_bias.len() {
            return Err(crate::error::shape_err(
                format!("{}x{} weights with matching biases", visible_bias.len(), hidden_bias.len()),
                format!("{}x{}", weights.nrows(), weights.ncols()),
            ));
        }
        let h = weights.ncols();
        Ok(Self {
            config: RbmConfig::default(),
            weights,
            visible_bias,
            hidden_bias,
            persistent_chain: DMatrix::zeros(0, h),
            reconstruction_errors: Vec::new(),
        })
    }

    pub fn input_dims(&self) -> usize {
        self.weights.nrows()
    }

    pub fn output_dims(&self) -> usize {
        self.weights.ncols()
    }

    /// `P(h = 1 | v)` for every row.
    pub fn hidden_probabilities(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let mut a = matmul(v, &self.weights);
        add_row_bias(&mut a, &self.hidden_bias);
        a.apply(|x| *x = sigmoid(*x));
        a
    }

    /// `P(v = 1 | h)` for every row.
    pub fn visible_probabilities(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        let mut a = matmul_nt(h, &self.weights);
        add_row_bias(&mut a, &self.visible_bias);
        a.apply(|x| *x = sigmoid(*x));
        a
    }

    pub fn reconstruction_error(&self, x: &DMatrix<f64>) -> f64 {
        let rec = self.visible_probabilities(&self.hidden_probabilities(x));
        (rec - x).map(|d| d * d).mean()
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        expect_cols(x, self.input_dims())?;
        Ok(self.hidden_probabilities(x))
    }
}

pub fn rbm_fit(x: &DMatrix<f64>, d_star: usize, cfg: &RbmConfig) -> Result<RbmModel> {
    let (m, d) = x.shape();
    if m == 0 || d_star == 0 || cfg.batch_size == 0 {
        return Err(Error::InsufficientData(format!("RBM with {d_star} hidden units on {m}x{d} data")));
    }
    for (idx, &v) in x.iter().enumerate() {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Range { index: idx, value: v });
        }
    }
    let mut init = rng::stream(cfg.seed, streams::RBM_INIT);
    let normal = Normal::new(0.0, 0.01).expect("valid normal");
    let weights = DMatrix::from_fn(d, d_star, |_, _| normal.sample(&mut init));
    let mut model = RbmModel::from_parameters(weights, DVector::zeros(d), DVector::zeros(d_star))?;
    model.config = *cfg;
    let batch = cfg.batch_size.min(m);
    model.persistent_chain = DMatrix::zeros(batch, d_star);
    model.reconstruction_errors.push(model.reconstruction_error(x));

    let mut shuffle = rng::stream(cfg.seed, streams::RBM_SHUFFLE);
    let mut gibbs = rng::stream(cfg.seed, streams::RBM_GIBBS);
    for _ in 0..cfg.epochs {
        let order = rng::permutation(&mut shuffle, m);
        for chunk in order.chunks(batch) {
            let v = DMatrix::from_fn(chunk.len(), d, |r, c| x[(chunk[r], c)]);
            let b = chunk.len();
            let h_pos = model.hidden_probabilities(&v);
            let chain = model.persistent_chain.rows(0, b).into_owned();
            let v_neg = model.visible_probabilities(&chain);
            let h_neg = model.hidden_probabilities(&v_neg);

            let scale = cfg.learning_rate / b as f64;
            let grad_w = matmul_tn(&v, &h_pos) - matmul_tn(&v_neg, &h_neg);
            model.weights += grad_w * scale;
            for j in 0..d {
                let s: f64 = (0..b).map(|r| v[(r, j)] - v_neg[(r, j)]).sum();
                model.visible_bias[j] += scale * s;
            }
            for k in 0..d_star {
                let s: f64 = (0..b).map(|r| h_pos[(r, k)] - h_neg[(r, k)]).sum();
                model.hidden_bias[k] += scale * s;
            }
            for r in 0..b {
                for k in 0..d_star {
                    let p = h_neg[(r, k)];
                    model.persistent_chain[(r, k)] = if gibbs.random::<f64>() < p { 1.0 } else { 0.0 };
                }
            }
        }
        model.reconstruction_errors.push(model.reconstruction_error(x));
    }
    Ok(model)
}

pub fn rbm_transform(model: &RbmModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    model.transform(x)
}
