//! Desk-scale stand-in for the collision dataset.
//!
//! Each sample carries a six-dimensional latent vector whose distribution
//! depends on the class. The first latent coordinate carries a signed,
//! gapped class offset scaled by `1 − hardness`; the second has a
//! class-dependent spread. A fixed random smooth map (tanh ridges plus
//! quadratic terms, shared by every seed) embeds the latents into the 67
//! feature columns; jet blocks 5–7 are zero-padded depending on a latent
//! "jet multiplicity" and b-tag columns are binarised.

use alloc::vec::Vec;
use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal, Uniform};

use super::event::{feature_names, JET_FEATURES};
use crate::error::{Error, Result};
use crate::matrix::{FeatureMatrix, RAW_FEATURES};
use crate::rng::{self, streams};

pub const LATENT_DIMS: usize = 6;
const MAP_SEED: u64 = 0x5EED_0F_67;
const FEATURE_NOISE: f64 = 0.05;

pub struct SyntheticData {
    pub data: FeatureMatrix,
    /// Generator latents, one row per sample.
    pub latents: DMatrix<f64>,
}

struct SmoothMap {
    ridge: DMatrix<f64>,
    quad: DMatrix<f64>,
    bias: Vec<f64>,
    amp: Vec<f64>,
    curve: Vec<f64>,
    scale: Vec<f64>,
    offset: Vec<f64>,
}

impl SmoothMap {
    fn fixed() -> Self {
        let mut r = rng::stream(MAP_SEED, streams::SYNTHETIC_MAP);
        let norm = 1.0 / libm::sqrt(LATENT_DIMS as f64);
        let gauss = |r: &mut rng::Rng| -> f64 { StandardNormal.sample(r) };
        let ridge = DMatrix::from_fn(RAW_FEATURES, LATENT_DIMS, |_, _| gauss(&mut r) * norm * 1.5);
        let quad = DMatrix::from_fn(RAW_FEATURES, LATENT_DIMS, |_, _| gauss(&mut r) * norm);
        let u = |r: &mut rng::Rng, lo: f64, hi: f64| Uniform::new(lo, hi).expect("valid range").sample(r);
        let bias = (0..RAW_FEATURES).map(|_| u(&mut r, -0.5, 0.5)).collect();
        let amp = (0..RAW_FEATURES).map(|_| u(&mut r, 0.5, 2.0)).collect();
        let curve = (0..RAW_FEATURES).map(|_| u(&mut r, -0.3, 0.3)).collect();
        let scale = (0..RAW_FEATURES).map(|_| libm::exp(u(&mut r, 0.0, 4.0))).collect();
        let offset = (0..RAW_FEATURES).map(|_| u(&mut r, -10.0, 10.0)).collect();
        Self { ridge, quad, bias, amp, curve, scale, offset }
    }

    fn apply(&self, t: &[f64], noise: &mut impl FnMut() -> f64, out: &mut [f64]) {
        for j in 0..RAW_FEATURES {
            let mut lin = self.bias[j];
            let mut q = 0.0;
            for k in 0..LATENT_DIMS {
                lin += self.ridge[(j, k)] * t[k];
                q += self.quad[(j, k)] * t[k];
            }
            let smooth = self.amp[j] * libm::tanh(lin) + self.curve[j] * q * q + FEATURE_NOISE * noise();
            out[j] = self.offset[j] + self.scale[j] * smooth;
        }
        // b-tag columns are binary.
        for slot in 0..7 {
            let c = slot * JET_FEATURES + 4;
            out[c] = if out[c] > self.offset[c] { 1.0 } else { 0.0 };
        }
        // Jet multiplicity between 4 and 7 from the second latent coordinate.
        let extra = [-0.5, 0.3, 1.0].iter().filter(|&&thr| t[1] > thr).count();
        for slot in 4 + extra..7 {
            out[slot * JET_FEATURES..(slot + 1) * JET_FEATURES].fill(0.0);
        }
    }
}

pub fn generate_synthetic(n: usize, seed: u64, hardness: f64) -> Result<FeatureMatrix> {
    Ok(generate_synthetic_with_latents(n, seed, hardness)?.data)
}

pub fn generate_synthetic_with_latents(n: usize, seed: u64, hardness: f64) -> Result<SyntheticData> {
    if n < 2 {
        return Err(Error::InsufficientData("synthetic data needs n >= 2".into()));
    }
    if !(0.0..=1.0).contains(&hardness) {
        return Err(Error::InvalidConfig(alloc::format!("hardness {hardness} outside [0, 1]")));
    }
    let map = SmoothMap::fixed();
    let mut r = rng::stream(seed, streams::SYNTHETIC_SAMPLES);
    let n_signal = n - n / 2;
    let mut labels: Vec<u8> = (0..n).map(|i| u8::from(i < n_signal)).collect();
    let order = rng::permutation(&mut r, n);
    labels = order.iter().map(|&o| labels[o]).collect();

    let sep = 1.0 - hardness;
    let mut values = DMatrix::zeros(n, RAW_FEATURES);
    let mut latents = DMatrix::zeros(n, LATENT_DIMS);
    let mut row = [0.0; RAW_FEATURES];
    for i in 0..n {
        let s = if labels[i] == 1 { 1.0 } else { -1.0 };
        let mut u = [0.0; LATENT_DIMS];
        for v in u.iter_mut() {
            *v = StandardNormal.sample(&mut r);
        }
        let nuisance: f64 = StandardNormal.sample(&mut r);
        let mut t = u;
        t[0] = sep * s * (0.5 + libm::fabs(u[0])) + hardness * nuisance;
        t[1] = u[1] * (1.0 + 0.5 * sep * s);
        let mut noise = || -> f64 { r.sample(StandardNormal) };
        map.apply(&t, &mut noise, &mut row);
        for j in 0..RAW_FEATURES {
            values[(i, j)] = row[j];
        }
        for k in 0..LATENT_DIMS {
            latents[(i, k)] = t[k];
        }
    }
    Ok(SyntheticData {
        data: FeatureMatrix::new(values, labels, feature_names())?,
        latents,
    })
}
