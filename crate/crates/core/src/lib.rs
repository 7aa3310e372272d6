//! Numerical core: dataset handling, dimensionality reduction, a small dense
//! network engine with autoencoders, a statevector quantum kernel and a
//! kernel SVM. `no_std` with `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod autoencoder;
pub mod binfmt;
pub mod dataset;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod nn;
pub mod quantum;
pub mod reduce;
pub mod rng;
pub mod svm;

pub use error::{Error, Result};
pub use matrix::{FeatureMatrix, RAW_FEATURES, REDUCED_FEATURES};
