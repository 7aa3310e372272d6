//! Classical feature extraction: fit on a training matrix, then map any
//! matrix with the same width to `d*` columns.

pub mod ica;
pub mod lle;
pub mod nmf;
pub mod pca;
pub mod rbm;
pub mod spectral;

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::binfmt::{Reader, Writer};
use crate::error::{Error, Result};

pub use ica::{ica_fit, ica_transform, IcaConfig, IcaModel};
pub use lle::{lle_fit, lle_fit_transform, LleConfig, LleModel};
pub use nmf::{nmf_fit, nmf_transform, NmfConfig, NmfModel};
pub use pca::{pca_fit, pca_transform, PcaModel};
pub use rbm::{rbm_fit, rbm_transform, RbmConfig, RbmModel};
pub use spectral::{se_fit, se_fit_transform, SeConfig, SeModel};

const MAGIC: &[u8] = b"QRDR";
const VERSION: u8 = 1;

/// Method choice plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum ClassicalReducer {
    Pca,
    Ica(#[serde(default)] IcaConfig),
    Lle(#[serde(default)] LleConfig),
    Spectral(#[serde(default)] SeConfig),
    Nmf(#[serde(default)] NmfConfig),
    Rbm(#[serde(default)] RbmConfig),
}

impl ClassicalReducer {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Pca => "pca",
            Self::Ica(_) => "ica",
            Self::Lle(_) => "lle",
            Self::Spectral(_) => "spectral",
            Self::Nmf(_) => "nmf",
            Self::Rbm(_) => "rbm",
        }
    }

    pub fn fit(&self, x: &DMatrix<f64>, d_star: usize) -> Result<ReducerModel> {
        Ok(match self {
            Self::Pca => ReducerModel::Pca(pca_fit(x, d_star)?),
            Self::Ica(c) => ReducerModel::Ica(ica_fit(x, d_star, c)?),
            Self::Lle(c) => ReducerModel::Lle(lle_fit(x, d_star, c)?),
            Self::Spectral(c) => ReducerModel::Spectral(se_fit(x, d_star, c)?),
            Self::Nmf(c) => ReducerModel::Nmf(nmf_fit(x, d_star, c)?),
            Self::Rbm(c) => ReducerModel::Rbm(rbm_fit(x, d_star, c)?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReducerModel {
    Pca(PcaModel),
    Ica(IcaModel),
    Lle(LleModel),
    Spectral(SeModel),
    Nmf(NmfModel),
    Rbm(RbmModel),
}

impl ReducerModel {
    pub fn method(&self) -> &'static str {
        match self {
            Self::Pca(_) => "pca",
            Self::Ica(_) => "ica",
            Self::Lle(_) => "lle",
            Self::Spectral(_) => "spectral",
            Self::Nmf(_) => "nmf",
            Self::Rbm(_) => "rbm",
        }
    }

    pub fn input_dims(&self) -> usize {
        match self {
            Self::Pca(m) => m.input_dims(),
            Self::Ica(m) => m.input_dims(),
            Self::Lle(m) => m.input_dims(),
            Self::Spectral(m) => m.input_dims(),
            Self::Nmf(m) => m.input_dims(),
            Self::Rbm(m) => m.input_dims(),
        }
    }

    pub fn output_dims(&self) -> usize {
        match self {
            Self::Pca(m) => m.output_dims(),
            Self::Ica(m) => m.output_dims(),
            Self::Lle(m) => m.output_dims(),
            Self::Spectral(m) => m.output_dims(),
            Self::Nmf(m) => m.output_dims(),
            Self::Rbm(m) => m.output_dims(),
        }
    }

    pub fn transform(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match self {
            Self::Pca(m) => m.transform(x),
            Self::Ica(m) => m.transform(x),
            Self::Lle(m) => m.transform(x),
            Self::Spectral(m) => m.transform(x),
            Self::Nmf(m) => m.transform(x),
            Self::Rbm(m) => m.transform(x),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(MAGIC);
        w.u8(VERSION);
        w.str(self.method());
        match self {
            Self::Pca(m) => {
                w.matrix(&m.components);
                w.f64s(m.mean.as_slice());
                w.f64s(&m.explained_variance);
                w.f64(m.total_variance);
            }
            Self::Ica(m) => {
                w.u64(m.iterations as u64);
                w.u8(u8::from(m.converged));
                w.u64(m.gaussian_components as u64);
                w.matrix(&m.unmixing);
                w.matrix(&m.whitening);
                w.matrix(&m.rotation);
                w.f64s(m.mean.as_slice());
            }
            Self::Lle(m) => {
                w.u64(m.config.k_neighbors as u64);
                w.f64(m.config.reg);
                w.matrix(&m.training_points);
                w.matrix(&m.embedding);
                write_lists(&mut w, &m.neighbors);
                w.u64(m.weights.len() as u64);
                m.weights.iter().for_each(|r| w.f64s(r));
                w.f64s(&m.eigenvalues);
            }
            Self::Spectral(m) => {
                w.u64(m.config.k_neighbors as u64);
                w.matrix(&m.training_points);
                write_lists(&mut w, &m.adjacency);
                write_indices(&mut w, &m.components);
                w.matrix(&m.embedding);
                w.f64s(&m.eigenvalues);
            }
            Self::Nmf(m) => {
                w.f64(m.config.l1);
                w.u64(m.config.max_iter as u64);
                w.f64(m.config.tol);
                w.matrix(&m.basis);
                w.f64s(&m.objective_history);
            }
            Self::Rbm(m) => {
                w.f64(m.config.learning_rate);
                w.u64(m.config.batch_size as u64);
                w.u64(m.config.epochs as u64);
                w.u64(m.config.seed);
                w.matrix(&m.weights);
                w.f64s(m.visible_bias.as_slice());
                w.f64s(m.hidden_bias.as_slice());
                w.matrix(&m.persistent_chain);
                w.f64s(&m.reconstruction_errors);
            }
        }
        w.finish()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        r.expect(MAGIC)?;
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::Format(alloc::format!("unsupported reducer blob version {version}")));
        }
        let tag: String = r.str()?;
        let model = match tag.as_str() {
            "pca" => Self::Pca(PcaModel {
                components: r.matrix()?,
                mean: DVector::from_vec(r.f64s()?),
                explained_variance: r.f64s()?,
                total_variance: r.f64()?,
            }),
            "ica" => {
                let iterations = r.len()?;
                let converged = r.u8()? != 0;
                let gaussian_components = r.len()?;
                Self::Ica(IcaModel {
                    unmixing: r.matrix()?,
                    whitening: r.matrix()?,
                    rotation: r.matrix()?,
                    mean: DVector::from_vec(r.f64s()?),
                    iterations,
                    converged,
                    gaussian_components,
                })
            }
            "lle" => {
                let config = LleConfig { k_neighbors: r.len()?, reg: r.f64()? };
                let training_points = r.matrix()?;
                let embedding = r.matrix()?;
                let neighbors = read_lists(&mut r)?;
                let n = r.len()?;
                let weights = (0..n).map(|_| r.f64s()).collect::<Result<Vec<_>>>()?;
                Self::Lle(LleModel { config, training_points, embedding, neighbors, weights, eigenvalues: r.f64s()? })
            }
            "spectral" => {
                let config = SeConfig { k_neighbors: r.len()? };
                Self::Spectral(SeModel {
                    config,
                    training_points: r.matrix()?,
                    adjacency: read_lists(&mut r)?,
                    components: read_indices(&mut r)?,
                    embedding: r.matrix()?,
                    eigenvalues: r.f64s()?,
                })
            }
            "nmf" => {
                let config = NmfConfig { l1: r.f64()?, max_iter: r.len()?, tol: r.f64()? };
                Self::Nmf(NmfModel { config, basis: r.matrix()?, objective_history: r.f64s()? })
            }
            "rbm" => {
                let config = RbmConfig {
                    learning_rate: r.f64()?,
                    batch_size: r.len()?,
                    epochs: r.len()?,
                    seed: r.u64()?,
                };
                Self::Rbm(RbmModel {
                    config,
                    weights: r.matrix()?,
                    visible_bias: DVector::from_vec(r.f64s()?),
                    hidden_bias: DVector::from_vec(r.f64s()?),
                    persistent_chain: r.matrix()?,
                    reconstruction_errors: r.f64s()?,
                })
            }
            other => return Err(Error::Format(alloc::format!("unknown reducer method {other:?}"))),
        };
        r.finish()?;
        Ok(model)
    }
}

fn write_indices(w: &mut Writer, v: &[usize]) {
    w.u64(v.len() as u64);
    v.iter().for_each(|&i| w.u64(i as u64));
}

fn read_indices(r: &mut Reader) -> Result<Vec<usize>> {
    let n = r.len()?;
    (0..n).map(|_| r.len()).collect()
}

fn write_lists(w: &mut Writer, lists: &[Vec<usize>]) {
    w.u64(lists.len() as u64);
    lists.iter().for_each(|l| write_indices(w, l));
}

fn read_lists(r: &mut Reader) -> Result<Vec<Vec<usize>>> {
    let n = r.len()?;
    (0..n).map(|_| read_indices(r)).collect()
}
