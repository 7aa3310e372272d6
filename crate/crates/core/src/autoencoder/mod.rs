//! Autoencoder reducers: vanilla, variational, classifier-regularised,
//! Sinkhorn-regularised and the combined Sinkhorn-classifier model. Every
//! model maps the input features to a 16-dimensional latent space.

mod model;
mod train;

pub use model::{Autoencoder, Encoder, NoiseGenerator};
pub use train::{
    evaluate_model, reduce, train_autoencoder, train_classifier_ae, train_sinkclass, train_sinkhorn_ae, train_vae,
    train_vanilla, AeMetrics, Batch, EpochLog, LossComponents, TrainedAe, Trainer,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{SinkhornConfig, TrainConfig};

pub const LATENT_DIMS: usize = 16;
/// Hidden widths of the encoder after the input layer; the decoder mirrors
/// them.
pub const ENCODER_HIDDEN: [usize; 5] = [64, 52, 44, 32, 24];
/// Encoder trunk of the variational model; μ and log σ² heads follow.
pub const VAE_TRUNK: [usize; 4] = [64, 52, 44, 32];
pub const CLASSIFIER_WIDTHS: [usize; 6] = [128, 64, 32, 16, 8, 1];
pub const GENERATOR_NOISE_WIDTHS: [usize; 2] = [64, 128];
pub const GENERATOR_LABEL_WIDTH: usize = 64;
pub const GENERATOR_MERGE_WIDTHS: [usize; 3] = [256, 192, LATENT_DIMS];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AeKind {
    Vanilla,
    Variational,
    Classifier,
    Sinkhorn,
    Sinkclass,
}

impl AeKind {
    pub fn name(self) -> &'static str {
        match self {
            AeKind::Vanilla => "vanilla",
            AeKind::Variational => "variational",
            AeKind::Classifier => "classifier",
            AeKind::Sinkhorn => "sinkhorn",
            AeKind::Sinkclass => "sinkclass",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Ok(match s {
            "vanilla" => AeKind::Vanilla,
            "variational" => AeKind::Variational,
            "classifier" => AeKind::Classifier,
            "sinkhorn" => AeKind::Sinkhorn,
            "sinkclass" => AeKind::Sinkclass,
            other => return Err(Error::InvalidConfig(alloc::format!("unknown autoencoder kind {other:?}"))),
        })
    }

    pub fn has_classifier(self) -> bool {
        matches!(self, AeKind::Classifier | AeKind::Sinkclass)
    }

    pub fn has_generator(self) -> bool {
        matches!(self, AeKind::Sinkhorn | AeKind::Sinkclass)
    }
}

/// Weight of the reconstruction term in the three-term Sinkclass loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MseWeight {
    /// `α·SH + β·BCE + MSE`.
    #[default]
    Unit,
    /// `α·SH + β·BCE + (1 − α − β)·MSE`.
    Complement,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AeConfig {
    pub kind: AeKind,
    pub train: TrainConfig,
    pub sinkhorn: SinkhornConfig,
    pub sinkclass_mse_weight: MseWeight,
    /// Feed class labels to the noise generator.
    pub label_conditioning: bool,
}

impl Default for AeConfig {
    fn default() -> Self {
        Self::vanilla(0)
    }
}

/// Per-term weights of the training objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub mse: f64,
    pub kl: f64,
    pub bce: f64,
    pub sinkhorn: f64,
}

impl AeConfig {
    fn with(kind: AeKind, seed: u64, learning_rate: f64, alpha: f64, beta: f64) -> Self {
        Self {
            kind,
            train: TrainConfig { learning_rate, alpha, beta, seed, ..TrainConfig::default() },
            sinkhorn: SinkhornConfig { strict: false, ..SinkhornConfig::default() },
            sinkclass_mse_weight: MseWeight::Unit,
            label_conditioning: true,
        }
    }

    pub fn vanilla(seed: u64) -> Self {
        Self::with(AeKind::Vanilla, seed, 0.0012, 0.0, 0.0)
    }

    pub fn variational(seed: u64) -> Self {
        Self::with(AeKind::Variational, seed, 0.001, 0.0005, 0.0)
    }

    /// Classifier AE tuned for reconstruction.
    pub fn classifier_mse(seed: u64) -> Self {
        Self::with(AeKind::Classifier, seed, 0.001, 3e-5, 0.0)
    }

    /// Classifier AE tuned for classification.
    pub fn classifier_bce(seed: u64) -> Self {
        Self::with(AeKind::Classifier, seed, 0.001, 0.6, 0.0)
    }

    pub fn sinkhorn(seed: u64) -> Self {
        Self::with(AeKind::Sinkhorn, seed, 0.001, 0.06, 0.0)
    }

    pub fn sinkclass_bce(seed: u64) -> Self {
        Self::with(AeKind::Sinkclass, seed, 0.001, 0.2, 0.02)
    }

    pub fn sinkclass_mse(seed: u64) -> Self {
        Self::with(AeKind::Sinkclass, seed, 0.001, 0.0008, 0.9)
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.kind == AeKind::Sinkclass
            && self.sinkclass_mse_weight == MseWeight::Complement
            && self.train.alpha + self.train.beta > 1.0
        {
            return Err(Error::InvalidConfig("alpha + beta must not exceed 1 with complement MSE weighting".into()));
        }
        if self.kind.has_generator() && !(self.sinkhorn.epsilon > 0.0) {
            return Err(Error::InvalidConfig("Sinkhorn epsilon must be positive".into()));
        }
        Ok(())
    }

    pub fn weights(&self) -> LossWeights {
        let (a, b) = (self.train.alpha, self.train.beta);
        let zero = LossWeights { mse: 1.0, kl: 0.0, bce: 0.0, sinkhorn: 0.0 };
        match self.kind {
            AeKind::Vanilla => zero,
            AeKind::Variational => LossWeights { mse: 1.0 - a, kl: a, ..zero },
            AeKind::Classifier => LossWeights { mse: 1.0 - a, bce: a, ..zero },
            AeKind::Sinkhorn => LossWeights { mse: 1.0 - a, sinkhorn: a, ..zero },
            AeKind::Sinkclass => LossWeights {
                mse: match self.sinkclass_mse_weight {
                    MseWeight::Unit => 1.0,
                    MseWeight::Complement => 1.0 - a - b,
                },
                bce: b,
                sinkhorn: a,
                kl: 0.0,
            },
        }
    }
}
