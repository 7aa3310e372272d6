//! Dense networks, losses, Adam and the Sinkhorn divergence.

pub mod config;
pub mod loss;
pub mod network;
pub mod optim;
pub mod sinkhorn;

pub use config::{Optimiser, TrainConfig};
pub use loss::{bce_loss, kl_logvar, kl_standard_normal, mse_loss};
pub use network::{Activation, Activations, DenseNetwork, Gradients, Layer};
pub use optim::{optimiser_step, Adam, AdamConfig};
pub use sinkhorn::{sinkhorn_divergence, SinkhornConfig, SinkhornOutput};
