use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use super::network::{DenseNetwork, Gradients};
use crate::error::{shape_err, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Adam state over a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub step: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(config: AdamConfig, n_params: usize) -> Self {
        Self { config, step: 0, m: vec![0.0; n_params], v: vec![0.0; n_params] }
    }

    pub fn for_network(config: AdamConfig, net: &DenseNetwork) -> Self {
        Self::new(config, net.parameter_count())
    }

    /// One update over parameter/gradient slices taken in a fixed order.
    pub fn update(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]]) -> Result<()> {
        let total: usize = params.iter().map(|p| p.len()).sum();
        if total != self.m.len() || params.len() != grads.len() || params.iter().zip(grads).any(|(p, g)| p.len() != g.len()) {
            return Err(shape_err(format!("{} parameters", self.m.len()), format!("{total}")));
        }
        self.step += 1;
        let c = self.config;
        let bc1 = 1.0 - libm::pow(c.beta1, self.step as f64);
        let bc2 = 1.0 - libm::pow(c.beta2, self.step as f64);
        let mut k = 0;
        for (p, g) in params.iter_mut().zip(grads) {
            for (pi, &gi) in p.iter_mut().zip(g.iter()) {
                self.m[k] = c.beta1 * self.m[k] + (1.0 - c.beta1) * gi;
                self.v[k] = c.beta2 * self.v[k] + (1.0 - c.beta2) * gi * gi;
                let mh = self.m[k] / bc1;
                let vh = self.v[k] / bc2;
                *pi -= c.learning_rate * mh / (libm::sqrt(vh) + c.epsilon);
                k += 1;
            }
        }
        Ok(())
    }
}

/// Apply one Adam step to `net` from its gradients.
pub fn optimiser_step(net: &mut DenseNetwork, grads: &Gradients, adam: &mut Adam) -> Result<()> {
    let g = grads.slices();
    let mut p = net.parameter_slices_mut();
    adam.update(&mut p, &g)
}
