use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;

use super::{
    AeKind, CLASSIFIER_WIDTHS, ENCODER_HIDDEN, GENERATOR_LABEL_WIDTH, GENERATOR_MERGE_WIDTHS, GENERATOR_NOISE_WIDTHS,
    LATENT_DIMS, VAE_TRUNK,
};
use crate::binfmt::{Reader, Writer};
use crate::error::{Error, Result};
use crate::nn::{Activation, Activations, DenseNetwork, Gradients};
use crate::rng;

const MAGIC: &[u8] = b"QRDA";
const VERSION: u8 = 1;

// Component ids folded into the master seed for network initialisation.
const ENCODER_ID: u64 = 1;
const DECODER_ID: u64 = 2;
const CLASSIFIER_ID: u64 = 3;
const MU_ID: u64 = 4;
const LOGVAR_ID: u64 = 5;
const GEN_NOISE_ID: u64 = 6;
const GEN_LABEL_ID: u64 = 7;
const GEN_MERGE_ID: u64 = 8;

fn component_seed(seed: u64, id: u64) -> u64 {
    rng::mix(rng::mix(seed) ^ id)
}

fn chain(first: usize, rest: &[usize]) -> Vec<usize> {
    let mut w = vec![first];
    w.extend_from_slice(rest);
    w
}

#[derive(Debug, Clone, PartialEq)]
pub enum Encoder {
    Plain(DenseNetwork),
    /// Shared trunk followed by linear μ and log σ² heads.
    Variational { trunk: DenseNetwork, mu: DenseNetwork, logvar: DenseNetwork },
}

/// Label-conditioned generator of latent-space samples from Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseGenerator {
    pub noise: DenseNetwork,
    pub label: Option<DenseNetwork>,
    pub merge: DenseNetwork,
}

pub(crate) struct GeneratorActs {
    noise: Activations,
    label: Option<Activations>,
    pub(crate) merge: Activations,
}

impl NoiseGenerator {
    fn new(conditioned: bool, seed: u64) -> Self {
        let noise = DenseNetwork::new(
            &chain(LATENT_DIMS, &GENERATOR_NOISE_WIDTHS),
            Activation::Elu,
            Activation::Elu,
            component_seed(seed, GEN_NOISE_ID),
        );
        let label = conditioned.then(|| {
            DenseNetwork::new(&[1, GENERATOR_LABEL_WIDTH], Activation::Elu, Activation::Elu, component_seed(seed, GEN_LABEL_ID))
        });
        let merge_in = GENERATOR_NOISE_WIDTHS[1] + if conditioned { GENERATOR_LABEL_WIDTH } else { 0 };
        let merge = DenseNetwork::new(
            &chain(merge_in, &GENERATOR_MERGE_WIDTHS),
            Activation::Elu,
            Activation::Sigmoid,
            component_seed(seed, GEN_MERGE_ID),
        );
        Self { noise, label, merge }
    }

    pub(crate) fn forward(&self, xi: &DMatrix<f64>, labels: &DMatrix<f64>) -> Result<GeneratorActs> {
        let noise = self.noise.forward(xi)?;
        let (label, merged_in) = match &self.label {
            Some(net) => {
                let la = net.forward(labels)?;
                let (a, b) = (noise.output(), la.output());
                let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
                m.columns_mut(0, a.ncols()).copy_from(a);
                m.columns_mut(a.ncols(), b.ncols()).copy_from(b);
                (Some(la), m)
            }
            None => (None, noise.output().clone()),
        };
        let merge = self.merge.forward(&merged_in)?;
        Ok(GeneratorActs { noise, label, merge })
    }

    /// Gradients in `networks()` order.
    pub(crate) fn backward(&self, acts: &GeneratorActs, grad_out: &DMatrix<f64>) -> Result<Vec<Gradients>> {
        let mg = self.merge.backward(&acts.merge, grad_out)?;
        let w = self.noise.output_dims();
        let ng = self.noise.backward(&acts.noise, &mg.input.columns(0, w).into_owned())?;
        let mut out = vec![ng];
        if let (Some(net), Some(la)) = (&self.label, &acts.label) {
            let rest = mg.input.ncols() - w;
            out.push(net.backward(la, &mg.input.columns(w, rest).into_owned())?);
        }
        out.push(mg);
        Ok(out)
    }

    pub fn generate(&self, xi: &DMatrix<f64>, labels: &[u8]) -> Result<DMatrix<f64>> {
        let y = DMatrix::from_iterator(labels.len(), 1, labels.iter().map(|&l| f64::from(l)));
        Ok(self.forward(xi, &y)?.merge.outputs.last().expect("output").clone())
    }

    pub fn networks(&self) -> Vec<&DenseNetwork> {
        let mut v = vec![&self.noise];
        v.extend(self.label.as_ref());
        v.push(&self.merge);
        v
    }

    fn networks_mut(&mut self) -> Vec<&mut DenseNetwork> {
        let mut v = vec![&mut self.noise];
        v.extend(self.label.as_mut());
        v.push(&mut self.merge);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub kind: AeKind,
    pub encoder: Encoder,
    pub decoder: DenseNetwork,
    pub classifier: Option<DenseNetwork>,
    pub generator: Option<NoiseGenerator>,
}

impl Autoencoder {
    /// Fresh model for `input_dims` features. Each sub-network draws its
    /// initial weights from its own stream, so architectures that share a
    /// component start from identical weights for the same seed.
    pub fn new(kind: AeKind, input_dims: usize, label_conditioning: bool, seed: u64) -> Self {
        let encoder = if kind == AeKind::Variational {
            let trunk = DenseNetwork::new(&chain(input_dims, &VAE_TRUNK), Activation::Elu, Activation::Elu, component_seed(seed, ENCODER_ID));
            let t = VAE_TRUNK[VAE_TRUNK.len() - 1];
            Encoder::Variational {
                trunk,
                mu: DenseNetwork::new(&[t, LATENT_DIMS], Activation::Linear, Activation::Linear, component_seed(seed, MU_ID)),
                logvar: DenseNetwork::new(&[t, LATENT_DIMS], Activation::Linear, Activation::Linear, component_seed(seed, LOGVAR_ID)),
            }
        } else {
            let mut w = chain(input_dims, &ENCODER_HIDDEN);
            w.push(LATENT_DIMS);
            Encoder::Plain(DenseNetwork::new(&w, Activation::Elu, Activation::Sigmoid, component_seed(seed, ENCODER_ID)))
        };
        let mut dw = vec![LATENT_DIMS];
        dw.extend(ENCODER_HIDDEN.iter().rev());
        dw.push(input_dims);
        let decoder = DenseNetwork::new(&dw, Activation::Elu, Activation::Sigmoid, component_seed(seed, DECODER_ID));
        let classifier = kind.has_classifier().then(|| {
            DenseNetwork::new(&chain(LATENT_DIMS, &CLASSIFIER_WIDTHS), Activation::Elu, Activation::Sigmoid, component_seed(seed, CLASSIFIER_ID))
        });
        let generator = kind.has_generator().then(|| NoiseGenerator::new(label_conditioning, seed));
        Self { kind, encoder, decoder, classifier, generator }
    }

    pub fn input_dims(&self) -> usize {
        self.decoder.output_dims()
    }

    pub fn latent_dims(&self) -> usize {
        LATENT_DIMS
    }

    /// Deterministic latent coordinates; the variational model returns μ.
    pub fn encode(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match &self.encoder {
            Encoder::Plain(net) => net.predict(x),
            Encoder::Variational { trunk, mu, .. } => mu.predict(&trunk.predict(x)?),
        }
    }

    pub fn decode(&self, z: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.decoder.predict(z)
    }

    /// Classifier probabilities for latent rows, if the model has a classifier.
    pub fn classify(&self, z: &DMatrix<f64>) -> Result<Option<Vec<f64>>> {
        match &self.classifier {
            Some(c) => Ok(Some(c.predict(z)?.iter().copied().collect())),
            None => Ok(None),
        }
    }

    /// Every sub-network in a fixed order: encoder parts, decoder,
    /// classifier, generator parts.
    pub fn networks(&self) -> Vec<&DenseNetwork> {
        let mut v = match &self.encoder {
            Encoder::Plain(n) => vec![n],
            Encoder::Variational { trunk, mu, logvar } => vec![trunk, mu, logvar],
        };
        v.push(&self.decoder);
        v.extend(self.classifier.as_ref());
        if let Some(g) = &self.generator {
            v.extend(g.networks());
        }
        v
    }

    pub fn networks_mut(&mut self) -> Vec<&mut DenseNetwork> {
        let mut v = match &mut self.encoder {
            Encoder::Plain(n) => vec![n],
            Encoder::Variational { trunk, mu, logvar } => vec![trunk, mu, logvar],
        };
        v.push(&mut self.decoder);
        v.extend(self.classifier.as_mut());
        if let Some(g) = &mut self.generator {
            v.extend(g.networks_mut());
        }
        v
    }

    pub fn parameter_count(&self) -> usize {
        self.networks().iter().map(|n| n.parameter_count()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.networks().iter().all(|n| n.is_finite())
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self.networks().iter().map(|n| n.describe()).collect();
        alloc::format!("{}: {}", self.kind.name(), parts.join(" | "))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.bytes(MAGIC);
        w.u8(VERSION);
        w.str(self.kind.name());
        w.u8(u8::from(self.generator.as_ref().is_some_and(|g| g.label.is_some())));
        let nets = self.networks();
        w.u64(nets.len() as u64);
        for n in nets {
            n.write(&mut w);
        }
        w.finish()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        r.expect(MAGIC)?;
        let version = r.u8()?;
        if version != VERSION {
            return Err(Error::Format(alloc::format!("unsupported autoencoder blob version {version}")));
        }
        let kind = AeKind::from_name(&r.str()?).map_err(|e| Error::Format(alloc::format!("{e}")))?;
        let conditioned = r.u8()? == 1;
        let n = r.len()?;
        let mut nets = Vec::with_capacity(n);
        for _ in 0..n {
            nets.push(DenseNetwork::read(&mut r)?);
        }
        r.finish()?;
        // Build the expected skeleton and check shapes before moving weights in.
        let mut model = Self::new(kind, nets.first().map_or(0, |n| n.input_dims()), conditioned, 0);
        let slots = model.networks_mut();
        if slots.len() != nets.len() {
            return Err(Error::Format(alloc::format!("expected {} networks, found {}", slots.len(), nets.len())));
        }
        for (slot, net) in slots.into_iter().zip(nets) {
            if slot.widths() != net.widths() {
                return Err(Error::Format(alloc::format!("network widths {:?} do not match {:?}", net.widths(), slot.widths())));
            }
            *slot = net;
        }
        Ok(model)
    }
}
