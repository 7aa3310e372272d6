use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::model::{Autoencoder, Encoder};
use super::{AeConfig, AeKind, LossWeights, LATENT_DIMS};
use crate::error::{shape_err, Error, Result};
use crate::matrix::{expect_cols, FeatureMatrix};
use crate::metrics::auc;
use crate::nn::{bce_loss, kl_logvar, mse_loss, optimiser_step, sinkhorn_divergence, Activations, Adam, Gradients};
use crate::rng::{self, streams};

/// Per-term losses of one evaluation. Terms a model does not compute (or
/// skips because their weight is zero) are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossComponents {
    pub total: f64,
    pub mse: f64,
    pub kl: Option<f64>,
    pub bce: Option<f64>,
    pub sinkhorn: Option<f64>,
}

impl LossComponents {
    /// Weighted sum of the present components.
    pub fn weighted_total(&self, w: &LossWeights) -> f64 {
        let mut t = w.mse * self.mse;
        if let Some(v) = self.kl {
            t += w.kl * v;
        }
        if let Some(v) = self.bce {
            t += w.bce * v;
        }
        if let Some(v) = self.sinkhorn {
            t += w.sinkhorn * v;
        }
        t
    }

    pub fn is_finite(&self) -> bool {
        [Some(self.total), Some(self.mse), self.kl, self.bce, self.sinkhorn].iter().flatten().all(|v| v.is_finite())
    }

    fn scaled_add(&mut self, other: &Self, s: f64) {
        let add = |a: &mut Option<f64>, b: Option<f64>| {
            *a = match (*a, b) {
                (Some(x), Some(y)) => Some(x + s * y),
                (None, Some(y)) => Some(s * y),
                (x, None) => x,
            }
        };
        self.total += s * other.total;
        self.mse += s * other.mse;
        add(&mut self.kl, other.kl);
        add(&mut self.bce, other.bce);
        add(&mut self.sinkhorn, other.sinkhorn);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    /// 0 is the evaluation before any update.
    pub epoch: usize,
    pub train: LossComponents,
    pub val: LossComponents,
    /// Distance between the mean signal and mean background validation latents.
    pub latent_separation: Option<f64>,
    /// Sinkhorn solves that hit the iteration budget during this epoch.
    pub sinkhorn_unconverged: usize,
}

/// One mini-batch together with the noise it consumes.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub x: DMatrix<f64>,
    pub labels: Vec<u8>,
    /// Reparametrisation noise ξ for the variational model.
    pub reparam_noise: Option<DMatrix<f64>>,
    /// Generator input noise.
    pub generator_noise: Option<DMatrix<f64>>,
}

fn gaussian(r: &mut rng::Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(r))
}

impl Batch {
    /// Batch for `kind`, drawing only the noise that model consumes.
    pub fn new(kind: AeKind, x: DMatrix<f64>, labels: Vec<u8>, reparam: &mut rng::Rng, generator: &mut rng::Rng) -> Self {
        let n = x.nrows();
        let reparam_noise = (kind == AeKind::Variational).then(|| gaussian(reparam, n, LATENT_DIMS));
        let generator_noise = kind.has_generator().then(|| gaussian(generator, n, LATENT_DIMS));
        Self { x, labels, reparam_noise, generator_noise }
    }

    fn label_column(&self) -> DMatrix<f64> {
        DMatrix::from_iterator(self.labels.len(), 1, self.labels.iter().map(|&l| f64::from(l)))
    }
}

enum EncoderState {
    Plain(Activations),
    Variational { trunk: Activations, mu: Activations, logvar: Activations, sigma: DMatrix<f64> },
}

struct Evaluation {
    loss: LossComponents,
    grads: Option<Vec<Option<Gradients>>>,
    sinkhorn_converged: bool,
}

/// Owns a model and its optimiser state during training.
#[derive(Debug, Clone)]
pub struct Trainer {
    pub model: Autoencoder,
    pub config: AeConfig,
    adams: Vec<Adam>,
    epoch: usize,
}

impl Trainer {
    pub fn new(config: AeConfig, input_dims: usize) -> Result<Self> {
        config.validate()?;
        let model = Autoencoder::new(config.kind, input_dims, config.label_conditioning, config.train.seed);
        let adams = model.networks().iter().map(|n| Adam::for_network(config.train.adam(), n)).collect();
        Ok(Self { model, config, adams, epoch: 0 })
    }

    /// Change the step size of every optimiser, keeping their moment estimates.
    pub fn set_learning_rate(&mut self, learning_rate: f64) {
        self.config.train.learning_rate = learning_rate;
        for a in self.adams.iter_mut() {
            a.config.learning_rate = learning_rate;
        }
    }

    /// Loss of `batch` under the current parameters.
    pub fn batch_loss(&self, batch: &Batch) -> Result<LossComponents> {
        Ok(self.evaluate(batch, false)?.loss)
    }

    /// One optimiser step on `batch`; returns the loss before the update.
    pub fn step(&mut self, batch: &Batch) -> Result<LossComponents> {
        Ok(self.step_inner(batch)?.0)
    }

    fn step_inner(&mut self, batch: &Batch) -> Result<(LossComponents, bool)> {
        let ev = self.evaluate(batch, true)?;
        if !ev.loss.is_finite() {
            return Err(Error::Divergence { epoch: self.epoch, what: "loss" });
        }
        let grads = ev.grads.expect("gradients requested");
        if grads.iter().flatten().any(|g| !g.is_finite()) {
            return Err(Error::Divergence { epoch: self.epoch, what: "gradient" });
        }
        for ((net, adam), g) in self.model.networks_mut().into_iter().zip(self.adams.iter_mut()).zip(&grads) {
            if let Some(g) = g {
                optimiser_step(net, g, adam)?;
            }
        }
        if !self.model.is_finite() {
            return Err(Error::Divergence { epoch: self.epoch, what: "parameters" });
        }
        Ok((ev.loss, ev.sinkhorn_converged))
    }

    fn evaluate(&self, batch: &Batch, want_grads: bool) -> Result<Evaluation> {
        let w = self.config.weights();
        let m = &self.model;
        expect_cols(&batch.x, m.input_dims())?;
        if batch.labels.len() != batch.x.nrows() {
            return Err(shape_err(format!("{} labels", batch.x.nrows()), format!("{}", batch.labels.len())));
        }
        let rows = batch.x.nrows();
        let noise = |n: &Option<DMatrix<f64>>, what: &str| -> Result<DMatrix<f64>> {
            let n = n.as_ref().ok_or_else(|| Error::InvalidConfig(format!("batch lacks {what} noise")))?;
            if n.shape() != (rows, LATENT_DIMS) {
                return Err(shape_err(format!("{rows}x{LATENT_DIMS} {what} noise"), format!("{}x{}", n.nrows(), n.ncols())));
            }
            Ok(n.clone())
        };

        let (z, enc) = match &m.encoder {
            Encoder::Plain(net) => {
                let a = net.forward(&batch.x)?;
                (a.output().clone(), EncoderState::Plain(a))
            }
            Encoder::Variational { trunk, mu, logvar } => {
                let ta = trunk.forward(&batch.x)?;
                let ma = mu.forward(ta.output())?;
                let la = logvar.forward(ta.output())?;
                let xi = noise(&batch.reparam_noise, "reparametrisation")?;
                let sigma = la.output().map(|v| libm::exp(0.5 * v));
                let z = ma.output() + sigma.component_mul(&xi);
                (z, EncoderState::Variational { trunk: ta, mu: ma, logvar: la, sigma })
            }
        };

        let mut loss = LossComponents::default();
        let mut dz = DMatrix::zeros(rows, LATENT_DIMS);

        let da = m.decoder.forward(&z)?;
        let (mse, g_mse) = mse_loss(&batch.x, da.output())?;
        loss.mse = mse;
        let dec_grad = if want_grads {
            let g = m.decoder.backward(&da, &(g_mse * w.mse))?;
            dz += &g.input;
            Some(g)
        } else {
            None
        };

        let y = batch.label_column();
        let mut cls_grad = None;
        if let Some(c) = &m.classifier {
            let ca = c.forward(&z)?;
            let (bce, g_bce) = bce_loss(&y, ca.output())?;
            loss.bce = Some(bce);
            if want_grads && w.bce > 0.0 {
                let g = c.backward(&ca, &(g_bce * w.bce))?;
                dz += &g.input;
                cls_grad = Some(g);
            }
        }

        let mut gen_grads = None;
        let mut converged = true;
        if let Some(gen) = &m.generator {
            if w.sinkhorn > 0.0 {
                let xi = noise(&batch.generator_noise, "generator")?;
                let ga = gen.forward(&xi, &y)?;
                let s = sinkhorn_divergence(&z, ga.merge.output(), &self.config.sinkhorn)?;
                loss.sinkhorn = Some(s.value);
                converged = s.converged;
                if want_grads {
                    dz += s.grad_a * w.sinkhorn;
                    gen_grads = Some(gen.backward(&ga, &(s.grad_b * w.sinkhorn))?);
                }
            }
        }

        let mut enc_grads = Vec::new();
        match (&m.encoder, enc) {
            (Encoder::Plain(net), EncoderState::Plain(a)) => {
                if want_grads {
                    enc_grads.push(net.backward(&a, &dz)?);
                }
            }
            (Encoder::Variational { trunk, mu, logvar }, EncoderState::Variational { trunk: ta, mu: ma, logvar: la, sigma }) => {
                let (kl, g_mu, g_lv) = kl_logvar(ma.output(), la.output())?;
                loss.kl = Some(kl);
                if want_grads {
                    let xi = batch.reparam_noise.as_ref().expect("checked above");
                    let d_mu = &dz + g_mu * w.kl;
                    let d_lv = dz.component_mul(xi).component_mul(&sigma) * 0.5 + g_lv * w.kl;
                    let mg = mu.backward(&ma, &d_mu)?;
                    let lg = logvar.backward(&la, &d_lv)?;
                    let tg = trunk.backward(&ta, &(&mg.input + &lg.input))?;
                    enc_grads.extend([tg, mg, lg]);
                }
            }
            _ => unreachable!("encoder state matches encoder"),
        }
        loss.total = loss.weighted_total(&w);

        let grads = want_grads.then(|| {
            let mut all: Vec<Option<Gradients>> = enc_grads.into_iter().map(Some).collect();
            all.push(dec_grad);
            if m.classifier.is_some() {
                all.push(cls_grad);
            }
            if let Some(gen) = &m.generator {
                match gen_grads {
                    Some(g) => all.extend(g.into_iter().map(Some)),
                    None => all.extend(gen.networks().iter().map(|_| None)),
                }
            }
            all
        });
        Ok(Evaluation { loss, grads, sinkhorn_converged: converged })
    }

    /// Row-weighted mean loss over `data` in batch-size chunks, with noise
    /// from a fixed stream so repeated calls agree.
    pub fn evaluate_split(&self, data: &FeatureMatrix) -> Result<(LossComponents, usize)> {
        let seed = self.config.train.seed;
        let mut reparam = rng::stream(seed, streams::AE_VALIDATION_NOISE);
        let mut gen = rng::stream(seed ^ 1, streams::AE_VALIDATION_NOISE);
        let idx: Vec<usize> = (0..data.rows()).collect();
        let mut acc = LossComponents::default();
        let mut unconverged = 0;
        for chunk in idx.chunks(self.config.train.batch_size) {
            let batch = make_batch(self.config.kind, data, chunk, &mut reparam, &mut gen);
            let ev = self.evaluate(&batch, false)?;
            unconverged += usize::from(!ev.sinkhorn_converged);
            acc.scaled_add(&ev.loss, chunk.len() as f64 / data.rows() as f64);
        }
        Ok((acc, unconverged))
    }
}

fn make_batch(kind: AeKind, data: &FeatureMatrix, idx: &[usize], reparam: &mut rng::Rng, gen: &mut rng::Rng) -> Batch {
    let x = DMatrix::from_fn(idx.len(), data.cols(), |i, j| data.values()[(idx[i], j)]);
    let labels = idx.iter().map(|&i| data.labels()[i]).collect();
    Batch::new(kind, x, labels, reparam, gen)
}

fn latent_separation(model: &Autoencoder, data: &FeatureMatrix) -> Result<Option<f64>> {
    let z = model.encode(data.values())?;
    let mut sums = [vec![0.0; LATENT_DIMS], vec![0.0; LATENT_DIMS]];
    let mut counts = [0usize; 2];
    for (i, &l) in data.labels().iter().enumerate() {
        let c = usize::from(l == 1);
        counts[c] += 1;
        for k in 0..LATENT_DIMS {
            sums[c][k] += z[(i, k)];
        }
    }
    if counts[0] == 0 || counts[1] == 0 {
        return Ok(None);
    }
    let d2: f64 = (0..LATENT_DIMS)
        .map(|k| {
            let d = sums[1][k] / counts[1] as f64 - sums[0][k] / counts[0] as f64;
            d * d
        })
        .sum();
    Ok(Some(libm::sqrt(d2)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedAe {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: Autoencoder,
    pub config: AeConfig,
    pub history: Vec<EpochLog>,
    pub best_epoch: usize,
    pub epochs_run: usize,
}

/// Train any of the five models with mini-batch Adam, early stopping on
/// the validation loss and restoration of the best parameters.
pub fn train_autoencoder(config: &AeConfig, train: &FeatureMatrix, val: &FeatureMatrix) -> Result<TrainedAe> {
    config.validate()?;
    if train.rows() == 0 || val.rows() == 0 {
        return Err(Error::InsufficientData("autoencoder training needs non-empty train and validation sets".into()));
    }
    expect_cols(val.values(), train.cols())?;
    let mut trainer = Trainer::new(*config, train.cols())?;
    let seed = config.train.seed;
    let mut shuffle = rng::stream(seed, streams::AE_SHUFFLE);
    let mut reparam = rng::stream(seed, streams::AE_REPARAM);
    let mut gen = rng::stream(seed, streams::AE_GENERATOR_NOISE);

    let (train0, u0) = trainer.evaluate_split(train)?;
    let (val0, u1) = trainer.evaluate_split(val)?;
    if !train0.is_finite() || !val0.is_finite() {
        return Err(Error::Divergence { epoch: 0, what: "loss" });
    }
    let mut history = vec![EpochLog {
        epoch: 0,
        train: train0,
        val: val0,
        latent_separation: latent_separation(&trainer.model, val)?,
        sinkhorn_unconverged: u0 + u1,
    }];
    let mut best = (val0.total, trainer.model.clone(), 0usize);
    let mut since_best = 0;
    let mut epochs_run = 0;

    for epoch in 1..=config.train.max_epochs {
        trainer.epoch = epoch;
        let order = rng::permutation(&mut shuffle, train.rows());
        let mut acc = LossComponents::default();
        let mut unconverged = 0;
        for chunk in order.chunks(config.train.batch_size) {
            let batch = make_batch(config.kind, train, chunk, &mut reparam, &mut gen);
            let (loss, converged) = trainer.step_inner(&batch)?;
            unconverged += usize::from(!converged);
            acc.scaled_add(&loss, chunk.len() as f64 / train.rows() as f64);
        }
        let (val_loss, u) = trainer.evaluate_split(val)?;
        if !val_loss.is_finite() {
            return Err(Error::Divergence { epoch, what: "validation loss" });
        }
        epochs_run = epoch;
        history.push(EpochLog {
            epoch,
            train: acc,
            val: val_loss,
            latent_separation: latent_separation(&trainer.model, val)?,
            sinkhorn_unconverged: unconverged + u,
        });
        if val_loss.total < best.0 {
            best = (val_loss.total, trainer.model.clone(), epoch);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.train.early_stop_patience {
                break;
            }
        }
    }
    Ok(TrainedAe { model: best.1, config: *config, history, best_epoch: best.2, epochs_run })
}

fn train_kind(kind: AeKind, config: &AeConfig, train: &FeatureMatrix, val: &FeatureMatrix) -> Result<TrainedAe> {
    if config.kind != kind {
        return Err(Error::InvalidConfig(format!("expected a {} configuration, got {}", kind.name(), config.kind.name())));
    }
    train_autoencoder(config, train, val)
}

pub fn train_vanilla(config: &AeConfig, train: &FeatureMatrix, val: &FeatureMatrix) -> Result<TrainedAe> {
    train_kind(AeKind::Vanilla, config, train, val)
}

pub fn train_vae(config: &AeConfig, train: &FeatureMatrix, val: &FeatureMatrix) -> Result<TrainedAe> {
    train_kind(AeKind::Variational, config, train, val)
}

pub fn train_classifier_ae(config: &AeConfig, train: &FeatureMatrix, val: &FeatureMatrix) -> Result<TrainedAe> {
    train_kind(AeKind::Classifier, config, train, val)
}

pub fn train_sinkhorn_ae(config: &AeConfig, train: &FeatureMatrix, val: &FeatureMatrix) -> Result<TrainedAe> {
    train_kind(AeKind::Sinkhorn, config, train, val)
}

pub fn train_sinkclass(config: &AeConfig, train: &FeatureMatrix, val: &FeatureMatrix) -> Result<TrainedAe> {
    train_kind(AeKind::Sinkclass, config, train, val)
}

/// Latent representation of `x`, labels carried over.
pub fn reduce(model: &Autoencoder, x: &FeatureMatrix) -> Result<FeatureMatrix> {
    expect_cols(x.values(), model.input_dims())?;
    let z = model.encode(x.values())?;
    let names = (1..=LATENT_DIMS).map(|i| format!("z{i}")).collect();
    FeatureMatrix::new(z, x.labels().to_vec(), names)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AeMetrics {
    pub final_mse: f64,
    pub final_bce: Option<f64>,
    pub classifier_auc: Option<f64>,
    pub epochs_run: usize,
    pub config: AeConfig,
}

/// Deterministic reconstruction and classifier metrics on `data`.
pub fn evaluate_model(trained: &TrainedAe, data: &FeatureMatrix) -> Result<AeMetrics> {
    let m = &trained.model;
    expect_cols(data.values(), m.input_dims())?;
    let z = m.encode(data.values())?;
    let final_mse = mse_loss(data.values(), &m.decode(&z)?)?.0;
    let (final_bce, classifier_auc) = match m.classify(&z)? {
        Some(p) => {
            let y = DMatrix::from_iterator(p.len(), 1, data.labels().iter().map(|&l| f64::from(l)));
            let probs = DMatrix::from_column_slice(p.len(), 1, &p);
            let bce = bce_loss(&y, &probs)?.0;
            let a = match auc(&p, data.labels()) {
                Ok(a) => Some(a),
                Err(Error::DegenerateLabels) => None,
                Err(e) => return Err(e),
            };
            (Some(bce), a)
        }
        None => (None, None),
    };
    Ok(AeMetrics { final_mse, final_bce, classifier_auc, epochs_run: trained.epochs_run, config: trained.config })
}
