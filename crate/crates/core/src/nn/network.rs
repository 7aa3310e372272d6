//! Dense feed-forward networks with reverse-mode gradients.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::binfmt::{Reader, Writer};
use crate::error::{shape_err, Error, Result};
use crate::linalg::gemm;
use crate::rng::{self, streams};

const MAGIC: &[u8] = b"QRDN";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Elu,
    Sigmoid,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Self::Linear => z,
            Self::Elu => {
                if z > 0.0 {
                    z
                } else {
                    libm::expm1(z)
                }
            }
            Self::Sigmoid => crate::reduce::rbm::sigmoid(z),
        }
    }

    /// Derivative in terms of the pre-activation `z` and output `a`.
    pub fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Self::Linear => 1.0,
            Self::Elu => {
                if z > 0.0 {
                    1.0
                } else {
                    a + 1.0
                }
            }
            Self::Sigmoid => a * (1.0 - a),
        }
    }

    fn tag(self) -> u8 {
        match self {
            Self::Linear => 0,
            Self::Elu => 1,
            Self::Sigmoid => 2,
        }
    }

    fn from_tag(t: u8) -> Result<Self> {
        match t {
            0 => Ok(Self::Linear),
            1 => Ok(Self::Elu),
            2 => Ok(Self::Sigmoid),
            _ => Err(Error::Format(format!("unknown activation tag {t}"))),
        }
    }
}

/// `a_out = f(a_in W + b)`, with `W` stored as `in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: DMatrix<f64>,
    pub bias: DVector<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn input_dims(&self) -> usize {
        self.weights.nrows()
    }

    pub fn output_dims(&self) -> usize {
        self.weights.ncols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseNetwork {
    pub layers: Vec<Layer>,
    /// Seed the parameters were initialised from.
    pub seed: u64,
}

/// Per-layer values cached by the forward pass.
#[derive(Debug, Clone)]
pub struct Activations {
    /// `outputs[0]` is the input, `outputs[l + 1]` the output of layer `l`.
    pub outputs: Vec<DMatrix<f64>>,
    pub pre_activations: Vec<DMatrix<f64>>,
}

impl Activations {
    pub fn output(&self) -> &DMatrix<f64> {
        self.outputs.last().expect("at least the input")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<DMatrix<f64>>,
    pub biases: Vec<DVector<f64>>,
    /// Gradient with respect to the network input.
    pub input: DMatrix<f64>,
}

impl Gradients {
    pub fn zeros_like(net: &DenseNetwork) -> Self {
        Self {
            weights: net.layers.iter().map(|l| DMatrix::zeros(l.input_dims(), l.output_dims())).collect(),
            biases: net.layers.iter().map(|l| DVector::zeros(l.output_dims())).collect(),
            input: DMatrix::zeros(0, net.input_dims()),
        }
    }

    /// Parameter gradients in the same order as `DenseNetwork::parameters`.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.as_slice());
            out.extend_from_slice(b.as_slice());
        }
        out
    }

    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.push(w.as_slice());
            out.push(b.as_slice());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|v| v.is_finite())) && self.biases.iter().all(|b| b.iter().all(|v| v.is_finite()))
    }
}

impl DenseNetwork {
    /// Widths `[in, h1, …, out]`; hidden layers use `hidden`, the last layer
    /// `output`. Weights are drawn uniformly in `±sqrt(6 / fan_in)`, biases
    /// start at zero.
    pub fn new(widths: &[usize], hidden: Activation, output: Activation, seed: u64) -> Self {
        assert!(widths.len() >= 2, "a network needs at least one layer");
        let mut r = rng::stream(seed, streams::NET_INIT_BASE);
        let n = widths.len() - 1;
        let layers = (0..n)
            .map(|l| {
                let (fan_in, fan_out) = (widths[l], widths[l + 1]);
                let bound = libm::sqrt(6.0 / fan_in as f64);
                let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
                Layer {
                    weights: DMatrix::from_fn(fan_in, fan_out, |_, _| dist.sample(&mut r)),
                    bias: DVector::zeros(fan_out),
                    activation: if l + 1 == n { output } else { hidden },
                }
            })
            .collect();
        Self { layers, seed }
    }

    pub fn from_layers(layers: Vec<Layer>, seed: u64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::InvalidConfig("network without layers".into()));
        }
        for (l, w) in layers.windows(2).enumerate() {
            if w[0].output_dims() != w[1].input_dims() {
                return Err(shape_err(
                    format!("layer {} input width {}", l + 1, w[0].output_dims()),
                    format!("{}", w[1].input_dims()),
                ));
            }
        }
        for (l, layer) in layers.iter().enumerate() {
            if layer.bias.len() != layer.output_dims() {
                return Err(shape_err(format!("layer {l} bias length {}", layer.output_dims()), format!("{}", layer.bias.len())));
            }
        }
        Ok(Self { layers, seed })
    }

    pub fn input_dims(&self) -> usize {
        self.layers[0].input_dims()
    }

    pub fn output_dims(&self) -> usize {
        self.layers.last().expect("non-empty").output_dims()
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = alloc::vec![self.input_dims()];
        w.extend(self.layers.iter().map(|l| l.output_dims()));
        w
    }

    pub fn parameter_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> Result<Activations> {
        if x.ncols() != self.input_dims() {
            return Err(shape_err(format!("{} input columns", self.input_dims()), format!("{}", x.ncols())));
        }
        let mut outputs = Vec::with_capacity(self.layers.len() + 1);
        let mut pre = Vec::with_capacity(self.layers.len());
        outputs.push(x.clone());
        for layer in &self.layers {
            let a_in = outputs.last().expect("input pushed");
            let mut z = DMatrix::zeros(a_in.nrows(), layer.output_dims());
            gemm(1.0, a_in, false, &layer.weights, false, 0.0, &mut z);
            for (j, mut col) in z.column_iter_mut().enumerate() {
                col.add_scalar_mut(layer.bias[j]);
            }
            let act = layer.activation;
            let a = z.map(|v| act.apply(v));
            pre.push(z);
            outputs.push(a);
        }
        Ok(Activations { outputs, pre_activations: pre })
    }

    pub fn predict(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.forward(x)?.outputs.pop().expect("output"))
    }

    /// Backpropagate `grad_output = ∂L/∂(network output)`.
    pub fn backward(&self, acts: &Activations, grad_output: &DMatrix<f64>) -> Result<Gradients> {
        if acts.pre_activations.len() != self.layers.len() {
            return Err(shape_err(
                format!("activations of {} layers", self.layers.len()),
                format!("{}", acts.pre_activations.len()),
            ));
        }
        let out = acts.output();
        if grad_output.shape() != out.shape() {
            return Err(shape_err(
                format!("output gradient {}x{}", out.nrows(), out.ncols()),
                format!("{}x{}", grad_output.nrows(), grad_output.ncols()),
            ));
        }
        let n = self.layers.len();
        let mut weights = Vec::with_capacity(n);
        let mut biases = Vec::with_capacity(n);
        let mut upstream = grad_output.clone();
        for l in (0..n).rev() {
            let layer = &self.layers[l];
            let act = layer.activation;
            let mut delta = upstream;
            delta.zip_zip_apply(&acts.pre_activations[l], &acts.outputs[l + 1], |d, z, a| *d *= act.derivative(z, a));
            let a_in = &acts.outputs[l];
            let mut gw = DMatrix::zeros(layer.input_dims(), layer.output_dims());
            gemm(1.0, a_in, true, &delta, false, 0.0, &mut gw);
            let gb = DVector::from_iterator(layer.output_dims(), delta.column_iter().map(|c| c.sum()));
            let mut g_in = DMatrix::zeros(delta.nrows(), layer.input_dims());
            gemm(1.0, &delta, false, &layer.weights, true, 0.0, &mut g_in);
            weights.push(gw);
            biases.push(gb);
            upstream = g_in;
        }
        weights.reverse();
        biases.reverse();
        Ok(Gradients { weights, biases, input: upstream })
    }

    /// All parameters, layer by layer: weights (column-major) then bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for l in &self.layers {
            out.extend_from_slice(l.weights.as_slice());
            out.extend_from_slice(l.bias.as_slice());
        }
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(shape_err(format!("{} parameters", self.parameter_count()), format!("{}", params.len())));
        }
        let mut pos = 0;
        for l in self.layers.iter_mut() {
            let nw = l.weights.len();
            l.weights.as_mut_slice().copy_from_slice(&params[pos..pos + nw]);
            pos += nw;
            let nb = l.bias.len();
            l.bias.as_mut_slice().copy_from_slice(&params[pos..pos + nb]);
            pos += nb;
        }
        Ok(())
    }

    pub fn parameter_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for l in self.layers.iter_mut() {
            out.push(l.weights.as_mut_slice());
            out.push(l.bias.as_mut_slice());
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite()))
    }

    /// Checkpoint: architecture descriptor followed by the parameter payload.
    pub fn write(&self, w: &mut Writer) {
        w.bytes(MAGIC);
        w.u64(self.seed);
        w.u64(self.layers.len() as u64);
        for l in &self.layers {
            w.u64(l.input_dims() as u64);
            w.u64(l.output_dims() as u64);
            w.u8(l.activation.tag());
        }
        w.f64s(&self.parameters());
    }

    pub fn read(r: &mut Reader) -> Result<Self> {
        r.expect(MAGIC)?;
        let seed = r.u64()?;
        let n = r.len()?;
        let mut shapes = Vec::with_capacity(n);
        for _ in 0..n {
            let (i, o) = (r.len()?, r.len()?);
            shapes.push((i, o, Activation::from_tag(r.u8()?)?));
        }
        let layers = shapes
            .iter()
            .map(|&(i, o, activation)| Layer { weights: DMatrix::zeros(i, o), bias: DVector::zeros(o), activation })
            .collect();
        let mut net = Self::from_layers(layers, seed)?;
        net.set_parameters(&r.f64s()?)?;
        Ok(net)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::new();
        self.write(&mut w);
        w.finish()
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader::new(buf);
        let net = Self::read(&mut r)?;
        r.finish()?;
        Ok(net)
    }

    /// Human-readable architecture, e.g. `67-64(elu)-16(sigmoid)`.
    pub fn describe(&self) -> String {
        let mut s = format!("{}", self.input_dims());
        for l in &self.layers {
            let a = match l.activation {
                Activation::Linear => "linear",
                Activation::Elu => "elu",
                Activation::Sigmoid => "sigmoid",
            };
            s.push_str(&format!("-{}({a})", l.output_dims()));
        }
        s
    }
}
