//! Statevector simulation of the angle-encoding circuit and the fidelity
//! kernel `k(x, x') = |<φ(x)|φ(x')>|²`.
//!
//! Qubit `q` is bit `q` of the basis-state index, so `|10>` written as
//! (qubit 0, qubit 1) is index 1.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{shape_err, Error, Result};
use crate::rng;

pub const DEFAULT_QUBITS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `qubits` qubits.
    pub fn zero(qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { qubits, amps }
    }

    /// Computational basis state `|index>`.
    pub fn basis(qubits: usize, index: usize) -> Result<Self> {
        let dim = 1 << qubits;
        if index >= dim {
            return Err(Error::Index { index, len: dim });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { qubits, amps })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn probability(&self, index: usize) -> f64 {
        self.amps.get(index).map_or(0.0, |a| a.norm_sqr())
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.qubits {
            return Err(Error::Index { index: q, len: self.qubits });
        }
        Ok(())
    }

    /// Arbitrary 2×2 unitary `[[m00, m01], [m10, m11]]` on one qubit.
    pub fn apply_1q(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) -> Result<()> {
        self.check_qubit(qubit)?;
        let bit = 1 << qubit;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | bit]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
        Ok(())
    }

    /// Universal single-qubit gate
    /// `G(θ,φ,λ) = [[cos θ/2, −e^{iλ} sin θ/2], [e^{iφ} sin θ/2, e^{i(φ+λ)} cos θ/2]]`.
    pub fn apply_g(&mut self, qubit: usize, theta: f64, phi: f64, lambda: f64) -> Result<()> {
        self.apply_1q(qubit, g_matrix(theta, phi, lambda))
    }

    pub fn apply_cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.check_qubit(control)?;
        self.check_qubit(target)?;
        if control == target {
            return Err(Error::Index { index: target, len: self.qubits });
        }
        let (c, t) = (1 << control, 1 << target);
        for i in 0..self.amps.len() {
            if i & c != 0 && i & t == 0 {
                self.amps.swap(i, i | t);
            }
        }
        Ok(())
    }
}

pub fn g_matrix(theta: f64, phi: f64, lambda: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (libm::sin(theta / 2.0), libm::cos(theta / 2.0));
    [
        [Complex64::new(c, 0.0), -Complex64::cis(lambda) * s],
        [Complex64::cis(phi) * s, Complex64::cis(phi + lambda) * c],
    ]
}

/// Two rotation layers, each followed by a linear CNOT chain `q → q+1`.
/// Layer one gives qubit `q` the features `(x[2q], x[2q+1])` as `(θ, φ)`
/// with `λ = 0`; layer two gives it the pair of qubit `(q + shift) mod n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EncodingCircuit {
    pub qubits: usize,
    /// Feature to radian multiplier.
    pub angle_scale: f64,
    /// Cyclic qubit shift of the feature pairs in the second layer.
    pub layer2_shift: usize,
}

impl Default for EncodingCircuit {
    fn default() -> Self {
        Self { qubits: DEFAULT_QUBITS, angle_scale: PI, layer2_shift: 1 }
    }
}

impl EncodingCircuit {
    pub fn features(&self) -> usize {
        2 * self.qubits
    }

    pub fn validate(&self) -> Result<()> {
        if self.qubits == 0 || self.qubits > 20 {
            return Err(Error::InvalidConfig(alloc::format!("qubit count {} outside 1..=20", self.qubits)));
        }
        if !self.angle_scale.is_finite() {
            return Err(Error::InvalidConfig("angle scale must be finite".into()));
        }
        Ok(())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.features() {
            return Err(shape_err(alloc::format!("{} features", self.features()), alloc::format!("{}", x.len())));
        }
        if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Range { index, value });
        }
        Ok(())
    }

    fn layer_pairs(&self) -> [Vec<usize>; 2] {
        let n = self.qubits;
        [(0..n).collect(), (0..n).map(|q| (q + self.layer2_shift) % n).collect()]
    }

    /// Applies `U(x)` to `state`.
    pub fn apply(&self, state: &mut StateVector, x: &[f64]) -> Result<()> {
        self.check_input(x)?;
        let s = self.angle_scale;
        for pairs in self.layer_pairs() {
            for (q, &p) in pairs.iter().enumerate() {
                state.apply_g(q, s * x[2 * p], s * x[2 * p + 1], 0.0)?;
            }
            for q in 0..self.qubits - 1 {
                state.apply_cnot(q, q + 1)?;
            }
        }
        Ok(())
    }

    /// Applies `U(x)†`: gates in reverse order, each replaced by its adjoint.
    pub fn apply_inverse(&self, state: &mut StateVector, x: &[f64]) -> Result<()> {
        self.check_input(x)?;
        let s = self.angle_scale;
        let [l1, l2] = self.layer_pairs();
        for pairs in [l2, l1] {
            for q in (0..self.qubits - 1).rev() {
                state.apply_cnot(q, q + 1)?;
            }
            for (q, &p) in pairs.iter().enumerate().rev() {
                // G(θ,φ,λ)† = G(−θ,−λ,−φ)
                state.apply_g(q, -s * x[2 * p], 0.0, -s * x[2 * p + 1])?;
            }
        }
        Ok(())
    }

    /// `|φ(x)> = U(x)|0...0>`.
    pub fn encode_state(&self, x: &[f64]) -> Result<StateVector> {
        let mut state = StateVector::zero(self.qubits);
        self.apply(&mut state, x)?;
        Ok(state)
    }

    pub fn kernel_value(&self, xi: &[f64], xj: &[f64]) -> Result<f64> {
        Ok(fidelity(&self.encode_state(xi)?, &self.encode_state(xj)?))
    }

    /// Probability of measuring `0^n` after `U(xj)† U(xi) |0...0>`.
    pub fn compound_probability(&self, xi: &[f64], xj: &[f64]) -> Result<f64> {
        let mut state = self.encode_state(xi)?;
        self.apply_inverse(&mut state, xj)?;
        Ok(state.probability(0))
    }

    /// Encodes every row of `x`.
    pub fn encode_rows(&self, x: &DMatrix<f64>) -> Result<Vec<StateVector>> {
        self.validate()?;
        let mut row = vec![0.0; x.ncols()];
        (0..x.nrows())
            .map(|i| {
                for (j, r) in row.iter_mut().enumerate() {
                    *r = x[(i, j)];
                }
                self.encode_state(&row)
            })
            .collect()
    }
}

pub fn fidelity(a: &StateVector, b: &StateVector) -> f64 {
    a.inner(b).norm_sqr()
}

/// How the kernel entries were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Provenance {
    Exact,
    /// Frequency of the `0^n` outcome over `shots` repetitions.
    Shots { shots: u64, seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    pub values: DMatrix<f64>,
    pub provenance: Provenance,
}

impl KernelMatrix {
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.values.is_square() && (0..self.nrows()).all(|i| (0..i).all(|j| (self.values[(i, j)] - self.values[(j, i)]).abs() <= tol))
    }
}

/// Shot-estimation settings. `None` selects exact evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotConfig {
    pub shots: u64,
    pub seed: u64,
}

/// Frequency of the `0^n` outcome for kernel entry `(i, j)` when the exact
/// probability is `p`. Each entry draws from its own stream, so entries can
/// be evaluated in any order.
pub fn shot_estimate(p: f64, shots: ShotConfig, i: usize, j: usize) -> Result<f64> {
    let p = p.clamp(0.0, 1.0);
    let dist = Binomial::new(shots.shots, p).map_err(|e| Error::Domain(alloc::format!("binomial({}, {p}): {e}", shots.shots)))?;
    let hits = dist.sample(&mut rng::pair_stream(shots.seed, i, j));
    Ok(hits as f64 / shots.shots as f64)
}

pub fn provenance(shots: Option<ShotConfig>) -> Result<Provenance> {
    match shots {
        None => Ok(Provenance::Exact),
        Some(s) if s.shots == 0 => Err(Error::InvalidConfig("shot count must be positive".into())),
        Some(s) => Ok(Provenance::Shots { shots: s.shots, seed: s.seed }),
    }
}

/// Kernel block between two sets of already encoded states.
pub fn kernel_from_states(a: &[StateVector], b: &[StateVector], shots: Option<ShotConfig>) -> Result<KernelMatrix> {
    let provenance = provenance(shots)?;
    let mut values = DMatrix::zeros(a.len(), b.len());
    for (i, sa) in a.iter().enumerate() {
        for (j, sb) in b.iter().enumerate() {
            let p = fidelity(sa, sb);
            values[(i, j)] = match shots {
                None => p,
                Some(s) => shot_estimate(p, s, i, j)?,
            };
        }
    }
    Ok(KernelMatrix { values, provenance })
}

/// Symmetric Gram matrix of one set of states. Only the upper triangle is
/// evaluated, so the result is exactly symmetric in both modes.
pub fn gram_from_states(a: &[StateVector], shots: Option<ShotConfig>) -> Result<KernelMatrix> {
    let provenance = provenance(shots)?;
    let n = a.len();
    let mut values = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let p = fidelity(&a[i], &a[j]);
            let v = match shots {
                None => p,
                Some(s) => shot_estimate(p, s, i, j)?,
            };
            values[(i, j)] = v;
            values[(j, i)] = v;
        }
    }
    Ok(KernelMatrix { values, provenance })
}

/// Kernel block `k(a_i, b_j)` for feature rows of `a` and `b`.
pub fn kernel_matrix(circuit: &EncodingCircuit, a: &DMatrix<f64>, b: &DMatrix<f64>, shots: Option<ShotConfig>) -> Result<KernelMatrix> {
    kernel_from_states(&circuit.encode_rows(a)?, &circuit.encode_rows(b)?, shots)
}

pub fn gram_matrix(circuit: &EncodingCircuit, a: &DMatrix<f64>, shots: Option<ShotConfig>) -> Result<KernelMatrix> {
    gram_from_states(&circuit.encode_rows(a)?, shots)
}
