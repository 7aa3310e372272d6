//! Parallel kernel assembly with an on-disk cache.
//!
//! Entries are computed with the same per-entry arithmetic and shot streams
//! as the sequential builders in `qrdx_core::quantum`, so results agree
//! bitwise regardless of thread count.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::DMatrix;
use qrdx_core::quantum::{fidelity, provenance, shot_estimate, EncodingCircuit, KernelMatrix, ShotConfig, StateVector};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::io;

fn encode_par(circuit: &EncodingCircuit, x: &DMatrix<f64>) -> Result<Vec<StateVector>> {
    circuit.validate()?;
    let rows: Vec<Vec<f64>> = x.row_iter().map(|r| r.iter().copied().collect()).collect();
    Ok(rows.par_iter().map(|r| circuit.encode_state(r)).collect::<qrdx_core::Result<Vec<_>>>()?)
}

fn entry(a: &StateVector, b: &StateVector, shots: Option<ShotConfig>, i: usize, j: usize) -> Result<f64> {
    let p = fidelity(a, b);
    Ok(match shots {
        None => p,
        Some(s) => shot_estimate(p, s, i, j)?,
    })
}

/// Gram matrix of the rows of `a`, upper triangle mirrored.
pub fn par_gram(circuit: &EncodingCircuit, a: &DMatrix<f64>, shots: Option<ShotConfig>) -> Result<KernelMatrix> {
    let prov = provenance(shots)?;
    let states = encode_par(circuit, a)?;
    let n = states.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| entry(&states[i], &states[j], shots, i, j)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut values = DMatrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            values[(i, i + off)] = v;
            values[(i + off, i)] = v;
        }
    }
    Ok(KernelMatrix { values, provenance: prov })
}

/// Kernel block `k(a_i, b_j)`.
pub fn par_cross(circuit: &EncodingCircuit, a: &DMatrix<f64>, b: &DMatrix<f64>, shots: Option<ShotConfig>) -> Result<KernelMatrix> {
    let prov = provenance(shots)?;
    let sa = encode_par(circuit, a)?;
    let sb = encode_par(circuit, b)?;
    let rows: Vec<Vec<f64>> = (0..sa.len())
        .into_par_iter()
        .map(|i| (0..sb.len()).map(|j| entry(&sa[i], &sb[j], shots, i, j)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let values = DMatrix::from_fn(sa.len(), sb.len(), |i, j| rows[i][j]);
    Ok(KernelMatrix { values, provenance: prov })
}

fn hash_matrix(h: &mut Sha256, m: &DMatrix<f64>) {
    h.update((m.nrows() as u64).to_le_bytes());
    h.update((m.ncols() as u64).to_le_bytes());
    for r in m.row_iter() {
        for v in r.iter() {
            h.update(v.to_le_bytes());
        }
    }
}

/// Hex SHA-256 over the circuit settings, shot settings and input rows.
pub fn kernel_key(circuit: &EncodingCircuit, shots: Option<ShotConfig>, a: &DMatrix<f64>, b: Option<&DMatrix<f64>>) -> String {
    let mut h = Sha256::new();
    h.update(b"qrdx-kernel-v1");
    h.update((circuit.qubits as u64).to_le_bytes());
    h.update(circuit.angle_scale.to_le_bytes());
    h.update((circuit.layer2_shift as u64).to_le_bytes());
    match shots {
        None => h.update([0u8]),
        Some(s) => {
            h.update([1u8]);
            h.update(s.shots.to_le_bytes());
            h.update(s.seed.to_le_bytes());
        }
    }
    hash_matrix(&mut h, a);
    match b {
        None => h.update(b"gram"),
        Some(b) => {
            h.update(b"cross");
            hash_matrix(&mut h, b);
        }
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CachedKernel {
    pub kernel: KernelMatrix,
    pub key: String,
    pub from_cache: bool,
}

/// Kernel builder bound to one circuit and an optional cache directory.
#[derive(Debug, Clone)]
pub struct KernelEngine {
    pub circuit: EncodingCircuit,
    pub cache_dir: Option<PathBuf>,
}

impl KernelEngine {
    pub fn new(circuit: EncodingCircuit, cache_dir: Option<PathBuf>) -> Self {
        Self { circuit, cache_dir }
    }

    pub fn gram(&self, a: &DMatrix<f64>, shots: Option<ShotConfig>) -> Result<CachedKernel> {
        let key = kernel_key(&self.circuit, shots, a, None);
        self.cached(key, (a.nrows(), a.nrows()), shots, || par_gram(&self.circuit, a, shots))
    }

    pub fn cross(&self, a: &DMatrix<f64>, b: &DMatrix<f64>, shots: Option<ShotConfig>) -> Result<CachedKernel> {
        let key = kernel_key(&self.circuit, shots, a, Some(b));
        self.cached(key, (a.nrows(), b.nrows()), shots, || par_cross(&self.circuit, a, b, shots))
    }

    pub fn cache_path(&self, key: &str) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|d| d.join(format!("{key}.qrdm")))
    }

    fn cached(
        &self,
        key: String,
        shape: (usize, usize),
        shots: Option<ShotConfig>,
        compute: impl FnOnce() -> Result<KernelMatrix>,
    ) -> Result<CachedKernel> {
        let path = self.cache_path(&key);
        if let Some(p) = path.as_deref().filter(|p| p.exists()) {
            // Unreadable or mis-shaped entries are recomputed and replaced.
            if let Ok(values) = io::read_matrix(p) {
                if values.shape() == shape {
                    let kernel = KernelMatrix { values, provenance: provenance(shots)? };
                    return Ok(CachedKernel { kernel, key, from_cache: true });
                }
            }
        }
        let kernel = compute()?;
        if let Some(p) = path {
            store(&p, &kernel.values)?;
        }
        Ok(CachedKernel { kernel, key, from_cache: false })
    }
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Write to a temporary sibling, then rename, so readers never see a
/// partial file.
fn store(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
    let tmp = path.with_extension(format!("tmp{}-{n}", std::process::id()));
    std::fs::write(&tmp, io::encode_matrix_binary(m)).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
