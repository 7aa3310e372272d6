//! Dataset, matrix and model files.
//!
//! Dataset CSV: header of feature names plus `label`, one row per sample.
//! Dataset binary: `QRDX`, u64 rows, u64 cols, row-major little-endian f64
//! values, then one u8 label per row. Matrix binary: `QRDM`, u64 rows, u64
//! cols, row-major f64. Floats are written in shortest round-trip form, so
//! CSV files reproduce values exactly.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use qrdx_core::dataset::feature_names;
use qrdx_core::matrix::default_names;
use qrdx_core::svm::KernelSvmModel;
use qrdx_core::{FeatureMatrix, RAW_FEATURES};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const DATASET_MAGIC: &[u8; 4] = b"QRDX";
const MATRIX_MAGIC: &[u8; 4] = b"QRDM";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    Csv,
    Binary,
}

impl FileFormat {
    /// `.csv` selects CSV, anything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => FileFormat::Csv,
            _ => FileFormat::Binary,
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Loads a dataset, detecting the binary format by its magic bytes.
pub fn read_dataset(path: &Path) -> Result<FeatureMatrix> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(DATASET_MAGIC) {
        decode_dataset_binary(path, &bytes)
    } else {
        decode_dataset_csv(path, &bytes)
    }
}

pub fn write_dataset(path: &Path, data: &FeatureMatrix, format: FileFormat) -> Result<()> {
    let bytes = match format {
        FileFormat::Csv => encode_dataset_csv(data),
        FileFormat::Binary => encode_dataset_binary(data),
    };
    write_bytes(path, &bytes)
}

pub fn encode_dataset_binary(data: &FeatureMatrix) -> Vec<u8> {
    let (r, c) = (data.rows(), data.cols());
    let mut out = Vec::with_capacity(20 + 8 * r * c + r);
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&(r as u64).to_le_bytes());
    out.extend_from_slice(&(c as u64).to_le_bytes());
    let v = data.values();
    for i in 0..r {
        for j in 0..c {
            out.extend_from_slice(&v[(i, j)].to_le_bytes());
        }
    }
    out.extend_from_slice(data.labels());
    out
}

fn header(path: &Path, bytes: &[u8], magic: &[u8; 4]) -> Result<(usize, usize, usize)> {
    let bad = |m: &str| Error::format(path, m);
    if bytes.len() < 20 || &bytes[..4] != magic {
        return Err(bad("missing or truncated header"));
    }
    let rows = u64::from_le_bytes(bytes[4..12].try_into().expect("8 bytes"));
    let cols = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes"));
    let cells = rows.checked_mul(cols).and_then(|n| n.checked_mul(8)).ok_or_else(|| bad("dimensions overflow"))?;
    let (rows, cols, cells) = (
        usize::try_from(rows).map_err(|_| bad("row count too large"))?,
        usize::try_from(cols).map_err(|_| bad("column count too large"))?,
        usize::try_from(cells).map_err(|_| bad("payload too large"))?,
    );
    Ok((rows, cols, cells))
}

fn decode_f64s(payload: &[u8], rows: usize, cols: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(rows, cols);
    for (k, chunk) in payload.chunks_exact(8).enumerate() {
        m[(k / cols, k % cols)] = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
    }
    m
}

fn names_for(cols: usize) -> Vec<String> {
    if cols == RAW_FEATURES {
        feature_names()
    } else {
        default_names(cols)
    }
}

pub fn decode_dataset_binary(path: &Path, bytes: &[u8]) -> Result<FeatureMatrix> {
    let (rows, cols, cells) = header(path, bytes, DATASET_MAGIC)?;
    if bytes.len() != 20 + cells + rows {
        return Err(Error::format(path, format!("expected {} bytes for {rows}x{cols}, found {}", 20 + cells + rows, bytes.len())));
    }
    let values = decode_f64s(&bytes[20..20 + cells], rows, cols);
    let labels = bytes[20 + cells..].to_vec();
    FeatureMatrix::new(values, labels, names_for(cols)).map_err(|e| Error::format(path, e.to_string()))
}

fn push_row<'a>(line: &mut String, cells: impl Iterator<Item = &'a f64>) {
    use std::fmt::Write as _;
    for (k, v) in cells.enumerate() {
        if k > 0 {
            line.push(',');
        }
        write!(line, "{v}").expect("write to string");
    }
}

pub fn encode_dataset_csv(data: &FeatureMatrix) -> Vec<u8> {
    let mut out = String::new();
    for name in data.feature_names() {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("label\n");
    let v = data.values();
    let mut row = Vec::with_capacity(data.cols());
    for i in 0..data.rows() {
        row.clear();
        row.extend(v.row(i).iter().copied());
        push_row(&mut out, row.iter());
        out.push(',');
        out.push_str(&data.labels()[i].to_string());
        out.push('\n');
    }
    out.into_bytes()
}

pub fn decode_dataset_csv(path: &Path, bytes: &[u8]) -> Result<FeatureMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(bytes);
    let head = rdr.headers().map_err(|e| Error::format(path, e.to_string()))?.clone();
    if head.len() < 2 || &head[head.len() - 1] != "label" {
        return Err(Error::format(path, "last CSV column must be `label`"));
    }
    let cols = head.len() - 1;
    let names: Vec<String> = head.iter().take(cols).map(str::to_owned).collect();
    let mut flat = Vec::new();
    let mut labels = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        if rec.len() != cols + 1 {
            return Err(Error::format(path, format!("row {}: expected {} fields, found {}", r + 1, cols + 1, rec.len())));
        }
        for (c, field) in rec.iter().take(cols).enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::format(path, format!("row {}, column {}: `{field}` is not a number", r + 1, c + 1)))?;
            flat.push(v);
        }
        let label: u8 = rec[cols]
            .trim()
            .parse()
            .map_err(|_| Error::format(path, format!("row {}: label `{}` is not 0 or 1", r + 1, &rec[cols])))?;
        labels.push(label);
    }
    let values = DMatrix::from_row_slice(labels.len(), cols, &flat);
    FeatureMatrix::new(values, labels, names).map_err(|e| Error::format(path, e.to_string()))
}

pub fn encode_matrix_binary(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(20 + 8 * m.len());
    out.extend_from_slice(MATRIX_MAGIC);
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.extend_from_slice(&m[(i, j)].to_le_bytes());
        }
    }
    out
}

pub fn decode_matrix_binary(path: &Path, bytes: &[u8]) -> Result<DMatrix<f64>> {
    let (rows, cols, cells) = header(path, bytes, MATRIX_MAGIC)?;
    if bytes.len() != 20 + cells {
        return Err(Error::format(path, format!("expected {} bytes for {rows}x{cols}, found {}", 20 + cells, bytes.len())));
    }
    Ok(decode_f64s(&bytes[20..], rows, cols))
}

pub fn encode_matrix_csv(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = String::new();
    let mut row = Vec::with_capacity(m.ncols());
    for i in 0..m.nrows() {
        row.clear();
        row.extend(m.row(i).iter().copied());
        push_row(&mut out, row.iter());
        out.push('\n');
    }
    out.into_bytes()
}

pub fn decode_matrix_csv(path: &Path, bytes: &[u8]) -> Result<DMatrix<f64>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(bytes);
    let mut flat = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        if *cols.get_or_insert(rec.len()) != rec.len() {
            return Err(Error::format(path, format!("row {} has {} fields", rows + 1, rec.len())));
        }
        for field in rec.iter() {
            flat.push(field.trim().parse::<f64>().map_err(|_| Error::format(path, format!("`{field}` is not a number")))?);
        }
        rows += 1;
    }
    Ok(DMatrix::from_row_slice(rows, cols.unwrap_or(0), &flat))
}

pub fn write_matrix(path: &Path, m: &DMatrix<f64>, format: FileFormat) -> Result<()> {
    let bytes = match format {
        FileFormat::Csv => encode_matrix_csv(m),
        FileFormat::Binary => encode_matrix_binary(m),
    };
    write_bytes(path, &bytes)
}

pub fn read_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let bytes = read_bytes(path)?;
    if bytes.starts_with(MATRIX_MAGIC) {
        decode_matrix_binary(path, &bytes)
    } else {
        decode_matrix_csv(path, &bytes)
    }
}

pub fn write_blob(path: &Path, bytes: &[u8]) -> Result<()> {
    write_bytes(path, bytes)
}

pub fn read_blob(path: &Path) -> Result<Vec<u8>> {
    read_bytes(path)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    write_bytes(path, text.as_bytes())
}

/// Serialised SVM: dual solution plus the hash of the Gram matrix it was
/// trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModelFile {
    #[serde(rename = "C")]
    pub c: f64,
    pub alphas: Vec<f64>,
    pub labels: Vec<f64>,
    pub bias: f64,
    pub support_indices: Vec<usize>,
    pub gram_hash: String,
}

impl SvmModelFile {
    pub fn new(model: &KernelSvmModel, gram_hash: String) -> Self {
        Self {
            c: model.c,
            alphas: model.alphas.clone(),
            labels: model.labels.clone(),
            bias: model.bias,
            support_indices: model.support_indices.clone(),
            gram_hash,
        }
    }

    pub fn into_model(self) -> KernelSvmModel {
        KernelSvmModel {
            c: self.c,
            alphas: self.alphas,
            labels: self.labels,
            bias: self.bias,
            support_indices: self.support_indices,
            iterations: 0,
        }
    }
}

pub fn write_svm_model(path: &Path, model: &SvmModelFile) -> Result<()> {
    let json = serde_json::to_string_pretty(model).expect("model serialises");
    write_bytes(path, json.as_bytes())
}

pub fn read_svm_model(path: &Path) -> Result<SvmModelFile> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| Error::format(path, e.to_string()))
}

