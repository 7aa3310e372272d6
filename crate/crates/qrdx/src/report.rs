//! Benchmark report: JSON and CSV serialisation, text tables and a parser
//! for the rendered tables.
//!
//! Values are printed in shortest round-trip form unless a precision is
//! requested, so a parsed full-precision table reproduces the JSON values
//! exactly. Runtimes are kept out of `report.json` and `report.csv` so those
//! depend only on the configuration and the dataset.

use qrdx_core::metrics::SubsetAuc;
use qrdx_core::svm::GridEntry;
use serde::{Deserialize, Serialize};

use crate::config::{Method, QsvmSource};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducerMetrics {
    /// Test-split reconstruction MSE.
    pub mse: f64,
    /// Test-split classifier BCE, for models with a classifier head.
    pub bce: Option<f64>,
    /// Classifier-head AUC over the QSVM evaluation subsets.
    pub classifier_auc: Option<SubsetAuc>,
    pub epochs_run: usize,
    pub best_epoch: usize,
}

/// Protocol settings a row was produced with, requested and as used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolEcho {
    pub seed: u64,
    pub d_star: usize,
    pub qubits: usize,
    pub shots: u64,
    pub c_grid: Vec<f64>,
    pub qsvm_train_source: QsvmSource,
    pub qsvm_train_requested: usize,
    pub qsvm_train_used: usize,
    pub qsvm_val_requested: usize,
    pub qsvm_val_used: usize,
    pub qsvm_test_requested: usize,
    pub qsvm_test_used: usize,
    pub subsets: usize,
    pub subset_size: usize,
    pub train_eval_disjoint: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub method: Method,
    pub label: String,
    pub extraction_type: String,
    pub optimisation: String,
    pub reducer: Option<ReducerMetrics>,
    pub qsvm_auc: Option<SubsetAuc>,
    pub selected_c: Option<f64>,
    pub grid: Vec<GridEntry>,
    pub protocol: Option<ProtocolEcho>,
    pub gram_hash: Option<String>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
    #[serde(skip)]
    pub runtime_s: f64,
}

impl BenchmarkRow {
    /// Row for `method` with no results yet.
    pub fn empty(method: Method) -> Self {
        Self {
            method,
            label: method.label().to_string(),
            extraction_type: method.extraction_type().to_string(),
            optimisation: method.optimisation().to_string(),
            reducer: None,
            qsvm_auc: None,
            selected_c: None,
            grid: Vec::new(),
            protocol: None,
            gram_hash: None,
            warnings: Vec::new(),
            error: None,
            runtime_s: 0.0,
        }
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchmarkRow>,
}

const CLASSICAL_TITLE: &str = "Classical feature extraction";
const AE_TITLE: &str = "Autoencoder feature extraction";

fn num(v: f64, precision: Option<usize>) -> String {
    match precision {
        Some(p) => format!("{v:.p$}"),
        None => format!("{v}"),
    }
}

fn pm(a: &SubsetAuc, precision: Option<usize>) -> String {
    format!("{} ± {}", num(a.mean, precision), num(a.std, precision))
}

fn cell_text(s: &str) -> String {
    s.replace('|', "/").replace('\n', " ")
}

impl BenchmarkReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("report JSON: {e}")))
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let header = [
            "method",
            "label",
            "extraction_type",
            "optimisation",
            "mse",
            "bce",
            "classifier_auc_mean",
            "classifier_auc_std",
            "qsvm_auc_mean",
            "qsvm_auc_std",
            "selected_c",
            "error",
        ];
        w.write_record(header).expect("in-memory write");
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let red = r.reducer.as_ref();
            let clf = red.and_then(|m| m.classifier_auc.as_ref());
            w.write_record([
                r.method.id().to_string(),
                r.label.clone(),
                r.extraction_type.clone(),
                r.optimisation.clone(),
                opt(red.map(|m| m.mse)),
                opt(red.and_then(|m| m.bce)),
                opt(clf.map(|a| a.mean)),
                opt(clf.map(|a| a.std)),
                opt(r.qsvm_auc.as_ref().map(|a| a.mean)),
                opt(r.qsvm_auc.as_ref().map(|a| a.std)),
                opt(r.selected_c),
                r.error.clone().unwrap_or_default(),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// Per-row wall-clock seconds, keyed by method id.
    pub fn timings_json(&self) -> String {
        let map: serde_json::Map<String, serde_json::Value> =
            self.rows.iter().map(|r| (r.method.id().to_string(), serde_json::json!(r.runtime_s))).collect();
        let mut s = serde_json::to_string_pretty(&map).expect("timings serialise");
        s.push('\n');
        s
    }

    /// Markdown-style tables: classical rows first, then autoencoder rows.
    /// `None` prints every number in shortest round-trip form.
    pub fn render_table(&self, precision: Option<usize>) -> String {
        let mut out = String::new();
        let qsvm = |r: &BenchmarkRow| match (&r.error, &r.qsvm_auc) {
            (Some(e), _) => format!("failed: {}", cell_text(e)),
            (None, Some(a)) => pm(a, precision),
            (None, None) => "-".to_string(),
        };
        let classical: Vec<&BenchmarkRow> = self.rows.iter().filter(|r| !r.method.is_autoencoder()).collect();
        let ae: Vec<&BenchmarkRow> = self.rows.iter().filter(|r| r.method.is_autoencoder()).collect();
        if !classical.is_empty() {
            out.push_str(CLASSICAL_TITLE);
            out.push_str("\n| Method | Feature Extraction Type | QSVM AUC |\n|---|---|---|\n");
            for r in classical {
                out.push_str(&format!("| {} | {} | {} |\n", r.label, r.extraction_type, qsvm(r)));
            }
        }
        if !ae.is_empty() {
            if !out.is_empty() {
                out.push('\n');
            }
            out.push_str(AE_TITLE);
            out.push_str("\n| Autoencoder | Optimisation | MSE Loss | BCE Loss | Classifier AUC | QSVM AUC |\n|---|---|---|---|---|---|\n");
            for r in ae {
                let red = r.reducer.as_ref();
                let mse = red.map(|m| num(m.mse, precision)).unwrap_or_else(|| "-".into());
                let bce = red.and_then(|m| m.bce).map(|v| num(v, precision)).unwrap_or_else(|| "-".into());
                let clf = red.and_then(|m| m.classifier_auc.as_ref()).map(|a| pm(a, precision)).unwrap_or_else(|| "-".into());
                out.push_str(&format!("| {} | {} | {mse} | {bce} | {clf} | {} |\n", r.label, r.optimisation, qsvm(r)));
            }
        }
        out
    }
}

/// One table recovered from rendered text.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedTable {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// A parsed table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Missing,
    Value(f64),
    MeanStd(f64, f64),
    Failed(String),
    Text(String),
}

pub fn parse_cell(s: &str) -> Cell {
    let s = s.trim();
    if s == "-" || s.is_empty() {
        return Cell::Missing;
    }
    if let Some(msg) = s.strip_prefix("failed: ") {
        return Cell::Failed(msg.to_string());
    }
    if let Some((a, b)) = s.split_once(" ± ") {
        if let (Ok(a), Ok(b)) = (a.trim().parse(), b.trim().parse()) {
            return Cell::MeanStd(a, b);
        }
    }
    match s.parse() {
        Ok(v) => Cell::Value(v),
        Err(_) => Cell::Text(s.to_string()),
    }
}

fn split_row(line: &str) -> Vec<String> {
    let inner = line.trim().trim_start_matches('|').trim_end_matches('|');
    inner.split('|').map(|c| c.trim().to_string()).collect()
}

/// Parse the output of [`BenchmarkReport::render_table`].
pub fn parse_tables(text: &str) -> Result<Vec<ParsedTable>> {
    let mut tables = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.next() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('|') {
            return Err(Error::Config(format!("table row without a title: {line}")));
        }
        let title = line.to_string();
        let header = split_row(lines.next().ok_or_else(|| Error::Config(format!("{title}: missing header")))?);
        let rule = lines.next().unwrap_or_default();
        if !rule.trim_start().starts_with("|---") {
            return Err(Error::Config(format!("{title}: missing header rule")));
        }
        let mut rows = Vec::new();
        while let Some(l) = lines.peek() {
            if !l.trim_start().starts_with('|') {
                break;
            }
            let cells = split_row(l);
            if cells.len() != header.len() {
                return Err(Error::Config(format!("{title}: row has {} cells, header has {}", cells.len(), header.len())));
            }
            rows.push(cells);
            lines.next();
        }
        tables.push(ParsedTable { title, header, rows });
    }
    Ok(tables)
}
