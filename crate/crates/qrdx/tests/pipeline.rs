use std::path::Path;

use nalgebra::DMatrix;
use qrdx::config::QsvmSource;
use qrdx::kernel::{par_cross, par_gram, KernelEngine};
use qrdx::pipeline::{expand_methods, run_benchmark, run_pipeline, write_report};
use qrdx::report::{parse_cell, parse_tables, Cell};
use qrdx::{BenchmarkReport, Error, Method, PipelineConfig};
use qrdx_core::dataset::SplitSizes;
use qrdx_core::quantum::{gram_matrix, kernel_matrix, ShotConfig};

fn small_config(dir: &Path) -> PipelineConfig {
    let mut cfg = PipelineConfig { seed: 11, ..Default::default() };
    cfg.dataset.synthetic.samples = 600;
    cfg.dataset.synthetic.hardness = 0.0;
    cfg.dataset.split = SplitSizes::Counts { train: 400, val: 100, test: 100 };
    cfg.eval.qsvm_train = 40;
    cfg.eval.qsvm_val = 40;
    cfg.eval.qsvm_test = 50;
    cfg.eval.qsvm_train_source = QsvmSource::Train;
    cfg.benchmark.methods = vec![Method::Pca, Method::Ica];
    cfg.output.dir = dir.to_path_buf();
    cfg
}

fn run(cfg: &PipelineConfig) -> BenchmarkReport {
    let report = run_benchmark(&expand_methods(cfg)).unwrap();
    write_report(&cfg.output.dir, &report).unwrap();
    report
}

#[test]
fn report_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut cfg_b = small_config(b.path());
    cfg_b.output.workers = 2;
    run(&small_config(a.path()));
    run(&cfg_b);
    for name in ["report.json", "report.csv", "report.txt", "roc_pca.csv", "roc_ica.csv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(x == y, "{name} differs between runs");
    }
    let json = std::fs::read_to_string(a.path().join("report.json")).unwrap();
    assert!(!json.contains("runtime"));
    let timings: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.path().join("timings.json")).unwrap()).unwrap();
    assert!(timings["pca"].as_f64().unwrap() > 0.0);
}

#[test]
fn rows_echo_protocol_and_consistent_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&small_config(dir.path()));
    assert_eq!(report.rows.len(), 2);
    for row in &report.rows {
        assert!(row.error.is_none(), "{:?}", row.error);
        let auc = row.qsvm_auc.as_ref().unwrap();
        assert_eq!(auc.per_subset.len(), 5);
        let mean = auc.per_subset.iter().sum::<f64>() / 5.0;
        assert!((auc.mean - mean).abs() < 1e-12);
        assert!(auc.mean > 0.5, "{:?} AUC {}", row.method, auc.mean);
        let p = row.protocol.as_ref().unwrap();
        assert_eq!((p.qsvm_train_used, p.qsvm_val_used, p.qsvm_test_used), (40, 40, 50));
        assert_eq!((p.subsets, p.subset_size, p.d_star), (5, 10, 16));
        assert!(p.train_eval_disjoint);
        assert!(row.selected_c.is_some_and(|c| row.grid.iter().any(|g| g.c == c)));
        assert_eq!(row.grid.len(), 5);
        assert!(row.gram_hash.as_ref().is_some_and(|h| h.len() == 64));
    }
    let back = BenchmarkReport::from_json(&report.to_json()).unwrap();
    assert_eq!(back.to_json(), report.to_json());
    assert!(back.rows.iter().all(|r| r.runtime_s == 0.0));
}

#[test]
fn full_precision_table_parses_back_to_report_values() {
    let dir = tempfile::tempdir().unwrap();
    let report = run(&small_config(dir.path()));
    let tables = parse_tables(&report.render_table(None)).unwrap();
    assert_eq!(tables.len(), 1);
    assert_eq!(tables[0].title, "Classical feature extraction");
    assert_eq!(tables[0].header, ["Method", "Feature Extraction Type", "QSVM AUC"]);
    for (cells, row) in tables[0].rows.iter().zip(&report.rows) {
        assert_eq!(cells[0], row.label);
        let auc = row.qsvm_auc.as_ref().unwrap();
        assert_eq!(parse_cell(&cells[2]), Cell::MeanStd(auc.mean, auc.std));
    }
    assert_eq!(std::fs::read_to_string(dir.path().join("report.txt")).unwrap(), report.render_table(None));
}

#[test]
fn failing_row_is_annotated_and_others_still_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.benchmark.methods = vec![Method::Pca, Method::Lle];
    cfg.reducer.lle.k_neighbors = 10_000;
    let report = run(&cfg);
    assert!(report.rows[0].error.is_none());
    let lle = &report.rows[1];
    assert!(lle.failed());
    assert!(lle.error.as_ref().unwrap().contains("reduce"), "{:?}", lle.error);
    let table = report.render_table(Some(3));
    assert!(table.contains("failed: "), "{table}");
    let parsed = parse_tables(&table).unwrap();
    assert!(matches!(parse_cell(&parsed[0].rows[1][2]), Cell::Failed(_)));
}

#[test]
fn empty_benchmark_is_a_configuration_error() {
    assert!(matches!(run_benchmark(&[]), Err(Error::Config(_))));
}

#[test]
fn single_pipeline_writes_row_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let row = run_pipeline(&cfg).unwrap();
    assert_eq!(row.method, Method::Pca);
    let roc = std::fs::read_to_string(dir.path().join("roc_pca.csv")).unwrap();
    assert!(roc.lines().count() > 2);
}

#[test]
fn test_source_warns_and_keeps_evaluation_disjoint() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small_config(dir.path());
    cfg.eval.qsvm_train_source = QsvmSource::Test;
    cfg.eval.qsvm_test = 100;
    cfg.benchmark.methods = vec![Method::Pca];
    let report = run(&cfg);
    let row = &report.rows[0];
    assert!(!row.warnings.is_empty());
    let p = row.protocol.as_ref().unwrap();
    assert!(p.train_eval_disjoint);
    assert!(p.qsvm_train_used + p.qsvm_test_used <= 100);
    assert_eq!(p.qsvm_test_used % 10, 0);
}

fn rows(n: usize, seed: u64) -> DMatrix<f64> {
    let mut s = seed;
    DMatrix::from_fn(n, 16, |_, _| {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64
    })
}

#[test]
fn cached_parallel_and_sequential_kernels_agree_bitwise() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = PipelineConfig::default().circuit.circuit();
    let engine = KernelEngine::new(circuit.clone(), Some(dir.path().join("cache")));
    let (a, b) = (rows(12, 1), rows(7, 2));
    for shots in [None, Some(ShotConfig { shots: 500, seed: 9 })] {
        let first = engine.gram(&a, shots).unwrap();
        let second = engine.gram(&a, shots).unwrap();
        assert!(!first.from_cache && second.from_cache);
        let seq = gram_matrix(&circuit, &a, shots).unwrap();
        assert_eq!(first.kernel.values, seq.values);
        assert_eq!(second.kernel.values, seq.values);
        assert_eq!(par_gram(&circuit, &a, shots).unwrap().values, seq.values);

        let cross = engine.cross(&b, &a, shots).unwrap();
        let again = engine.cross(&b, &a, shots).unwrap();
        assert!(again.from_cache);
        let seq = kernel_matrix(&circuit, &b, &a, shots).unwrap();
        assert_eq!(cross.kernel.values, seq.values);
        assert_eq!(again.kernel.values, seq.values);
        assert_eq!(par_cross(&circuit, &b, &a, shots).unwrap().values, seq.values);
    }
    let leftovers: Vec<_> = std::fs::read_dir(dir.path().join("cache"))
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_none_or(|x| x != "qrdm"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn corrupt_cache_entry_is_recomputed() {
    let dir = tempfile::tempdir().unwrap();
    let circuit = PipelineConfig::default().circuit.circuit();
    let engine = KernelEngine::new(circuit.clone(), Some(dir.path().to_path_buf()));
    let a = rows(5, 3);
    let k = engine.gram(&a, None).unwrap();
    std::fs::write(engine.cache_path(&k.key).unwrap(), b"QRDMgarbage").unwrap();
    let again = engine.gram(&a, None).unwrap();
    assert!(!again.from_cache);
    assert_eq!(again.kernel.values, k.kernel.values);
}

#[test]
fn shot_noise_is_seeded() {
    let circuit = PipelineConfig::default().circuit.circuit();
    let a = rows(6, 4);
    let s = |seed| Some(ShotConfig { shots: 200, seed });
    assert_eq!(par_gram(&circuit, &a, s(1)).unwrap().values, par_gram(&circuit, &a, s(1)).unwrap().values);
    assert_ne!(par_gram(&circuit, &a, s(1)).unwrap().values, par_gram(&circuit, &a, s(2)).unwrap().values);
}
