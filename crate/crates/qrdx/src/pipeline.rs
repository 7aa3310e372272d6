//! Reduce → latent rescale → quantum kernel → QSVM grid → subset evaluation.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use qrdx_core::autoencoder::{evaluate_model, reduce as ae_reduce, train_autoencoder, EpochLog, TrainedAe};
use qrdx_core::dataset::split::balanced_pick;
use qrdx_core::dataset::{fit_minmax, generate_synthetic, split_dataset};
use qrdx_core::metrics::{roc_curve, subset_uncertainty, RocPoint};
use qrdx_core::reduce::ReducerModel;
use qrdx_core::rng;
use qrdx_core::svm::{select_entry, solve_dual, GridEntry, KernelSvmModel, SmoConfig};
use qrdx_core::{metrics, FeatureMatrix};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{EvalConfig, Method, PipelineConfig, QsvmSource, ReducerPlan};
use crate::error::{Error, Result, StageExt};
use crate::io;
use crate::kernel::KernelEngine;
use crate::report::{BenchmarkReport, BenchmarkRow, ProtocolEcho, ReducerMetrics};

/// Train/validation/test splits after input min-max normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedData {
    pub train: FeatureMatrix,
    pub val: FeatureMatrix,
    pub test: FeatureMatrix,
}

/// Load or generate the dataset, split it and rescale every split with the
/// training-split minima and maxima.
pub fn prepare_data(cfg: &PipelineConfig) -> Result<PreparedData> {
    let raw = match &cfg.dataset.path {
        Some(p) => io::read_dataset(p)?,
        None => {
            let s = cfg.dataset.synthetic;
            generate_synthetic(s.samples, s.seed.unwrap_or(cfg.seed), s.hardness)?
        }
    };
    let splits = split_dataset(&raw, &cfg.split_spec())?;
    let norm = fit_minmax(splits.train.values())?;
    let scale = |m: &FeatureMatrix| -> Result<FeatureMatrix> { Ok(m.with_values(norm.apply(m.values())?)?) };
    Ok(PreparedData { train: scale(&splits.train)?, val: scale(&splits.val)?, test: scale(&splits.test)? })
}

/// Reduced splits, before latent rescaling.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub train: FeatureMatrix,
    pub val: FeatureMatrix,
    pub test: FeatureMatrix,
    pub classical: Option<ReducerModel>,
    pub autoencoder: Option<TrainedAe>,
}

pub fn reduce_splits(plan: &ReducerPlan, d_star: usize, fit_samples: Option<usize>, data: &PreparedData) -> Result<Reduction> {
    match plan {
        ReducerPlan::Classical(r) => {
            let n = fit_samples.unwrap_or(data.train.rows()).min(data.train.rows());
            let fit_x = data.train.values().rows(0, n).into_owned();
            let model = r.fit(&fit_x, d_star)?;
            let t = |m: &FeatureMatrix| -> Result<FeatureMatrix> {
                let z = model.transform(m.values())?;
                Ok(FeatureMatrix::unnamed(z, m.labels().to_vec())?)
            };
            Ok(Reduction { train: t(&data.train)?, val: t(&data.val)?, test: t(&data.test)?, classical: Some(model), autoencoder: None })
        }
        ReducerPlan::Autoencoder(c) => {
            if d_star != qrdx_core::REDUCED_FEATURES {
                return Err(Error::Config(format!(
                    "autoencoders have a fixed {}-dimensional latent space, d_star is {d_star}",
                    qrdx_core::REDUCED_FEATURES
                )));
            }
            let trained = train_autoencoder(c, &data.train, &data.val)?;
            Ok(Reduction {
                train: ae_reduce(&trained.model, &data.train)?,
                val: ae_reduce(&trained.model, &data.val)?,
                test: ae_reduce(&trained.model, &data.test)?,
                classical: None,
                autoencoder: Some(trained),
            })
        }
    }
}

/// Event counts actually used by the QSVM stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

fn even(n: usize) -> usize {
    n - n % 2
}

fn floor_to(n: usize, m: usize) -> usize {
    n - n % m
}

/// Budgets that fit the available events.
///
/// `available` holds the event counts of the (train, val, test) splits.
/// Evaluation events always come from the test split and the validation
/// events for the C grid from the validation split. When QSVM training
/// shares a split with one of them, the two requests are scaled down in
/// proportion; otherwise each request is clipped on its own. Without
/// `cap_to_available` any shortfall is an error.
pub fn plan_budgets(eval: &EvalConfig, available: (usize, usize, usize)) -> Result<Budgets> {
    let (a_train, a_val, a_test) = available;
    let step = 2 * eval.subsets;
    let want = Budgets { train: eval.qsvm_train, val: eval.qsvm_val, test: eval.qsvm_test };
    let short = |what: &str, need: usize, have: usize| {
        Error::Core(qrdx_core::Error::InsufficientData(format!("{what} needs {need} events, {have} available")))
    };
    let shared = |avail: usize, first: usize, second: usize, second_step: usize, what: &str| -> Result<(usize, usize)> {
        if first + second <= avail {
            return Ok((first, second));
        }
        if !eval.cap_to_available {
            return Err(short(what, first + second, avail));
        }
        let f = even(avail * first / (first + second));
        Ok((f, floor_to(avail - f, second_step)))
    };
    let single = |avail: usize, n: usize, n_step: usize, what: &str| -> Result<usize> {
        if n <= avail {
            Ok(n)
        } else if eval.cap_to_available {
            Ok(floor_to(avail, n_step))
        } else {
            Err(short(what, n, avail))
        }
    };
    let b = match eval.qsvm_train_source {
        QsvmSource::Test => {
            let (t, e) = shared(a_test, want.train, want.test, step, "QSVM training plus evaluation on the test split")?;
            Budgets { train: t, val: single(a_val, want.val, 2, "QSVM validation")?, test: e }
        }
        QsvmSource::Val => {
            let (t, v) = shared(a_val, want.train, want.val, 2, "QSVM training plus validation on the validation split")?;
            Budgets { train: t, val: v, test: single(a_test, want.test, step, "QSVM evaluation")? }
        }
        QsvmSource::Train => Budgets {
            train: single(a_train, want.train, 2, "QSVM training")?,
            val: single(a_val, want.val, 2, "QSVM validation")?,
            test: single(a_test, want.test, step, "QSVM evaluation")?,
        },
    };
    if b.train < 2 || b.val < 2 || b.test < step {
        return Err(short("the QSVM protocol", 2 + 2 + step, a_train.min(a_val).min(a_test)));
    }
    Ok(b)
}

/// Row indices chosen for each QSVM role, into the respective splits.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn select_rows(source: QsvmSource, budgets: Budgets, labels: (&[u8], &[u8], &[u8])) -> Result<Selection> {
    let all = |l: &[u8]| (0..l.len()).collect::<Vec<_>>();
    let (lt, lv, le) = labels;
    Ok(match source {
        QsvmSource::Train => Selection {
            train: balanced_pick(lt, &all(lt), budgets.train, &[])?,
            val: balanced_pick(lv, &all(lv), budgets.val, &[])?,
            test: balanced_pick(le, &all(le), budgets.test, &[])?,
        },
        QsvmSource::Val => {
            let train = balanced_pick(lv, &all(lv), budgets.train, &[])?;
            let val = balanced_pick(lv, &all(lv), budgets.val, &train)?;
            Selection { train, val, test: balanced_pick(le, &all(le), budgets.test, &[])? }
        }
        QsvmSource::Test => {
            let train = balanced_pick(le, &all(le), budgets.train, &[])?;
            let test = balanced_pick(le, &all(le), budgets.test, &train)?;
            Selection { train, val: balanced_pick(lv, &all(lv), budgets.val, &[])?, test }
        }
    })
}

/// One model per C, fitted concurrently; highest validation AUC wins and
/// ties go to the smaller C.
pub fn grid_search(
    gram: &DMatrix<f64>,
    labels: &[u8],
    val_cross: &DMatrix<f64>,
    val_labels: &[u8],
    grid: &[f64],
    cfg: &SmoConfig,
) -> Result<(Vec<GridEntry>, KernelSvmModel)> {
    if grid.is_empty() {
        return Err(Error::Config("empty C grid".into()));
    }
    let fits: Vec<(GridEntry, KernelSvmModel)> = grid
        .par_iter()
        .map(|&c| {
            let model = solve_dual(gram, labels, c, cfg)?;
            let auc = metrics::auc(&model.decision_values(val_cross)?, val_labels)?;
            Ok((GridEntry { c, auc }, model))
        })
        .collect::<Result<_>>()?;
    let entries: Vec<GridEntry> = fits.iter().map(|f| f.0).collect();
    let best = select_entry(&entries).expect("non-empty grid");
    Ok((entries, fits.into_iter().nth(best).expect("index in range").1))
}

/// Everything one pipeline run produces.
#[derive(Debug, Clone)]
pub struct RowOutput {
    pub row: BenchmarkRow,
    pub roc: Vec<RocPoint>,
    pub history: Vec<EpochLog>,
    pub model: KernelSvmModel,
    pub gram_hash: String,
}

fn shot_seed(seed: u64, block: u64) -> u64 {
    rng::mix(seed ^ rng::mix(block))
}

fn rows_of(m: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    m.select_rows(idx)
}

/// Run one method end to end on already prepared data.
pub fn run_method(cfg: &PipelineConfig, method: Method, data: &PreparedData) -> Result<RowOutput> {
    let start = Instant::now();
    let mut warnings = Vec::new();
    let plan = cfg.reducer.plan(method, cfg.seed);
    let red = reduce_splits(&plan, cfg.reducer.d_star, cfg.reducer.fit_samples, data).stage("reduce")?;

    let latent = fit_minmax(red.train.values()).stage("rescale")?;
    let scaled = |m: &FeatureMatrix| latent.apply(m.values()).stage("rescale");
    let (z_train, z_val, z_test) = (scaled(&red.train)?, scaled(&red.val)?, scaled(&red.test)?);

    let budgets = plan_budgets(&cfg.eval, (data.train.rows(), data.val.rows(), data.test.rows())).stage("budget")?;
    let source = cfg.eval.qsvm_train_source;
    if source == QsvmSource::Test {
        warnings.push("QSVM trained on events drawn from the test split (disjoint from the evaluation events)".to_string());
    }
    let sel = select_rows(source, budgets, (data.train.labels(), data.val.labels(), data.test.labels())).stage("budget")?;
    let pick_labels = |l: &[u8], idx: &[usize]| idx.iter().map(|&i| l[i]).collect::<Vec<u8>>();
    let (x_tr, y_tr) = match source {
        QsvmSource::Train => (rows_of(&z_train, &sel.train), pick_labels(data.train.labels(), &sel.train)),
        QsvmSource::Val => (rows_of(&z_val, &sel.train), pick_labels(data.val.labels(), &sel.train)),
        QsvmSource::Test => (rows_of(&z_test, &sel.train), pick_labels(data.test.labels(), &sel.train)),
    };
    let x_val = rows_of(&z_val, &sel.val);
    let y_val = pick_labels(data.val.labels(), &sel.val);
    let x_ev = rows_of(&z_test, &sel.test);
    let y_ev = pick_labels(data.test.labels(), &sel.test);

    let cache = cfg.output.kernel_cache.then(|| cfg.output.dir.join("kernel_cache"));
    let engine = KernelEngine::new(cfg.circuit.circuit(), cache);
    let shots = |block| cfg.circuit.shot_config(shot_seed(cfg.seed, block));
    let gram = engine.gram(&x_tr, shots(0)).stage("kernel")?;
    let k_val = engine.cross(&x_val, &x_tr, shots(1)).stage("kernel")?;
    let k_ev = engine.cross(&x_ev, &x_tr, shots(2)).stage("kernel")?;

    let (grid, model) =
        grid_search(&gram.kernel.values, &y_tr, &k_val.kernel.values, &y_val, &cfg.svm.c_grid, &cfg.svm.smo()).stage("svm")?;
    let scores = model.decision_values(&k_ev.kernel.values).stage("evaluate")?;
    let qsvm_auc = subset_uncertainty(&scores, &y_ev, cfg.eval.subsets).stage("evaluate")?;
    let roc = roc_curve(&scores, &y_ev).stage("evaluate")?;

    let reducer = match &red.autoencoder {
        Some(trained) => {
            let m = evaluate_model(trained, &data.test).stage("evaluate")?;
            let z_ev = red.test.values().select_rows(&sel.test);
            let classifier_auc = match trained.model.classify(&z_ev).stage("evaluate")? {
                Some(p) => Some(subset_uncertainty(&p, &y_ev, cfg.eval.subsets).stage("evaluate")?),
                None => None,
            };
            Some(ReducerMetrics {
                mse: m.final_mse,
                bce: m.final_bce,
                classifier_auc,
                epochs_run: trained.epochs_run,
                best_epoch: trained.best_epoch,
            })
        }
        None => None,
    };

    let protocol = ProtocolEcho {
        seed: cfg.seed,
        d_star: cfg.reducer.d_star,
        qubits: cfg.circuit.qubits,
        shots: cfg.circuit.shots,
        c_grid: cfg.svm.c_grid.clone(),
        qsvm_train_source: source,
        qsvm_train_requested: cfg.eval.qsvm_train,
        qsvm_train_used: sel.train.len(),
        qsvm_val_requested: cfg.eval.qsvm_val,
        qsvm_val_used: sel.val.len(),
        qsvm_test_requested: cfg.eval.qsvm_test,
        qsvm_test_used: sel.test.len(),
        subsets: cfg.eval.subsets,
        subset_size: sel.test.len() / cfg.eval.subsets,
        train_eval_disjoint: source != QsvmSource::Test || sel.train.iter().all(|i| !sel.test.contains(i)),
    };
    if budgets.train < cfg.eval.qsvm_train || budgets.test < cfg.eval.qsvm_test || budgets.val < cfg.eval.qsvm_val {
        warnings.push(format!(
            "budgets capped to available events: train {}, val {}, test {}",
            budgets.train, budgets.val, budgets.test
        ));
    }
    let row = BenchmarkRow {
        selected_c: Some(model.c),
        grid,
        qsvm_auc: Some(qsvm_auc),
        reducer,
        protocol: Some(protocol),
        warnings,
        gram_hash: Some(gram.key.clone()),
        runtime_s: start.elapsed().as_secs_f64(),
        ..BenchmarkRow::empty(method)
    };
    let history = red.autoencoder.map(|t| t.history).unwrap_or_default();
    Ok(RowOutput { row, roc, history, model, gram_hash: gram.key })
}

/// Write the per-row ROC and training-curve CSVs into `dir`.
pub fn write_row_artifacts(dir: &Path, out: &RowOutput) -> Result<()> {
    let id = out.row.method.id();
    let mut roc = String::from("threshold,tpr,fpr\n");
    for p in &out.roc {
        roc.push_str(&format!("{},{},{}\n", p.threshold, p.tpr, p.fpr));
    }
    io::write_text(&dir.join(format!("roc_{id}.csv")), &roc)?;
    if !out.history.is_empty() {
        io::write_text(&dir.join(format!("curves_{id}.csv")), &curves_csv(&out.history))?;
    }
    Ok(())
}

fn curves_csv(history: &[EpochLog]) -> String {
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    let mut s = String::from(
        "epoch,train_total,train_mse,train_kl,train_bce,train_sinkhorn,val_total,val_mse,val_kl,val_bce,val_sinkhorn,latent_separation\n",
    );
    for h in history {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            h.epoch,
            h.train.total,
            h.train.mse,
            opt(h.train.kl),
            opt(h.train.bce),
            opt(h.train.sinkhorn),
            h.val.total,
            h.val.mse,
            opt(h.val.kl),
            opt(h.val.bce),
            opt(h.val.sinkhorn),
            opt(h.latent_separation),
        ));
    }
    s
}

/// Single-configuration run: the method in `cfg.reducer.method`, with its
/// artifacts written to `cfg.output.dir`.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<BenchmarkRow> {
    cfg.validate()?;
    let data = prepare_data(cfg).stage("data")?;
    let out = run_method(cfg, cfg.reducer.method, &data)?;
    create_dir(&cfg.output.dir)?;
    write_row_artifacts(&cfg.output.dir, &out)?;
    Ok(out.row)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// One configuration per benchmark row, one row per listed method.
pub fn expand_methods(cfg: &PipelineConfig) -> Vec<PipelineConfig> {
    cfg.benchmark
        .methods
        .iter()
        .map(|&m| {
            let mut c = cfg.clone();
            c.reducer.method = m;
            c
        })
        .collect()
}

/// Run every configuration, concurrently up to the worker budget of the
/// first one. A failing row is annotated and the others still run. Data
/// preparation is shared between rows with the same dataset settings.
pub fn run_benchmark(cfgs: &[PipelineConfig]) -> Result<BenchmarkReport> {
    let first = cfgs.first().ok_or_else(|| Error::Config("benchmark needs at least one configuration".into()))?;
    for c in cfgs {
        c.validate()?;
    }
    let data_key = |c: &PipelineConfig| format!("{}|{:?}", c.seed, c.dataset);
    let mut prepared: HashMap<String, std::result::Result<PreparedData, String>> = HashMap::new();
    for c in cfgs {
        prepared
            .entry(data_key(c))
            .or_insert_with(|| prepare_data(c).stage("data").map_err(|e| e.to_string()));
    }

    let run_row = |c: &PipelineConfig| -> (BenchmarkRow, Option<RowOutput>) {
        let method = c.reducer.method;
        let start = Instant::now();
        let result = match &prepared[&data_key(c)] {
            Ok(data) => run_method(c, method, data).map_err(|e| e.to_string()),
            Err(e) => Err(e.clone()),
        };
        match result {
            Ok(out) => (out.row.clone(), Some(out)),
            Err(msg) => {
                let mut row = BenchmarkRow::empty(method);
                row.error = Some(msg);
                row.runtime_s = start.elapsed().as_secs_f64();
                (row, None)
            }
        }
    };
    let workers = first.output.workers;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<(BenchmarkRow, Option<RowOutput>)> = pool.install(|| cfgs.par_iter().map(run_row).collect());

    let dir = &first.output.dir;
    create_dir(dir)?;
    for (_, out) in &results {
        if let Some(out) = out {
            write_row_artifacts(dir, out)?;
        }
    }
    Ok(BenchmarkReport { rows: results.into_iter().map(|r| r.0).collect() })
}

/// Write `report.json`, `report.csv`, `report.txt` and `timings.json`.
pub fn write_report(dir: &Path, report: &BenchmarkReport) -> Result<Vec<PathBuf>> {
    create_dir(dir)?;
    let files = [
        ("report.json", report.to_json()),
        ("report.csv", report.to_csv()),
        ("report.txt", report.render_table(None)),
        ("timings.json", report.timings_json()),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let p = dir.join(name);
        io::write_text(&p, &text)?;
        written.push(p);
    }
    Ok(written)
}

/// Null-hypothesis spread of the AUC for `n1` and `n2` events per class.
pub fn auc_null_sigma(n1: usize, n2: usize) -> f64 {
    let (a, b) = (n1 as f64, n2 as f64);
    ((a + b + 1.0) / (12.0 * a * b)).sqrt()
}

