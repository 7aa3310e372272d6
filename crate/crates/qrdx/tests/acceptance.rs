//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Criterion 9 needs the full public dataset as a flattened `.qrdx` or
//! `.csv` file in the directory named by `QRDX_ZENODO_DIR`; it is skipped
//! when the variable is unset.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::{Duration, Instant};

use common::{brute_force, finite_difference, jacobi_eigen, pairwise_auc, pearson, reference_bias, relative_error, spearman, Lcg};
use nalgebra::DMatrix;
use qrdx::config::{Method, PipelineConfig};
use qrdx::pipeline::{auc_null_sigma, expand_methods, run_benchmark, run_pipeline};
use qrdx::report::BenchmarkReport;
use qrdx_core::dataset::SplitSizes;
use qrdx_core::nn::{bce_loss, kl_logvar, mse_loss, sinkhorn_divergence, Activation, DenseNetwork, SinkhornConfig};
use qrdx_core::quantum::{gram_matrix, EncodingCircuit, StateVector};
use qrdx_core::reduce::*;
use qrdx_core::svm::{solve_dual, SmoConfig};

enum Verdict {
    Pass(String),
    Fail(String),
    /// Below target but inside the tolerated band.
    SoftFail(String),
    Skip(String),
}

type Check = fn() -> Verdict;

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn out_dir(tag: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("qrdx-acceptance-{}-{tag}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn c1_kernel_validity() -> Verdict {
    let mut g = Lcg(2024);
    let x = g.matrix(200, 16, |g| g.uniform());
    let k = gram_matrix(&EncodingCircuit::default(), &x, None).unwrap().values;
    let par = qrdx::kernel::par_gram(&EncodingCircuit::default(), &x, None).unwrap().values;
    let asym = (&k - k.transpose()).abs().max();
    let diag = (0..200).map(|i| (k[(i, i)] - 1.0).abs()).fold(0.0, f64::max);
    let (vals, _) = jacobi_eigen(&k);
    let min_eig = vals[0];
    let ok = asym < 1e-12 && diag < 1e-10 && min_eig >= -1e-8 && par == k;
    verdict(ok, format!("asymmetry {asym:.1e}, diagonal error {diag:.1e}, min eigenvalue {min_eig:.2e}, parallel == sequential: {}", par == k))
}

fn c2_circuit() -> Verdict {
    let mut g = Lcg(7);
    let mut detail = Vec::new();
    let mut ok = true;

    let mut s = StateVector::zero(3);
    for q in 0..3 {
        s.apply_g(q, 1.0 + q as f64, 0.4, 2.0).unwrap();
    }
    s.apply_cnot(0, 2).unwrap();
    let before = s.clone();
    for q in 0..3 {
        s.apply_g(q, 0.0, 0.0, 0.0).unwrap();
    }
    let id_err = s.amplitudes().iter().zip(before.amplitudes()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    ok &= id_err == 0.0;
    detail.push(format!("G(0,0,0) change {id_err:.1e}"));

    let mut x = StateVector::zero(1);
    x.apply_g(0, PI, 0.0, PI).unwrap();
    ok &= (x.probability(1) - 1.0).abs() < 1e-12;
    detail.push(format!("Pauli-X P(1) = {:.12}", x.probability(1)));

    let mut bell = StateVector::zero(2);
    bell.apply_g(0, PI / 2.0, 0.0, PI).unwrap();
    bell.apply_cnot(0, 1).unwrap();
    let bell_ok = (bell.probability(0) - 0.5).abs() < 1e-12
        && (bell.probability(3) - 0.5).abs() < 1e-12
        && bell.probability(1) < 1e-24
        && bell.probability(2) < 1e-24;
    ok &= bell_ok;
    detail.push(format!("Bell state {}", if bell_ok { "ok" } else { "wrong" }));

    let circuit = EncodingCircuit::default();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a: Vec<f64> = (0..16).map(|_| g.uniform()).collect();
        let b: Vec<f64> = (0..16).map(|_| g.uniform()).collect();
        let d = circuit.kernel_value(&a, &b).unwrap() - circuit.compound_probability(&a, &b).unwrap();
        worst = worst.max(d.abs());
    }
    ok &= worst < 1e-10;
    detail.push(format!("compound vs inner product max difference {worst:.1e}"));
    verdict(ok, detail.join(", "))
}

fn c3_svm_oracle() -> Verdict {
    let mut g = Lcg(99);
    let (mut worst_obj, mut worst_dec): (f64, f64) = (0.0, 0.0);
    for case in 0..50 {
        let n = 2 + case % 7;
        let c = [0.1, 1.0, 10.0][case % 3];
        let x: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| 2.0 * g.uniform() - 1.0).collect()).collect();
        let labels: Vec<u8> = loop {
            let l: Vec<u8> = (0..n).map(|_| (g.next_u64() % 2) as u8).collect();
            if l.contains(&0) && l.contains(&1) {
                break l;
            }
        };
        let k = DMatrix::from_fn(n, n, |i, j| {
            let d: f64 = x[i].iter().zip(&x[j]).map(|(p, q)| (p - q) * (p - q)).sum();
            (-1.5 * d).exp()
        });
        let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        let model = solve_dual(&k, &labels, c, &SmoConfig::default()).unwrap();
        let oracle = brute_force(&k, &y, c);
        let alpha = &oracle.alpha;
        worst_obj = worst_obj.max((model.dual_objective(&k) - oracle.objective).abs());
        let b = reference_bias(&k, &y, alpha, c, oracle.bias, model.bias);
        let got = model.decision_values(&k).unwrap();
        for i in 0..n {
            let want: f64 = (0..n).map(|j| alpha[j] * y[j] * k[(i, j)]).sum::<f64>() + b;
            let d = (got[i] - want).abs();
            worst_dec = if d.is_nan() { f64::INFINITY } else { worst_dec.max(d) };
        }
    }
    verdict(
        worst_obj < 1e-6 && worst_dec < 1e-4,
        format!("50 datasets, max objective gap {worst_obj:.1e}, max decision gap {worst_dec:.1e}"),
    )
}

fn random_net(widths: &[usize], seed: u64, output: Activation) -> DenseNetwork {
    let mut net = DenseNetwork::new(widths, Activation::Elu, output, seed);
    let mut g = Lcg(seed + 1);
    for l in net.layers.iter_mut() {
        l.bias.iter_mut().for_each(|b| *b = 0.3 * g.normal());
    }
    net
}

fn net_gradient_error(net: &DenseNetwork, x: &DMatrix<f64>, loss: impl Fn(&DMatrix<f64>) -> (f64, DMatrix<f64>)) -> f64 {
    let acts = net.forward(x).unwrap();
    let (_, g_out) = loss(acts.output());
    let grads = net.backward(&acts, &g_out).unwrap();
    let mut probe = net.clone();
    let fd = finite_difference(&net.parameters(), 1e-5, |p| {
        probe.set_parameters(p).unwrap();
        loss(&probe.predict(x).unwrap()).0
    });
    relative_error(&grads.flatten(), &fd)
}

fn tight_sinkhorn() -> SinkhornConfig {
    SinkhornConfig { epsilon: 0.05, max_iterations: 100_000, tolerance: 1e-12, ..Default::default() }
}

fn c4_gradients() -> Verdict {
    let mut worst = [0.0f64; 4];
    for seed in 0..20u64 {
        let mut g = Lcg(500 + seed);
        let depth = 1 + (seed % 3) as usize;
        let mut widths = vec![3 + (g.next_u64() % 4) as usize];
        for _ in 0..depth {
            widths.push(2 + (g.next_u64() % 5) as usize);
        }
        let x = g.matrix(4, widths[0], |g| g.uniform());
        let with_out = |w: usize| {
            let mut v = widths.clone();
            *v.last_mut().unwrap() = w;
            v
        };

        let target = g.matrix(4, *widths.last().unwrap(), |g| g.uniform());
        let net = random_net(&widths, seed, Activation::Sigmoid);
        worst[0] = worst[0].max(net_gradient_error(&net, &x, |o| mse_loss(&target, o).unwrap()));

        let y = DMatrix::from_fn(4, 1, |i, _| (i % 2) as f64);
        let net = random_net(&with_out(1), seed, Activation::Sigmoid);
        worst[1] = worst[1].max(net_gradient_error(&net, &x, |o| bce_loss(&y, o).unwrap()));

        let net = random_net(&with_out(4), seed, Activation::Linear);
        worst[2] = worst[2].max(net_gradient_error(&net, &x, |o| {
            let (v, gm, gl) = kl_logvar(&o.columns(0, 2).into_owned(), &o.columns(2, 2).into_owned()).unwrap();
            let mut go = DMatrix::zeros(o.nrows(), 4);
            go.columns_mut(0, 2).copy_from(&gm);
            go.columns_mut(2, 2).copy_from(&gl);
            (v, go)
        }));

        let cloud = g.matrix(5, 2, |g| g.uniform());
        let net = random_net(&with_out(2), seed, Activation::Sigmoid);
        let cfg = tight_sinkhorn();
        worst[3] = worst[3].max(net_gradient_error(&net, &x, |o| {
            let s = sinkhorn_divergence(o, &cloud, &cfg).unwrap();
            (s.value, s.grad_a)
        }));
    }
    verdict(
        worst[0] < 1e-4 && worst[1] < 1e-4 && worst[2] < 1e-4 && worst[3] < 1e-3,
        format!(
            "20 networks, max relative error MSE {:.1e}, BCE {:.1e}, KL {:.1e}, Sinkhorn {:.1e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn c5_sinkhorn() -> Verdict {
    let mut g = Lcg(61);
    let cfg = SinkhornConfig { max_iterations: 20_000, ..Default::default() };
    let a = g.matrix(30, 4, |g| g.uniform());
    let self_div = sinkhorn_divergence(&a, &a, &cfg).unwrap().value;

    let p = DMatrix::from_row_slice(1, 2, &[0.0, 0.0]);
    let q = DMatrix::from_row_slice(1, 2, &[0.6, 0.8]);
    let dirac = sinkhorn_divergence(&p, &q, &SinkhornConfig::default()).unwrap().value;

    let base = g.matrix(40, 3, |g| g.uniform() * 0.5);
    let series: Vec<f64> =
        [0.0, 0.1, 0.2, 0.4].iter().map(|&t| sinkhorn_divergence(&base, &base.add_scalar(t), &cfg).unwrap().value).collect();
    let monotone = series.windows(2).all(|w| w[1] > w[0]);
    verdict(
        self_div.abs() < 1e-6 && (dirac - 1.0).abs() < 0.05 && monotone,
        format!("S(A,A) = {self_div:.1e}, two Diracs {dirac:.4} vs 1, translation series {series:.4?}"),
    )
}

fn covariance(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mean = x.row_mean();
    let mut xc = x.clone();
    for mut r in xc.row_iter_mut() {
        r -= &mean;
    }
    xc.transpose() * xc / (x.nrows() as f64 - 1.0)
}

fn c6_reducers() -> Verdict {
    let mut g = Lcg(71);
    let mut detail = Vec::new();
    let mut ok = true;

    let mix = g.matrix(5, 5, |g| g.normal());
    let x = g.matrix(300, 5, |g| g.normal()) * mix;
    let model = pca_fit(&x, 5).unwrap();
    let (vals, vecs) = jacobi_eigen(&covariance(&x));
    let mut pca_err: f64 = 0.0;
    for k in 0..5 {
        let oracle = vecs.column(4 - k);
        let got = model.components.row(k).transpose();
        pca_err = pca_err.max((&got - &oracle).norm().min((&got + &oracle).norm()));
        pca_err = pca_err.max((model.explained_variance[k] - vals[4 - k]).abs());
    }
    ok &= pca_err < 1e-8;
    detail.push(format!("PCA {pca_err:.1e}"));

    let s = g.matrix(2000, 2, |g| g.uniform() * 2.0 - 1.0);
    let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.4, 1.0]);
    let est = ica_fit(&(&s * a.transpose()), 2, &IcaConfig::default()).unwrap().transform(&(&s * a.transpose())).unwrap();
    let ica = (0..2)
        .map(|c| (0..2).map(|k| pearson(est.column(c).as_slice(), s.column(k).as_slice()).abs()).fold(0.0, f64::max))
        .fold(1.0, f64::min);
    ok &= ica >= 0.99;
    detail.push(format!("ICA correlation {ica:.4}"));

    let w0 = g.matrix(10, 3, |g| g.uniform() + 0.1);
    let h0 = g.matrix(3, 40, |g| g.uniform() + 0.1);
    let nmf = nmf_fit(&(w0 * h0).transpose(), 3, &NmfConfig { l1: 0.0, max_iter: 20_000, tol: 0.0 }).unwrap().final_objective();
    ok &= nmf < 1e-6;
    detail.push(format!("NMF objective {nmf:.1e}"));

    let m = 400;
    let (t0, t1) = (1.5 * PI, 4.5 * PI);
    let ts: Vec<f64> = (0..m).map(|i| t0 + (t1 - t0) * i as f64 / (m - 1) as f64).collect();
    let curve = DMatrix::from_fn(m, 3, |i, c| {
        let t = ts[i];
        [t * t.cos(), t * t.sin(), 0.3 * t][c]
    });
    let arc: Vec<f64> = ts.iter().map(|t| 0.5 * (t * (1.0 + t * t).sqrt() + t.asinh())).collect();
    let lle = lle_fit(&curve, 1, &LleConfig::default()).unwrap();
    let rho = spearman(lle.embedding.column(0).as_slice(), &arc).abs();
    ok &= rho >= 0.95;
    detail.push(format!("LLE Spearman {rho:.4}"));

    let labels: Vec<u8> = (0..80).map(|i| (i % 2) as u8).collect();
    let blobs = DMatrix::from_fn(80, 3, |i, _| if labels[i] == 1 { 10.0 } else { 0.0 }) + g.matrix(80, 3, |g| g.normal() * 0.5);
    let se = se_fit(&blobs, 1, &SeConfig::default()).unwrap();
    let auc = pairwise_auc(&labels, se.embedding.column(0).as_slice());
    let se_auc = auc.max(1.0 - auc);
    ok &= se_auc == 1.0;
    detail.push(format!("SE bipartition AUC {se_auc}"));

    let patterns = DMatrix::from_fn(1000, 3, |i, _| (i % 2) as f64);
    let rbm = rbm_fit(&patterns, 2, &RbmConfig { seed: 1, ..Default::default() }).unwrap();
    let errs = &rbm.reconstruction_errors;
    let decreasing = errs.len() == 11 && errs.windows(2).all(|w| w[1] < w[0]);
    ok &= decreasing;
    detail.push(format!("RBM errors strictly decreasing over 10 epochs: {decreasing}"));
    verdict(ok, detail.join(", "))
}

/// Desk-scale configuration: 2000 train / 500 validation / 500 test events.
fn desk_config(seed: u64, hardness: f64, tag: &str) -> PipelineConfig {
    let mut cfg = PipelineConfig { seed, ..Default::default() };
    cfg.dataset.synthetic.samples = 3000;
    cfg.dataset.synthetic.hardness = hardness;
    cfg.dataset.split = SplitSizes::Counts { train: 2000, val: 500, test: 500 };
    cfg.reducer.autoencoder.max_epochs = Some(20);
    cfg.output.dir = out_dir(tag);
    cfg
}

fn row_auc(report: &BenchmarkReport, m: Method) -> Option<(f64, f64, usize)> {
    let r = report.rows.iter().find(|r| r.method == m)?;
    let a = r.qsvm_auc.as_ref()?;
    Some((a.mean, a.std, r.protocol.as_ref()?.qsvm_test_used))
}

fn c7_end_to_end() -> Verdict {
    let cfg = desk_config(3, 0.0, "c7");
    let start = Instant::now();
    let report = match run_benchmark(&expand_methods(&cfg)) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(format!("benchmark failed: {e}")),
    };
    let elapsed = start.elapsed();
    let failed: Vec<&str> = report.rows.iter().filter(|r| r.failed()).map(|r| r.method.id()).collect();
    let Some((sink, _, _)) = row_auc(&report, Method::SinkclassBce) else {
        return Verdict::Fail("no Sinkclass-BCE result".into());
    };
    let Some((pca, _, n_eval)) = row_auc(&report, Method::Pca) else {
        return Verdict::Fail("no PCA result".into());
    };
    let bound = 0.5 + 3.0 * auc_null_sigma(n_eval / 2, n_eval / 2);
    let ok = failed.is_empty() && sink >= 0.90 && pca >= bound && elapsed < Duration::from_secs(30 * 60) && report.rows.len() == 13;
    verdict(
        ok,
        format!(
            "Sinkclass-BCE AUC {sink:.3} (>= 0.90), PCA AUC {pca:.3} (>= {bound:.3}), {} rows for 11 methods in {:.0} s, failed rows {failed:?}",
            report.rows.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn c8_ordering() -> Verdict {
    let (mut sink, mut vanilla) = (Vec::new(), Vec::new());
    for seed in [1u64, 2, 3] {
        let mut cfg = desk_config(seed, 0.5, &format!("c8-{seed}"));
        cfg.benchmark.methods = vec![Method::Vanilla, Method::SinkclassBce];
        let report = match run_benchmark(&expand_methods(&cfg)) {
            Ok(r) => r,
            Err(e) => return Verdict::Fail(format!("seed {seed}: {e}")),
        };
        match (row_auc(&report, Method::SinkclassBce), row_auc(&report, Method::Vanilla)) {
            (Some(s), Some(v)) => {
                sink.push(s.0);
                vanilla.push(v.0);
            }
            _ => return Verdict::Fail(format!("seed {seed}: a row failed")),
        }
    }
    let (ms, mv) = (sink.iter().sum::<f64>() / 3.0, vanilla.iter().sum::<f64>() / 3.0);
    let gap = ms - mv;
    let detail = format!(
        "mean QSVM AUC Sinkclass-BCE {ms:.3} vs vanilla {mv:.3} (gap {gap:+.3}; per seed {sink:.3?} vs {vanilla:.3?}); three seeds cannot resolve gaps below the subset spread"
    );
    if gap >= 0.0 {
        Verdict::Pass(detail)
    } else if gap >= -0.05 {
        Verdict::SoftFail(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn c9_full_data() -> Verdict {
    let Some(dir) = std::env::var_os("QRDX_ZENODO_DIR").map(PathBuf::from) else {
        return Verdict::Skip("QRDX_ZENODO_DIR not set".into());
    };
    let mut files: Vec<PathBuf> = match std::fs::read_dir(&dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("qrdx" | "csv")))
            .collect(),
        Err(e) => return Verdict::Fail(format!("{}: {e}", dir.display())),
    };
    files.sort();
    let Some(path) = files.into_iter().next() else {
        return Verdict::Fail(format!("no .qrdx or .csv dataset in {}", dir.display()));
    };
    let mut cfg = PipelineConfig::default();
    cfg.dataset.path = Some(path.clone());
    cfg.output.dir = out_dir("c9");
    cfg.benchmark.methods = vec![Method::Rbm, Method::SinkclassBce];
    let report = match run_benchmark(&expand_methods(&cfg)) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(format!("{e}")),
    };
    let rbm = row_auc(&report, Method::Rbm).map(|r| r.0);
    let sink = report.rows.iter().find(|r| r.method == Method::SinkclassBce);
    let sink_q = sink.and_then(|r| r.qsvm_auc.as_ref()).map(|a| a.mean);
    let sink_c = sink.and_then(|r| r.reducer.as_ref()).and_then(|m| m.classifier_auc.as_ref()).map(|a| a.mean);
    let near = |v: Option<f64>, target: f64| v.is_some_and(|v| (v - target).abs() <= 0.05);
    verdict(
        near(rbm, 0.651) && near(sink_q, 0.74) && near(sink_c, 0.734),
        format!(
            "{}: RBM QSVM AUC {rbm:.3?} (0.651), Sinkclass-BCE QSVM AUC {sink_q:.3?} (0.74), classifier AUC {sink_c:.3?} (0.734)",
            path.display()
        ),
    )
}

fn c10_protocol() -> Verdict {
    let d = PipelineConfig::default();
    let mut issues = Vec::new();
    if d.svm.c_grid != [1e-3, 1e-2, 1e-1, 1.0, 10.0] {
        issues.push(format!("C grid {:?}", d.svm.c_grid));
    }
    if (d.eval.qsvm_train, d.eval.qsvm_test, d.eval.subsets, d.reducer.d_star) != (600, 3600, 5, 16) {
        issues.push("budget defaults".to_string());
    }
    // Large enough that no budget is capped: the test split holds 4200 events.
    let mut cfg = d.clone();
    cfg.dataset.synthetic.samples = 42_000;
    cfg.output.dir = out_dir("c10");
    let row = match run_pipeline(&cfg) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(format!("default-protocol run failed: {e}")),
    };
    let p = row.protocol.clone().expect("protocol echo");
    let auc = row.qsvm_auc.clone().expect("AUC");
    let grid_cs: Vec<f64> = row.grid.iter().map(|g| g.c).collect();
    let mean_gap = (auc.mean - auc.per_subset.iter().sum::<f64>() / auc.per_subset.len() as f64).abs();
    if p.c_grid != d.svm.c_grid || grid_cs != d.svm.c_grid {
        issues.push(format!("grid used {grid_cs:?}"));
    }
    if (p.qsvm_train_used, p.qsvm_test_used, p.subsets, p.subset_size, p.d_star) != (600, 3600, 5, 720, 16) {
        issues.push(format!("used train {} test {} subsets {}x{} d* {}", p.qsvm_train_used, p.qsvm_test_used, p.subsets, p.subset_size, p.d_star));
    }
    if !p.train_eval_disjoint || auc.per_subset.len() != 5 || mean_gap > 1e-12 {
        issues.push("subset evaluation".to_string());
    }
    verdict(
        issues.is_empty(),
        if issues.is_empty() {
            format!("C grid {grid_cs:?}, 600 training events, 3600 evaluation events in 5 disjoint subsets of 720, D* = 16")
        } else {
            issues.join("; ")
        },
    )
}

fn main() {
    let criteria: [(u8, &str, Check, Option<u64>); 10] = [
        (1, "kernel validity", c1_kernel_validity, Some(30)),
        (2, "circuit correctness", c2_circuit, Some(10)),
        (3, "SVM oracle equivalence", c3_svm_oracle, Some(60)),
        (4, "gradient suite", c4_gradients, Some(120)),
        (5, "Sinkhorn sanity", c5_sinkhorn, Some(30)),
        (6, "classical-reducer oracles", c6_reducers, Some(300)),
        (7, "end-to-end smoke", c7_end_to_end, None),
        (8, "ordering property (soft)", c8_ordering, None),
        (9, "full-data track (optional)", c9_full_data, None),
        (10, "protocol fidelity", c10_protocol, None),
    ];
    let mut blocking = 0;
    for (n, name, check, limit) in criteria {
        let start = Instant::now();
        let v = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Verdict::Fail(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        let v = match (v, limit) {
            (Verdict::Pass(d), Some(l)) if secs > l as f64 => Verdict::Fail(format!("{d}; exceeded the {l} s limit")),
            (v, _) => v,
        };
        let (tag, detail) = match &v {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => ("FAIL", d),
            Verdict::SoftFail(d) => ("SOFT-FAIL (non-blocking)", d),
            Verdict::Skip(d) => ("SKIP", d),
        };
        if matches!(v, Verdict::Fail(_)) {
            blocking += 1;
        }
        println!("criterion {n} [{name}]: {tag} ({secs:.1} s) {detail}");
    }
    if blocking > 0 {
        println!("{blocking} blocking criteria failed");
        std::process::exit(1);
    }
}
