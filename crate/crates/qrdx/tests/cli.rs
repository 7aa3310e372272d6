use std::path::Path;

use qrdx::cli::run;
use qrdx::error::exit;

struct Outcome {
    code: i32,
    stdout: String,
    stderr: String,
}

fn qrdx(args: &[&str]) -> Outcome {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let argv = std::iter::once("qrdx").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    Outcome { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_bad_arguments() {
    let help = qrdx(&["--help"]);
    assert_eq!(help.code, exit::OK);
    assert!(help.stdout.contains("benchmark"));
    assert_eq!(qrdx(&[]).code, exit::CONFIG);
    assert_eq!(qrdx(&["frobnicate"]).code, exit::CONFIG);
    assert_eq!(qrdx(&["benchmark", "--methods", "tsne"]).code, exit::CONFIG);
    assert_eq!(qrdx(&["synth-data", "--samples", "ten", "--out", "x"]).code, exit::CONFIG);
}

#[test]
fn invalid_config_file_is_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[eval]\nqsvm_test = 3601\n").unwrap();
    let r = qrdx(&["--config", s(&cfg), "benchmark", "--out", s(&dir.path().join("o"))]);
    assert_eq!(r.code, exit::CONFIG);
    assert!(r.stderr.contains("3601"), "{}", r.stderr);
    let missing = qrdx(&["--config", s(&dir.path().join("none.toml")), "benchmark"]);
    assert_eq!(missing.code, exit::CONFIG);
}

#[test]
fn missing_data_file_is_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let r = qrdx(&["reduce", "--input", "/nonexistent/qrdx.csv", "--out", s(dir.path())]);
    assert_eq!(r.code, exit::DATA, "{}", r.stderr);
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "a,label\n1,7\n").unwrap();
    let r = qrdx(&["kernel", "--train", s(&bad), "--out", s(&dir.path().join("k.csv"))]);
    assert_eq!(r.code, exit::DATA, "{}", r.stderr);
}

#[test]
fn synth_reduce_train_evaluate_flow() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data.csv");
    let r = qrdx(&["--seed", "5", "synth-data", "--samples", "600", "--hardness", "0", "--out", s(&data)]);
    assert_eq!(r.code, exit::OK, "{}", r.stderr);

    let red = d.join("reduced");
    let r = qrdx(&["--seed", "5", "reduce", "--input", s(&data), "--method", "pca", "--out", s(&red), "--format", "csv"]);
    assert_eq!(r.code, exit::OK, "{}", r.stderr);
    assert!(red.join("model.qrdr").exists());
    let (train, val, test) = (red.join("reduced_train.csv"), red.join("reduced_val.csv"), red.join("reduced_test.csv"));
    let reduced = qrdx::io::read_dataset(&train).unwrap();
    assert_eq!(reduced.cols(), 16);
    assert!(reduced.values().iter().all(|v| (0.0..=1.0).contains(v)));

    let k = d.join("k.qrdm");
    let r = qrdx(&["kernel", "--train", s(&val), "--out", s(&k)]);
    assert_eq!(r.code, exit::OK, "{}", r.stderr);
    let km = qrdx::io::read_matrix(&k).unwrap();
    assert_eq!(km.shape(), (60, 60));
    assert!(km.diagonal().iter().all(|v| (v - 1.0).abs() < 1e-10));

    let model = d.join("model.json");
    let r = qrdx(&["train-svm", "--train", s(&val), "--val", s(&test), "--out", s(&model), "--c", "0.1,1,10"]);
    assert_eq!(r.code, exit::OK, "{}", r.stderr);
    assert!(r.stdout.contains("selected C"));

    let eval_dir = d.join("eval");
    let r = qrdx(&["evaluate", "--model", s(&model), "--train", s(&val), "--test", s(&train), "--out", s(&eval_dir)]);
    assert_eq!(r.code, exit::OK, "{}", r.stderr);
    let auc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(eval_dir.join("evaluation.json")).unwrap()).unwrap();
    assert!(auc["mean"].as_f64().unwrap() > 0.7, "{auc}");
    assert_eq!(auc["per_subset"].as_array().unwrap().len(), 5);
    assert!(eval_dir.join("roc.csv").exists());

    let r = qrdx(&["evaluate", "--model", s(&model), "--train", s(&test), "--test", s(&train)]);
    assert_eq!(r.code, exit::DATA, "mismatched training file must be rejected");
    let r = qrdx(&["evaluate", "--model", s(&model), "--train", s(&val), "--test", s(&train), "--shots", "100"]);
    assert_eq!(r.code, exit::DATA, "changed shot settings must be rejected");
}

#[test]
fn solver_stall_is_exit_four() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = d.join("data.qrdx");
    assert_eq!(qrdx(&["synth-data", "--samples", "300", "--hardness", "0.8", "--out", s(&data)]).code, exit::OK);
    let red = d.join("reduced");
    assert_eq!(qrdx(&["reduce", "--input", s(&data), "--method", "pca", "--out", s(&red)]).code, exit::OK);
    let cfg = d.join("stall.toml");
    std::fs::write(&cfg, "[svm]\ntolerance = 1e-12\nmax_iterations_per_sample = 1\n").unwrap();
    let r = qrdx(&[
        "--config",
        s(&cfg),
        "train-svm",
        "--train",
        s(&red.join("reduced_train.qrdx")),
        "--val",
        s(&red.join("reduced_val.qrdx")),
        "--out",
        s(&d.join("m.json")),
    ]);
    assert_eq!(r.code, exit::STAGE, "{}", r.stderr);
    assert!(r.stderr.contains("svm"), "{}", r.stderr);
}

#[test]
fn benchmark_prints_table_and_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.toml");
    std::fs::write(
        &cfg,
        "seed = 2\n\
         [dataset.synthetic]\nsamples = 500\nhardness = 0.0\n\
         [dataset.split.counts]\ntrain = 300\nval = 100\ntest = 100\n\
         [eval]\nqsvm_train = 40\nqsvm_val = 40\nqsvm_test = 50\nqsvm_train_source = \"train\"\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let r = qrdx(&["--config", s(&cfg), "benchmark", "--methods", "pca,vanilla", "--max-epochs", "2", "--out", s(&out)]);
    assert_eq!(r.code, exit::OK, "{}", r.stderr);
    assert!(r.stdout.contains("| PCA |"), "{}", r.stdout);
    assert!(r.stdout.contains("Autoencoder feature extraction"), "{}", r.stdout);
    for f in ["report.json", "report.csv", "report.txt", "timings.json", "roc_pca.csv", "roc_vanilla.csv", "curves_vanilla.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report = qrdx::BenchmarkReport::from_json(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    let vanilla = &report.rows[1];
    assert_eq!(vanilla.reducer.as_ref().unwrap().epochs_run, 2);
    assert!(out.join("kernel_cache").read_dir().unwrap().count() > 0);
}
