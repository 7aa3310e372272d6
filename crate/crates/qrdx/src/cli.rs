//! Command-line interface. [`run`] parses arguments and returns the process
//! exit code, so the tool can be driven in-process.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use qrdx_core::dataset::generate_synthetic;
use qrdx_core::metrics::{roc_curve, subset_uncertainty};
use qrdx_core::FeatureMatrix;

use crate::config::{Method, PipelineConfig, QsvmSource};
use crate::error::{exit, Error, Result, StageExt};
use crate::io::{self, FileFormat, SvmModelFile};
use crate::kernel::{kernel_key, KernelEngine};
use crate::pipeline::{self, grid_search};

#[derive(Debug, Parser)]
#[command(name = "qrdx", version, about = "Dimensionality reduction and quantum-kernel SVM benchmarks")]
pub struct Cli {
    /// TOML configuration file; every key has a default.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed, overriding the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic labelled dataset with the 67-feature layout.
    SynthData(SynthArgs),
    /// Fit a reducer on the configured training split and write the rescaled
    /// latent splits plus the fitted model.
    Reduce(ReduceArgs),
    /// Compute a quantum kernel matrix between dataset files.
    Kernel(KernelArgs),
    /// Train the QSVM with the C grid and write the model as JSON.
    TrainSvm(TrainSvmArgs),
    /// Score a trained QSVM on a test file with subset uncertainties.
    Evaluate(EvaluateArgs),
    /// Run the full protocol for every configured method.
    Benchmark(BenchmarkArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 5000)]
    pub samples: usize,
    #[arg(long, default_value_t = 0.5)]
    pub hardness: f64,
    #[arg(long)]
    pub out: PathBuf,
    /// Defaults to the format implied by the file extension.
    #[arg(long, value_enum)]
    pub format: Option<FileFormat>,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    /// Dataset file; overrides `dataset.path`.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Output directory for `reduced_{train,val,test}` and the model blob.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "binary")]
    pub format: FileFormat,
}

#[derive(Debug, Args)]
pub struct KernelArgs {
    /// Rows of the kernel matrix.
    #[arg(long)]
    pub train: PathBuf,
    /// Columns; the Gram matrix of `--train` when absent.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub shots: Option<u64>,
    #[arg(long, value_enum)]
    pub format: Option<FileFormat>,
}

#[derive(Debug, Args)]
pub struct TrainSvmArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub val: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// C values to search; overrides `svm.c_grid`.
    #[arg(long, value_delimiter = ',')]
    pub c: Option<Vec<f64>>,
    #[arg(long)]
    pub shots: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Training file the model was fitted on.
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
    #[arg(long)]
    pub subsets: Option<usize>,
    #[arg(long)]
    pub shots: Option<u64>,
    /// Directory for `evaluation.json` and `roc.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[arg(long, value_enum, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long, value_enum)]
    pub train_source: Option<QsvmSource>,
    /// Read the dataset from this file instead of generating one.
    #[arg(long)]
    pub input: Option<PathBuf>,
}

/// Parse `args` (program name first), execute, and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::CONFIG } else { exit::OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => exit::OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn say(out: &mut dyn Write, text: &str) -> Result<()> {
    writeln!(out, "{text}").map_err(|e| Error::io("<stdout>", e))
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    let mut cfg = load_config(cli)?;
    match &cli.command {
        Command::SynthData(a) => {
            let data = generate_synthetic(a.samples, cfg.seed, a.hardness)?;
            let format = a.format.unwrap_or_else(|| FileFormat::from_path(&a.out));
            io::write_dataset(&a.out, &data, format)?;
            say(out, &format!("wrote {} samples to {}", data.rows(), a.out.display()))
        }
        Command::Reduce(a) => {
            if let Some(p) = &a.input {
                cfg.dataset.path = Some(p.clone());
            }
            if let Some(m) = a.method {
                cfg.reducer.method = m;
            }
            if let Some(e) = a.max_epochs {
                cfg.reducer.autoencoder.max_epochs = Some(e);
            }
            cfg.validate()?;
            reduce_command(&cfg, &a.out, a.format, out)
        }
        Command::Kernel(a) => {
            if let Some(s) = a.shots {
                cfg.circuit.shots = s;
            }
            cfg.validate()?;
            let engine = KernelEngine::new(cfg.circuit.circuit(), None);
            let train = io::read_dataset(&a.train)?;
            let shots = cfg.circuit.shot_config(cfg.seed);
            let k = match &a.test {
                None => engine.gram(train.values(), shots).stage("kernel")?,
                Some(t) => engine.cross(train.values(), io::read_dataset(t)?.values(), shots).stage("kernel")?,
            };
            let format = a.format.unwrap_or_else(|| FileFormat::from_path(&a.out));
            io::write_matrix(&a.out, &k.kernel.values, format)?;
            say(out, &format!("wrote {}x{} kernel ({}) to {}", k.kernel.nrows(), k.kernel.ncols(), k.key, a.out.display()))
        }
        Command::TrainSvm(a) => {
            if let Some(c) = &a.c {
                cfg.svm.c_grid = c.clone();
            }
            if let Some(s) = a.shots {
                cfg.circuit.shots = s;
            }
            cfg.validate()?;
            train_svm_command(&cfg, a, out)
        }
        Command::Evaluate(a) => {
            if let Some(k) = a.subsets {
                cfg.eval.subsets = k;
            }
            if let Some(s) = a.shots {
                cfg.circuit.shots = s;
            }
            cfg.circuit.circuit().validate()?;
            evaluate_command(&cfg, a, out)
        }
        Command::Benchmark(a) => {
            if let Some(m) = &a.methods {
                cfg.benchmark.methods = m.clone();
            }
            if let Some(d) = &a.out {
                cfg.output.dir = d.clone();
            }
            if let Some(e) = a.max_epochs {
                cfg.reducer.autoencoder.max_epochs = Some(e);
            }
            if let Some(w) = a.workers {
                cfg.output.workers = w;
            }
            if let Some(s) = a.train_source {
                cfg.eval.qsvm_train_source = s;
            }
            if let Some(p) = &a.input {
                cfg.dataset.path = Some(p.clone());
            }
            cfg.validate()?;
            let report = pipeline::run_benchmark(&pipeline::expand_methods(&cfg))?;
            pipeline::write_report(&cfg.output.dir, &report)?;
            say(out, &report.render_table(Some(3)))?;
            let failed = report.rows.iter().filter(|r| r.failed()).count();
            say(out, &format!("{} rows, {failed} failed; outputs in {}", report.rows.len(), cfg.output.dir.display()))
        }
    }
}

fn reduce_command(cfg: &PipelineConfig, dir: &Path, format: FileFormat, out: &mut dyn Write) -> Result<()> {
    let data = pipeline::prepare_data(cfg).stage("data")?;
    let plan = cfg.reducer.plan(cfg.reducer.method, cfg.seed);
    let red = pipeline::reduce_splits(&plan, cfg.reducer.d_star, cfg.reducer.fit_samples, &data).stage("reduce")?;
    let latent = qrdx_core::dataset::fit_minmax(red.train.values()).stage("rescale")?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let ext = match format {
        FileFormat::Csv => "csv",
        FileFormat::Binary => "qrdx",
    };
    for (name, m) in [("train", &red.train), ("val", &red.val), ("test", &red.test)] {
        let scaled = FeatureMatrix::unnamed(latent.apply(m.values())?, m.labels().to_vec())?;
        io::write_dataset(&dir.join(format!("reduced_{name}.{ext}")), &scaled, format)?;
    }
    if let Some(trained) = &red.autoencoder {
        io::write_blob(&dir.join("model.qrda"), &trained.model.to_bytes())?;
    }
    if let Some(model) = &red.classical {
        io::write_blob(&dir.join("model.qrdr"), &model.to_bytes())?;
    }
    say(out, &format!("reduced {} to {} dimensions in {}", cfg.reducer.method.id(), cfg.reducer.d_star, dir.display()))
}

fn train_svm_command(cfg: &PipelineConfig, a: &TrainSvmArgs, out: &mut dyn Write) -> Result<()> {
    let train = io::read_dataset(&a.train)?;
    let val = io::read_dataset(&a.val)?;
    let engine = KernelEngine::new(cfg.circuit.circuit(), None);
    let shots = cfg.circuit.shot_config(cfg.seed);
    let gram = engine.gram(train.values(), shots).stage("kernel")?;
    let k_val = engine.cross(val.values(), train.values(), shots).stage("kernel")?;
    let (grid, model) =
        grid_search(&gram.kernel.values, train.labels(), &k_val.kernel.values, val.labels(), &cfg.svm.c_grid, &cfg.svm.smo())
            .stage("svm")?;
    io::write_svm_model(&a.out, &SvmModelFile::new(&model, gram.key))?;
    for g in &grid {
        say(out, &format!("C = {}: validation AUC {:.4}", g.c, g.auc))?;
    }
    say(out, &format!("selected C = {}, {} support vectors, model in {}", model.c, model.support_indices.len(), a.out.display()))
}

fn evaluate_command(cfg: &PipelineConfig, a: &EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let file = io::read_svm_model(&a.model)?;
    let train = io::read_dataset(&a.train)?;
    let test = io::read_dataset(&a.test)?;
    let circuit = cfg.circuit.circuit();
    let shots = cfg.circuit.shot_config(cfg.seed);
    if kernel_key(&circuit, shots, train.values(), None) != file.gram_hash {
        return Err(Error::format(&a.train, "training data or circuit settings differ from those the model was fitted with"));
    }
    let model = file.into_model();
    let engine = KernelEngine::new(circuit, None);
    let k = engine.cross(test.values(), train.values(), shots).stage("kernel")?;
    let scores = model.decision_values(&k.kernel.values).stage("evaluate")?;
    let auc = subset_uncertainty(&scores, test.labels(), cfg.eval.subsets).stage("evaluate")?;
    say(out, &format!("QSVM AUC {:.4} ± {:.4} over {} subsets", auc.mean, auc.std, cfg.eval.subsets))?;
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let roc = roc_curve(&scores, test.labels()).stage("evaluate")?;
        let mut csv = String::from("threshold,tpr,fpr\n");
        for p in roc {
            csv.push_str(&format!("{},{},{}\n", p.threshold, p.tpr, p.fpr));
        }
        io::write_text(&dir.join("roc.csv"), &csv)?;
        let json = serde_json::to_string_pretty(&auc).expect("serialises");
        io::write_text(&dir.join("evaluation.json"), &(json + "\n"))?;
    }
    Ok(())
}
