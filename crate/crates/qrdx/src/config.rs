//! Pipeline configuration, read from TOML.
//!
//! Sections: `dataset`, `reducer`, `circuit`, `svm`, `eval`, `output`,
//! `benchmark`, plus the top-level master `seed`. Every key has a default,
//! so an empty file is a valid configuration.

use std::path::{Path, PathBuf};

use qrdx_core::autoencoder::AeConfig;
use qrdx_core::dataset::{SplitSizes, SplitSpec};
use qrdx_core::nn::SinkhornConfig;
use qrdx_core::quantum::{EncodingCircuit, ShotConfig, DEFAULT_QUBITS};
use qrdx_core::reduce::{ClassicalReducer, IcaConfig, LleConfig, NmfConfig, RbmConfig, SeConfig};
use qrdx_core::svm::{SmoConfig, DEFAULT_C_GRID};
use qrdx_core::REDUCED_FEATURES;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// QSVM training events.
pub const QSVM_TRAIN: usize = 600;
/// QSVM evaluation events.
pub const QSVM_TEST: usize = 3600;
pub const SUBSETS: usize = 5;

/// The thirteen reducer configurations of the benchmark tables: six
/// classical methods and five autoencoders, two of them in two
/// hyperparameter optimisations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum Method {
    Ica,
    Nmf,
    Pca,
    Lle,
    Spectral,
    Rbm,
    Vanilla,
    Variational,
    ClassifierMse,
    ClassifierBce,
    Sinkhorn,
    SinkclassMse,
    SinkclassBce,
}

impl Method {
    pub const ALL: [Method; 13] = [
        Method::Ica,
        Method::Nmf,
        Method::Pca,
        Method::Lle,
        Method::Spectral,
        Method::Rbm,
        Method::Vanilla,
        Method::Variational,
        Method::ClassifierMse,
        Method::ClassifierBce,
        Method::Sinkhorn,
        Method::SinkclassMse,
        Method::SinkclassBce,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Ica => "ica",
            Method::Nmf => "nmf",
            Method::Pca => "pca",
            Method::Lle => "lle",
            Method::Spectral => "spectral",
            Method::Rbm => "rbm",
            Method::Vanilla => "vanilla",
            Method::Variational => "variational",
            Method::ClassifierMse => "classifier_mse",
            Method::ClassifierBce => "classifier_bce",
            Method::Sinkhorn => "sinkhorn",
            Method::SinkclassMse => "sinkclass_mse",
            Method::SinkclassBce => "sinkclass_bce",
        }
    }

    pub fn from_id(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.id() == s)
    }

    /// Row label in the rendered tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Ica => "ICA",
            Method::Nmf => "NMF",
            Method::Pca => "PCA",
            Method::Lle => "LLE",
            Method::Spectral => "SE",
            Method::Rbm => "RBM",
            Method::Vanilla => "Vanilla",
            Method::Variational => "Variational",
            Method::ClassifierMse | Method::ClassifierBce => "Classifier",
            Method::Sinkhorn => "Sinkhorn",
            Method::SinkclassMse | Method::SinkclassBce => "Sinkclass",
        }
    }

    pub fn is_autoencoder(self) -> bool {
        !matches!(self, Method::Ica | Method::Nmf | Method::Pca | Method::Lle | Method::Spectral | Method::Rbm)
    }

    pub fn extraction_type(self) -> &'static str {
        match self {
            Method::Ica | Method::Nmf | Method::Pca => "Linear",
            Method::Lle | Method::Spectral => "Non-linear: Manifold Learning",
            _ => "Non-linear: Neural Network",
        }
    }

    /// Validation objective the autoencoder hyperparameters were tuned for.
    pub fn optimisation(self) -> &'static str {
        match self {
            Method::Variational | Method::ClassifierMse | Method::Sinkhorn | Method::SinkclassMse => "MSE",
            Method::ClassifierBce | Method::SinkclassBce => "BCE",
            _ => "-",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Master seed for splits, reducers, networks and shot sampling.
    pub seed: u64,
    pub dataset: DatasetConfig,
    pub reducer: ReducerConfig,
    pub circuit: CircuitConfig,
    pub svm: SvmConfig,
    pub eval: EvalConfig,
    pub output: OutputConfig,
    pub benchmark: BenchmarkConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dataset: DatasetConfig::default(),
            reducer: ReducerConfig::default(),
            circuit: CircuitConfig::default(),
            svm: SvmConfig::default(),
            eval: EvalConfig::default(),
            output: OutputConfig::default(),
            benchmark: BenchmarkConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    /// Dataset file (CSV or binary). When absent, synthetic data is generated.
    pub path: Option<PathBuf>,
    pub synthetic: SyntheticSpec,
    pub split: SplitSizes,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self { path: None, synthetic: SyntheticSpec::default(), split: SplitSizes::Fractions { train: 0.8, val: 0.1, test: 0.1 } }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub samples: usize,
    /// 0 gives well separated classes, 1 indistinguishable ones.
    pub hardness: f64,
    /// Generator seed; the master seed when absent.
    pub seed: Option<u64>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self { samples: 5000, hardness: 0.5, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeOverrides {
    pub max_epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub early_stop_patience: Option<usize>,
    pub sinkhorn: Option<SinkhornConfig>,
}

impl Default for AeOverrides {
    fn default() -> Self {
        Self { max_epochs: None, batch_size: None, learning_rate: None, alpha: None, beta: None, early_stop_patience: None, sinkhorn: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReducerConfig {
    pub method: Method,
    pub d_star: usize,
    /// Cap on the training rows used to fit a classical reducer.
    pub fit_samples: Option<usize>,
    pub ica: IcaConfig,
    pub lle: LleConfig,
    pub spectral: SeConfig,
    pub nmf: NmfConfig,
    pub rbm: RbmConfig,
    pub autoencoder: AeOverrides,
}

impl Default for ReducerConfig {
    fn default() -> Self {
        Self {
            method: Method::Pca,
            d_star: REDUCED_FEATURES,
            fit_samples: None,
            ica: IcaConfig::default(),
            lle: LleConfig::default(),
            spectral: SeConfig::default(),
            nmf: NmfConfig::default(),
            rbm: RbmConfig::default(),
            autoencoder: AeOverrides::default(),
        }
    }
}

/// How a method is instantiated.
#[derive(Debug, Clone, PartialEq)]
pub enum ReducerPlan {
    Classical(ClassicalReducer),
    Autoencoder(AeConfig),
}

impl ReducerConfig {
    /// Reducer for `method` with this section's hyperparameters and `seed`.
    pub fn plan(&self, method: Method, seed: u64) -> ReducerPlan {
        let classical = |r| ReducerPlan::Classical(r);
        match method {
            Method::Pca => classical(ClassicalReducer::Pca),
            Method::Ica => classical(ClassicalReducer::Ica(IcaConfig { seed, ..self.ica })),
            Method::Nmf => classical(ClassicalReducer::Nmf(self.nmf)),
            Method::Lle => classical(ClassicalReducer::Lle(self.lle)),
            Method::Spectral => classical(ClassicalReducer::Spectral(self.spectral)),
            Method::Rbm => classical(ClassicalReducer::Rbm(RbmConfig { seed, ..self.rbm })),
            ae => {
                let mut c = match ae {
                    Method::Vanilla => AeConfig::vanilla(seed),
                    Method::Variational => AeConfig::variational(seed),
                    Method::ClassifierMse => AeConfig::classifier_mse(seed),
                    Method::ClassifierBce => AeConfig::classifier_bce(seed),
                    Method::Sinkhorn => AeConfig::sinkhorn(seed),
                    Method::SinkclassMse => AeConfig::sinkclass_mse(seed),
                    _ => AeConfig::sinkclass_bce(seed),
                };
                let o = &self.autoencoder;
                if let Some(v) = o.max_epochs {
                    c.train.max_epochs = v;
                }
                if let Some(v) = o.batch_size {
                    c.train.batch_size = v;
                }
                if let Some(v) = o.learning_rate {
                    c.train.learning_rate = v;
                }
                if let Some(v) = o.alpha {
                    c.train.alpha = v;
                }
                if let Some(v) = o.beta {
                    c.train.beta = v;
                }
                if let Some(v) = o.early_stop_patience {
                    c.train.early_stop_patience = v;
                }
                if let Some(v) = o.sinkhorn {
                    c.sinkhorn = v;
                }
                ReducerPlan::Autoencoder(c)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CircuitConfig {
    pub qubits: usize,
    pub angle_scale: f64,
    pub layer2_shift: usize,
    /// Repetitions per kernel entry; 0 evaluates the kernel exactly.
    pub shots: u64,
}

impl Default for CircuitConfig {
    fn default() -> Self {
        let c = EncodingCircuit::default();
        Self { qubits: DEFAULT_QUBITS, angle_scale: c.angle_scale, layer2_shift: c.layer2_shift, shots: 0 }
    }
}

impl CircuitConfig {
    pub fn circuit(&self) -> EncodingCircuit {
        EncodingCircuit { qubits: self.qubits, angle_scale: self.angle_scale, layer2_shift: self.layer2_shift }
    }

    pub fn shot_config(&self, seed: u64) -> Option<ShotConfig> {
        (self.shots > 0).then_some(ShotConfig { shots: self.shots, seed })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    pub c_grid: Vec<f64>,
    pub tolerance: f64,
    pub max_iterations_per_sample: usize,
    pub polish: bool,
}

impl Default for SvmConfig {
    fn default() -> Self {
        let s = SmoConfig::default();
        Self {
            c_grid: DEFAULT_C_GRID.to_vec(),
            tolerance: s.tolerance,
            max_iterations_per_sample: s.max_iterations_per_sample,
            polish: s.polish,
        }
    }
}

impl SvmConfig {
    pub fn smo(&self) -> SmoConfig {
        SmoConfig { tolerance: self.tolerance, max_iterations_per_sample: self.max_iterations_per_sample, polish: self.polish }
    }
}

/// Split the QSVM training events are drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum QsvmSource {
    Train,
    Val,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub qsvm_train: usize,
    pub qsvm_test: usize,
    /// Validation events used to score each C of the grid.
    pub qsvm_val: usize,
    pub subsets: usize,
    pub qsvm_train_source: QsvmSource,
    /// Shrink budgets that exceed the available events instead of failing.
    pub cap_to_available: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            qsvm_train: QSVM_TRAIN,
            qsvm_test: QSVM_TEST,
            qsvm_val: QSVM_TRAIN,
            subsets: SUBSETS,
            qsvm_train_source: QsvmSource::Test,
            cap_to_available: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub kernel_cache: bool,
    /// Benchmark rows run concurrently; 0 uses one worker per core.
    pub workers: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("qrdx-out"), kernel_cache: true, workers: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub methods: Vec<Method>,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self { methods: Method::ALL.to_vec() }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec { sizes: self.dataset.split, seed: self.seed }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let e = &self.eval;
        if e.subsets == 0 {
            return bad("eval.subsets must be positive".into());
        }
        if e.qsvm_test % e.subsets != 0 {
            return bad(format!("eval.qsvm_test ({}) must be divisible by eval.subsets ({})", e.qsvm_test, e.subsets));
        }
        if e.qsvm_train < 2 || e.qsvm_val < 2 || e.qsvm_test < 2 * e.subsets {
            return bad("QSVM budgets need at least one event per class (and per subset)".into());
        }
        if self.reducer.d_star != 2 * self.circuit.qubits {
            return bad(format!(
                "reducer.d_star ({}) must equal two features per qubit ({} qubits)",
                self.reducer.d_star, self.circuit.qubits
            ));
        }
        self.circuit.circuit().validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.svm.c_grid.is_empty() || self.svm.c_grid.iter().any(|&c| !(c > 0.0 && c.is_finite())) {
            return bad("svm.c_grid must be a non-empty list of positive values".into());
        }
        if !(self.svm.tolerance > 0.0) || self.svm.max_iterations_per_sample == 0 {
            return bad("svm.tolerance and svm.max_iterations_per_sample must be positive".into());
        }
        if self.dataset.path.is_none() {
            let s = &self.dataset.synthetic;
            if s.samples < 2 || !(0.0..=1.0).contains(&s.hardness) {
                return bad("dataset.synthetic needs at least 2 samples and hardness in [0, 1]".into());
            }
        }
        if let SplitSizes::Fractions { train, val, test } = self.dataset.split {
            if [train, val, test].iter().any(|f| !(0.0..=1.0).contains(f)) || (train + val + test - 1.0).abs() > 1e-9 {
                return bad("dataset.split fractions must lie in [0, 1] and sum to 1".into());
            }
        }
        for m in Method::ALL.into_iter().filter(|m| m.is_autoencoder()) {
            if let ReducerPlan::Autoencoder(c) = self.reducer.plan(m, self.seed) {
                c.validate().map_err(|e| Error::Config(format!("{}: {e}", m.id())))?;
            }
        }
        Ok(())
    }
}
