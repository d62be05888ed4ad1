//! Experiment configuration and its key-value file format.
//!
//! The config file is TOML with flat keys, all optional:
//!
//! ```toml
//! datasets = ["synth:n=2000,d=10,ratio=0.02", "data/cardio.csv"]
//! label_column = "label"        # CSV datasets only
//! positive_label = "1"
//! negative_label = "-1"
//! mechanisms = ["SCAR", "SAR"]
//! labeled_ratios = [0.25, 0.5, 0.75]
//! repetitions = 10
//! estimators = ["uPU", "nnPU", "iFPU"]
//! prior_multipliers = [1.0]
//! base_seed = 0
//! train_fraction = 0.7
//! max_epochs = 100
//! batch_size = 128
//! hidden = 64
//! learning_rate = 0.001
//! gamma = 3.0
//! baseline_loss = "sigmoid"             # uPU/nnPU loss, or "logistic"
//! sar_exponent = 1.0
//! sar_distance_space = "standardized"   # or "raw"
//! threads = 0                            # 0 = all cores
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{CsvSchema, DistanceSpace, GaussianMixture, Mechanism, SarOptions};
use crate::error::{Error, Result};
use crate::loss::{FocalParams, LossKind, DEFAULT_GAMMA};
use crate::model::{AdamConfig, TrainConfig, DEFAULT_HIDDEN};
use crate::risk::Estimator;

pub const SENSITIVITY_MULTIPLIERS: [f64; 6] = [0.25, 0.5, 1.0, 1.5, 2.0, 4.0];
pub const PAPER_LABELED_RATIOS: [f64; 3] = [0.25, 0.5, 0.75];
/// Scaled priors are clipped to `[PRIOR_CLIP, 1 - PRIOR_CLIP]`.
pub const PRIOR_CLIP: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Csv(PathBuf),
    Synthetic(GaussianMixture),
}

impl DatasetSource {
    pub fn name(&self) -> String {
        match self {
            DatasetSource::Csv(p) => p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| p.display().to_string()),
            DatasetSource::Synthetic(g) => g.to_string(),
        }
    }
}

impl FromStr for DatasetSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s.trim_start().starts_with("synth:") {
            Ok(DatasetSource::Synthetic(s.parse()?))
        } else {
            Ok(DatasetSource::Csv(PathBuf::from(s.trim())))
        }
    }
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::Csv(p) => write!(f, "{}", p.display()),
            DatasetSource::Synthetic(g) => write!(f, "{g}"),
        }
    }
}

/// Training knobs shared by every run of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainSettings {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub hidden: usize,
    pub learning_rate: f64,
    pub gamma: f64,
    /// Loss of uPU and nnPU; iFPU always uses the focal loss.
    pub baseline_loss: LossKind,
}

impl Default for TrainSettings {
    fn default() -> Self {
        TrainSettings {
            max_epochs: 100,
            batch_size: 128,
            hidden: DEFAULT_HIDDEN,
            learning_rate: AdamConfig::default().learning_rate,
            gamma: DEFAULT_GAMMA,
            baseline_loss: LossKind::Sigmoid,
        }
    }
}

impl TrainSettings {
    pub fn loss_for(&self, estimator: Estimator) -> LossKind {
        match estimator {
            Estimator::Ifpu => LossKind::Focal(FocalParams::with_gamma(self.gamma)),
            _ => self.baseline_loss,
        }
    }

    pub fn train_config(&self, estimator: Estimator, prior: crate::data::ClassPrior, seed: u64) -> TrainConfig {
        TrainConfig {
            max_epochs: self.max_epochs,
            batch_size: self.batch_size,
            hidden: self.hidden,
            adam: AdamConfig {
                learning_rate: self.learning_rate,
                ..AdamConfig::default()
            },
            seed,
            estimator,
            loss: self.loss_for(estimator),
            prior,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSource>,
    pub csv_schema: CsvSchema,
    pub mechanisms: Vec<Mechanism>,
    pub labeled_ratios: Vec<f64>,
    pub repetitions: usize,
    pub estimators: Vec<Estimator>,
    pub prior_multipliers: Vec<f64>,
    pub base_seed: u64,
    pub train_fraction: f64,
    pub train: TrainSettings,
    pub sar: SarOptions,
    /// Worker threads; 0 uses every core, 1 runs serially.
    pub threads: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            datasets: Vec::new(),
            csv_schema: CsvSchema::default(),
            mechanisms: vec![Mechanism::Scar, Mechanism::Sar],
            labeled_ratios: PAPER_LABELED_RATIOS.to_vec(),
            repetitions: 10,
            estimators: vec![Estimator::Ifpu],
            prior_multipliers: vec![1.0],
            base_seed: 0,
            train_fraction: 0.7,
            train: TrainSettings::default(),
            sar: SarOptions::default(),
            threads: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let nonempty = |len: usize, what: &str| {
            if len == 0 {
                Err(Error::Config(format!("{what} must not be empty")))
            } else {
                Ok(())
            }
        };
        nonempty(self.datasets.len(), "datasets")?;
        nonempty(self.mechanisms.len(), "mechanisms")?;
        nonempty(self.labeled_ratios.len(), "labeled_ratios")?;
        nonempty(self.estimators.len(), "estimators")?;
        nonempty(self.prior_multipliers.len(), "prior_multipliers")?;
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be >= 1".into()));
        }
        if let Some(m) = self.prior_multipliers.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return Err(Error::Config(format!("prior multiplier {m} must be > 0")));
        }
        if let Some(r) = self.labeled_ratios.iter().find(|r| !(**r > 0.0 && **r <= 1.0)) {
            return Err(Error::Config(format!("labeled ratio {r} not in (0, 1]")));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::Config(format!("train fraction {} not in (0, 1)", self.train_fraction)));
        }
        Ok(())
    }

    /// `|datasets| * |mechanisms| * |ratios| * |estimators| * |multipliers| * repetitions`.
    pub fn run_count(&self) -> usize {
        self.datasets.len()
            * self.mechanisms.len()
            * self.labeled_ratios.len()
            * self.estimators.len()
            * self.prior_multipliers.len()
            * self.repetitions
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let path = path.as_ref();
        if !path.is_file() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        let file: ConfigFile = toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
        let mut cfg = ExperimentConfig::default();
        file.apply(&mut cfg)?;
        Ok(cfg)
    }
}

/// Flat key-value form of [`ExperimentConfig`]; every key is optional and
/// overrides the default when present. CLI flags use the same struct.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub datasets: Option<Vec<String>>,
    pub label_column: Option<String>,
    pub positive_label: Option<String>,
    pub negative_label: Option<String>,
    pub mechanisms: Option<Vec<String>>,
    pub labeled_ratios: Option<Vec<f64>>,
    pub repetitions: Option<usize>,
    pub estimators: Option<Vec<String>>,
    pub prior_multipliers: Option<Vec<f64>>,
    pub base_seed: Option<u64>,
    pub train_fraction: Option<f64>,
    pub max_epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub hidden: Option<usize>,
    pub learning_rate: Option<f64>,
    pub gamma: Option<f64>,
    pub baseline_loss: Option<String>,
    pub sar_exponent: Option<f64>,
    pub sar_distance_space: Option<String>,
    pub threads: Option<usize>,
}

impl ConfigFile {
    pub fn apply(&self, cfg: &mut ExperimentConfig) -> Result<()> {
        if let Some(ds) = &self.datasets {
            cfg.datasets = ds.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        if let Some(v) = &self.label_column {
            cfg.csv_schema.label_column = v.clone();
        }
        if let Some(v) = &self.positive_label {
            cfg.csv_schema.positive_label = v.clone();
        }
        if let Some(v) = &self.negative_label {
            cfg.csv_schema.negative_label = v.clone();
        }
        if let Some(ms) = &self.mechanisms {
            cfg.mechanisms = ms.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        if let Some(v) = &self.labeled_ratios {
            cfg.labeled_ratios = v.clone();
        }
        if let Some(v) = self.repetitions {
            cfg.repetitions = v;
        }
        if let Some(es) = &self.estimators {
            cfg.estimators = es.iter().map(|s| s.parse()).collect::<Result<_>>()?;
        }
        if let Some(v) = &self.prior_multipliers {
            cfg.prior_multipliers = v.clone();
        }
        if let Some(v) = self.base_seed {
            cfg.base_seed = v;
        }
        if let Some(v) = self.train_fraction {
            cfg.train_fraction = v;
        }
        if let Some(v) = self.max_epochs {
            cfg.train.max_epochs = v;
        }
        if let Some(v) = self.batch_size {
            cfg.train.batch_size = v;
        }
        if let Some(v) = self.hidden {
            cfg.train.hidden = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.train.learning_rate = v;
        }
        if let Some(v) = self.gamma {
            cfg.train.gamma = v;
        }
        if let Some(v) = &self.baseline_loss {
            cfg.train.baseline_loss = match v.to_ascii_lowercase().as_str() {
                "sigmoid" => LossKind::Sigmoid,
                "logistic" => LossKind::Logistic,
                other => return Err(Error::Config(format!("unknown baseline loss `{other}`"))),
            };
        }
        if let Some(v) = self.sar_exponent {
            cfg.sar.exponent = v;
        }
        if let Some(v) = &self.sar_distance_space {
            cfg.sar.distance_space = match v.to_ascii_lowercase().as_str() {
                "raw" => DistanceSpace::Raw,
                "standardized" => DistanceSpace::Standardized,
                other => return Err(Error::Config(format!("unknown distance space `{other}`"))),
            };
        }
        if let Some(v) = self.threads {
            cfg.threads = v;
        }
        Ok(())
    }
}
