//! Grid planning and execution.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DatasetSource, ExperimentConfig, PRIOR_CLIP};
use crate::data::{self, LabeledDataset, Mechanism, SplitSpec};
use crate::error::{Error, Result};
use crate::metrics::{self, Metrics};
use crate::model::{train, ScorerParams, TrainConfig, TrainTrace};
use crate::risk::Estimator;
use crate::seed;

/// Coordinates of one run. Field order is the canonical sort order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunCoord {
    pub dataset_index: usize,
    pub dataset: String,
    pub mechanism: Mechanism,
    pub labeled_ratio: f64,
    pub estimator: Estimator,
    pub prior_multiplier: f64,
    pub repetition: usize,
}

impl RunCoord {
    /// Seed of the split, shared by every cell of the same dataset and repetition.
    pub fn split_seed(&self, base: u64) -> u64 {
        seed::derive(base, &[seed::hash_str(&self.dataset), self.dataset_index as u64, self.repetition as u64])
    }

    /// Seed of the labeling draw; independent of estimator and multiplier so
    /// those are compared on identical PU data.
    pub fn label_seed(&self, base: u64) -> u64 {
        seed::derive(
            self.split_seed(base),
            &[self.mechanism as u64, self.labeled_ratio.to_bits()],
        )
    }

    /// Seed of initialization and mini-batch shuffling.
    pub fn train_seed(&self, base: u64) -> u64 {
        seed::derive(self.label_seed(base), &[0x7a11])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub coord: RunCoord,
    pub seed: u64,
    pub prior: f64,
    pub roc_auc: Option<f64>,
    pub pr_auc: Option<f64>,
    pub r_precision: Option<f64>,
    pub clamp_rate: Option<f64>,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

impl RunRecord {
    pub fn metrics(&self) -> Option<Metrics> {
        Some(Metrics {
            roc_auc: self.roc_auc?,
            pr_auc: self.pr_auc?,
            r_precision: self.r_precision?,
        })
    }

    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    /// Equal coordinates and bit-identical outcomes, ignoring wall time.
    pub fn same_outcome(&self, other: &RunRecord) -> bool {
        let bits = |v: Option<f64>| v.map(f64::to_bits);
        self.coord == other.coord
            && self.seed == other.seed
            && self.prior.to_bits() == other.prior.to_bits()
            && bits(self.roc_auc) == bits(other.roc_auc)
            && bits(self.pr_auc) == bits(other.pr_auc)
            && bits(self.r_precision) == bits(other.r_precision)
            && bits(self.clamp_rate) == bits(other.clamp_rate)
            && self.error == other.error
    }
}

/// Every run of the grid in canonical order, without training anything.
pub fn plan(config: &ExperimentConfig) -> Vec<RunCoord> {
    let mut coords = Vec::with_capacity(config.run_count());
    for (dataset_index, source) in config.datasets.iter().enumerate() {
        for &mechanism in &config.mechanisms {
            for &labeled_ratio in &config.labeled_ratios {
                for &estimator in &config.estimators {
                    for &prior_multiplier in &config.prior_multipliers {
                        for repetition in 0..config.repetitions {
                            coords.push(RunCoord {
                                dataset_index,
                                dataset: source.name(),
                                mechanism,
                                labeled_ratio,
                                estimator,
                                prior_multiplier,
                                repetition,
                            });
                        }
                    }
                }
            }
        }
    }
    coords
}

pub fn load_source(source: &DatasetSource, config: &ExperimentConfig) -> Result<LabeledDataset> {
    match source {
        DatasetSource::Csv(path) => data::load_csv(path, &config.csv_schema),
        DatasetSource::Synthetic(g) => {
            data::synth_gaussian(g, seed::derive(config.base_seed, &[seed::hash_str(&g.to_string())]))
        }
    }
}

/// A trained cell: the model, its trace and its held-out metrics.
#[derive(Debug, Clone)]
pub struct FittedRun {
    pub params: ScorerParams,
    pub trace: TrainTrace,
    pub train_config: TrainConfig,
    pub metrics: Metrics,
}

/// Split, standardize, label, train and score one cell.
pub fn fit(coord: &RunCoord, ds: &LabeledDataset, config: &ExperimentConfig) -> Result<FittedRun> {
    let spec = SplitSpec {
        train_fraction: config.train_fraction,
        labeled_ratio: coord.labeled_ratio,
        mechanism: coord.mechanism,
        seed: coord.split_seed(config.base_seed),
    };
    let (train_raw, test_raw) = data::train_test_split(ds, &spec)?;
    let (train_set, test_set, _) = data::standardize(&train_raw, &test_raw)?;
    let pu = data::label(
        &train_set,
        coord.mechanism,
        coord.labeled_ratio,
        coord.label_seed(config.base_seed),
        &config.sar,
    )?;
    let prior = train_set.prior().scaled(coord.prior_multiplier, PRIOR_CLIP);
    let mut tc = config
        .train
        .train_config(coord.estimator, prior, coord.train_seed(config.base_seed));
    tc.batch_size = tc.batch_size.min(pu.unlabeled().len());
    let (params, trace) = train(&pu, &tc)?;
    let scores = params.forward(test_set.features())?;
    let metrics = metrics::evaluate(scores.as_slice().expect("contiguous"), test_set.labels())?;
    Ok(FittedRun {
        params,
        trace,
        train_config: tc,
        metrics,
    })
}

/// Run one cell against an already loaded dataset.
pub fn run_one(coord: &RunCoord, ds: &LabeledDataset, config: &ExperimentConfig) -> RunRecord {
    let start = Instant::now();
    let outcome = fit(coord, ds, config);
    let wall_time_s = start.elapsed().as_secs_f64();
    let seed = coord.split_seed(config.base_seed);
    match outcome {
        Ok(o) => RunRecord {
            coord: coord.clone(),
            seed,
            prior: o.train_config.prior.positive(),
            roc_auc: Some(o.metrics.roc_auc),
            pr_auc: Some(o.metrics.pr_auc),
            r_precision: Some(o.metrics.r_precision),
            clamp_rate: Some(o.trace.clamp_rate()),
            wall_time_s,
            error: None,
        },
        Err(e) => failed(coord, seed, wall_time_s, &e),
    }
}

fn failed(coord: &RunCoord, seed: u64, wall_time_s: f64, e: &Error) -> RunRecord {
    RunRecord {
        coord: coord.clone(),
        seed,
        prior: f64::NAN,
        roc_auc: None,
        pr_auc: None,
        r_precision: None,
        clamp_rate: None,
        wall_time_s,
        error: Some(e.to_string()),
    }
}

/// Execute the grid. Failing runs are recorded, never fatal. Records come
/// back in [`plan`] order whatever the thread count.
pub fn run_grid(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    config.validate()?;
    let datasets: Vec<std::result::Result<LabeledDataset, String>> = config
        .datasets
        .iter()
        .map(|s| load_source(s, config).map_err(|e| e.to_string()))
        .collect();
    let coords = plan(config);
    let work = |coord: &RunCoord| match &datasets[coord.dataset_index] {
        Ok(ds) => run_one(coord, ds, config),
        Err(msg) => RunRecord {
            error: Some(format!("dataset unavailable: {msg}")),
            ..failed(coord, coord.split_seed(config.base_seed), 0.0, &Error::Empty("dataset"))
        },
    };
    if config.threads == 1 {
        return Ok(coords.iter().map(work).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| Error::Config(e.to_string()))?;
    Ok(pool.install(|| coords.par_iter().map(work).collect()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::TrainSettings;

    fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            datasets: vec!["synth:n=300,d=3,ratio=0.1,sep=3,overlap=0".parse().unwrap()],
            mechanisms: vec![Mechanism::Scar],
            labeled_ratios: vec![0.5],
            repetitions: 1,
            estimators: vec![Estimator::Nnpu],
            train: TrainSettings {
                max_epochs: 3,
                batch_size: 64,
                hidden: 8,
                ..TrainSettings::default()
            },
            threads: 1,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn single_cell_single_record() {
        let recs = run_grid(&tiny()).unwrap();
        assert_eq!(recs.len(), 1);
        let m = recs[0].metrics().unwrap();
        for v in [m.roc_auc, m.pr_auc, m.r_precision] {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn rerun_is_bit_identical() {
        let a = run_grid(&tiny()).unwrap();
        let b = run_grid(&tiny()).unwrap();
        assert!(a[0].same_outcome(&b[0]));
    }

    #[test]
    fn missing_dataset_is_recorded_not_fatal() {
        let mut cfg = tiny();
        cfg.datasets.push(DatasetSource::Csv("/no/such/file.csv".into()));
        let recs = run_grid(&cfg).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(!recs[0].failed());
        assert!(recs[1].failed());
        assert!(recs[1].error.as_deref().unwrap().contains("file not found"));
    }

    #[test]
    fn repetition_only_changes_its_own_seeds() {
        let mut cfg = tiny();
        cfg.repetitions = 3;
        let c = plan(&cfg);
        assert_eq!(c.len(), 3);
        let s: Vec<u64> = c.iter().map(|c| c.split_seed(0)).collect();
        assert!(s[0] != s[1] && s[1] != s[2]);
        let mut other = c[1].clone();
        other.estimator = Estimator::Ifpu;
        other.prior_multiplier = 2.0;
        assert_eq!(other.train_seed(0), c[1].train_seed(0));
    }
}
