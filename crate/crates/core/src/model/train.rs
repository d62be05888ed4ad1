//! Mini-batch training with the non-negative correction.
//!
//! Each epoch shuffles `P` and `U` independently and forms
//! `N = ceil(n_U / batch_size)` batches. Batch `i` takes the `i`-th
//! `batch_size` slice of `U` and `k = ceil(n_P / N)` labeled positives from a
//! stream built by concatenating fresh shuffles of `P`, so scarce positives are
//! recycled across batches. When the estimator is non-negative and the
//! batch's negative-risk estimate is below zero, the optimizer steps *up* the
//! gradient of that estimate; otherwise it descends the full risk.

use ndarray::Axis;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{adam_step, init_scorer, AdamConfig, AdamState, ScorerParams, DEFAULT_HIDDEN};
use crate::data::{ClassPrior, PuView};
use crate::error::{Error, Result};
use crate::loss::LossKind;
use crate::risk::{Branch, Estimator};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub batch_size: usize,
    pub hidden: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    pub estimator: Estimator,
    pub loss: LossKind,
    pub prior: ClassPrior,
}

impl TrainConfig {
    /// Defaults for `estimator`, using its default loss.
    pub fn new(estimator: Estimator, prior: ClassPrior) -> Self {
        TrainConfig {
            max_epochs: 100,
            batch_size: 128,
            hidden: DEFAULT_HIDDEN,
            adam: AdamConfig::default(),
            seed: 0,
            estimator,
            loss: estimator.default_loss(),
            prior,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be >= 1".into()));
        }
        if self.batch_size < 2 {
            return Err(Error::Config("batch_size must be >= 2".into()));
        }
        if !(self.adam.learning_rate > 0.0) {
            return Err(Error::Config("learning rate must be > 0".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden width must be >= 1".into()));
        }
        self.estimator.check_loss(&self.loss)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub epoch: usize,
    pub batch: usize,
    /// Reported risk of the configured estimator before the update.
    pub risk: f64,
    /// `pos_term - neg_correction + unlabeled_term`, whatever the estimator.
    pub unclipped_risk: f64,
    pub branch: Branch,
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    pub records: Vec<TraceRecord>,
    pub batches_per_epoch: usize,
    pub final_params: ScorerParams,
}

impl TrainTrace {
    /// Fraction of mini-batches whose negative-risk estimate was clamped.
    pub fn clamp_rate(&self) -> f64 {
        if self.records.is_empty() {
            return 0.0;
        }
        self.records.iter().filter(|r| r.clamped).count() as f64 / self.records.len() as f64
    }
}

/// Train a fresh scorer on `pu`. The hidden labels of `pu` are never read.
pub fn train(pu: &PuView, config: &TrainConfig) -> Result<(ScorerParams, TrainTrace)> {
    config.validate()?;
    let n_u = pu.unlabeled().len();
    if config.batch_size > n_u {
        return Err(Error::Config(format!(
            "batch_size {} exceeds the {} unlabeled examples",
            config.batch_size, n_u
        )));
    }
    let x_p = pu.labeled_features();
    let x_u = pu.unlabeled_features();
    let n_p = x_p.nrows();
    let mut rng = seed::rng(config.seed);
    let mut params = init_scorer(pu.dim(), config.hidden, seed::derive(config.seed, &[0x1a17]))?;
    let mut adam = AdamState::new(&params);

    let n_batches = n_u.div_ceil(config.batch_size);
    let p_per_batch = n_p.div_ceil(n_batches).max(1);
    let mut records = Vec::with_capacity(config.max_epochs * n_batches);
    let mut u_order: Vec<usize> = (0..n_u).collect();
    let mut p_stream = Vec::with_capacity(n_batches * p_per_batch + n_p);

    for epoch in 0..config.max_epochs {
        u_order.shuffle(&mut rng);
        p_stream.clear();
        while p_stream.len() < n_batches * p_per_batch {
            let mut perm: Vec<usize> = (0..n_p).collect();
            perm.shuffle(&mut rng);
            p_stream.extend(perm);
        }
        for batch in 0..n_batches {
            let u_idx = &u_order[batch * config.batch_size..((batch + 1) * config.batch_size).min(n_u)];
            let p_idx = &p_stream[batch * p_per_batch..(batch + 1) * p_per_batch];
            let bp = x_p.select(Axis(0), p_idx);
            let bu = x_u.select(Axis(0), u_idx);
            let mut step = params.backward(&bp, &bu, config.estimator, &config.loss, config.prior)?;
            let b = step.breakdown;
            records.push(TraceRecord {
                epoch,
                batch,
                risk: b.total,
                unclipped_risk: b.pos_term - b.neg_correction + b.unlabeled_term,
                branch: step.branch,
                clamped: b.clamped,
            });
            if step.branch == Branch::Ascent {
                step.grad.values_mut().for_each(|g| *g = -*g);
            }
            adam_step(&mut params, &step.grad, &mut adam, &config.adam)?;
        }
    }
    let trace = TrainTrace {
        records,
        batches_per_epoch: n_batches,
        final_params: params.clone(),
    };
    Ok((params, trace))
}
