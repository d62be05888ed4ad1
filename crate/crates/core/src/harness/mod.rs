//! Experiment orchestration: grids of (dataset, mechanism, labeled ratio,
//! estimator, prior multiplier, repetition) runs and their reports.

mod config;
mod grid;
mod report;

pub use self::config::{
    ConfigFile, DatasetSource, ExperimentConfig, TrainSettings, PAPER_LABELED_RATIOS, PRIOR_CLIP,
    SENSITIVITY_MULTIPLIERS,
};
pub use self::grid::{fit, load_source, FittedRun, plan, run_grid, run_one, RunCoord, RunRecord};
pub use self::report::{aggregate, emit_report, write_records_csv, MetricName, Summary, SummaryRow};

use crate::error::{Error, Result};
use crate::risk::Estimator;

/// Results of a prior-misspecification sweep, one entry per multiplier in
/// the order requested.
#[derive(Debug, Clone)]
pub struct Sensitivity {
    pub records: Vec<RunRecord>,
    pub summary: Summary,
    pub by_multiplier: Vec<(f64, Summary)>,
}

/// Train iFPU with the prior scaled by each multiplier; everything else in
/// `config` is held fixed. Defaults to [`SENSITIVITY_MULTIPLIERS`] when the
/// config lists only the identity multiplier.
pub fn sensitivity_sweep(config: &ExperimentConfig) -> Result<Sensitivity> {
    if config.estimators != [Estimator::Ifpu] {
        return Err(Error::Config("the sensitivity sweep trains iFPU only".into()));
    }
    let mut cfg = config.clone();
    if cfg.prior_multipliers == [1.0] {
        cfg.prior_multipliers = SENSITIVITY_MULTIPLIERS.to_vec();
    }
    let records = run_grid(&cfg)?;
    let summary = aggregate(&records);
    let by_multiplier = cfg
        .prior_multipliers
        .iter()
        .map(|&m| {
            let subset: Vec<RunRecord> = records
                .iter()
                .filter(|r| r.coord.prior_multiplier == m)
                .cloned()
                .collect();
            (m, aggregate(&subset))
        })
        .collect();
    Ok(Sensitivity {
        records,
        summary,
        by_multiplier,
    })
}
