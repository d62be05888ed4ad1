//! Aggregation of run records and the CSV / JSON / Markdown reports.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::RunRecord;
use crate::data::Mechanism;
use crate::error::{Error, Result};
use crate::metrics::Metrics;
use crate::risk::Estimator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricName {
    RocAuc,
    PrAuc,
    RPrecision,
}

impl MetricName {
    pub const ALL: [MetricName; 3] = [MetricName::RocAuc, MetricName::PrAuc, MetricName::RPrecision];

    pub fn of(self, m: &Metrics) -> f64 {
        match self {
            MetricName::RocAuc => m.roc_auc,
            MetricName::PrAuc => m.pr_auc,
            MetricName::RPrecision => m.r_precision,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MetricName::RocAuc => "roc_auc",
            MetricName::PrAuc => "pr_auc",
            MetricName::RPrecision => "r_precision",
        }
    }

    fn title(self) -> &'static str {
        match self {
            MetricName::RocAuc => "ROC-AUC",
            MetricName::PrAuc => "PR-AUC",
            MetricName::RPrecision => "R-Precision",
        }
    }
}

/// One aggregated cell: the macro average over datasets of the per-dataset
/// mean over repetitions, with the population std across datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub estimator: Estimator,
    pub mechanism: Mechanism,
    pub labeled_ratio: f64,
    pub prior_multiplier: f64,
    pub metric: MetricName,
    pub mean: f64,
    pub std: f64,
    pub datasets: usize,
    pub runs: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub failed_runs: usize,
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct CellKey {
    estimator: Estimator,
    mechanism: Mechanism,
    ratio: u64,
    multiplier: u64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

// Ordered-float key for non-negative finite values.
fn key_bits(v: f64) -> u64 {
    v.to_bits()
}

/// Failed runs are counted and excluded. A dataset with no successful run in
/// a cell drops out of that cell's macro average.
pub fn aggregate(records: &[RunRecord]) -> Summary {
    // cell -> dataset index -> successful metrics
    let mut cells: BTreeMap<CellKey, BTreeMap<usize, Vec<Metrics>>> = BTreeMap::new();
    let mut failed_runs = 0;
    for r in records {
        let Some(m) = r.metrics() else {
            failed_runs += 1;
            continue;
        };
        let c = &r.coord;
        cells
            .entry(CellKey {
                estimator: c.estimator,
                mechanism: c.mechanism,
                ratio: key_bits(c.labeled_ratio),
                multiplier: key_bits(c.prior_multiplier),
            })
            .or_default()
            .entry(c.dataset_index)
            .or_default()
            .push(m);
    }
    let mut rows = Vec::new();
    for (key, per_dataset) in &cells {
        let runs = per_dataset.values().map(Vec::len).sum();
        for metric in MetricName::ALL {
            let dataset_means: Vec<f64> = per_dataset
                .values()
                .map(|ms| mean_std(&ms.iter().map(|m| metric.of(m)).collect::<Vec<_>>()).0)
                .collect();
            let (mean, std) = mean_std(&dataset_means);
            rows.push(SummaryRow {
                estimator: key.estimator,
                mechanism: key.mechanism,
                labeled_ratio: f64::from_bits(key.ratio),
                prior_multiplier: f64::from_bits(key.multiplier),
                metric,
                mean,
                std,
                datasets: dataset_means.len(),
                runs,
            });
        }
    }
    Summary { rows, failed_runs }
}

impl Summary {
    pub fn get(
        &self,
        estimator: Estimator,
        mechanism: Mechanism,
        labeled_ratio: f64,
        prior_multiplier: f64,
        metric: MetricName,
    ) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| {
            r.estimator == estimator
                && r.mechanism == mechanism
                && r.labeled_ratio == labeled_ratio
                && r.prior_multiplier == prior_multiplier
                && r.metric == metric
        })
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
        wtr.write_record([
            "estimator",
            "mechanism",
            "labeled_ratio",
            "prior_multiplier",
            "metric",
            "mean",
            "std",
            "datasets",
            "runs",
        ])?;
        for row in &self.rows {
            wtr.serialize(row)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(r: R) -> Result<Summary> {
        let mut rdr = csv::Reader::from_reader(r);
        let rows = rdr.deserialize().collect::<std::result::Result<Vec<SummaryRow>, _>>()?;
        Ok(Summary { rows, failed_runs: 0 })
    }

    /// `estimator -> mechanism -> labeled ratio -> prior multiplier -> metric -> {mean, std, ...}`.
    pub fn to_json(&self) -> Result<String> {
        type Leaf = BTreeMap<&'static str, serde_json::Value>;
        let mut tree: BTreeMap<String, BTreeMap<String, BTreeMap<String, BTreeMap<String, BTreeMap<&str, Leaf>>>>> =
            BTreeMap::new();
        for r in &self.rows {
            let leaf: Leaf = [
                ("mean", serde_json::json!(r.mean)),
                ("std", serde_json::json!(r.std)),
                ("datasets", serde_json::json!(r.datasets)),
                ("runs", serde_json::json!(r.runs)),
            ]
            .into_iter()
            .collect();
            tree.entry(r.estimator.to_string())
                .or_default()
                .entry(r.mechanism.to_string())
                .or_default()
                .entry(r.labeled_ratio.to_string())
                .or_default()
                .entry(r.prior_multiplier.to_string())
                .or_default()
                .insert(r.metric.as_str(), leaf);
        }
        let doc = serde_json::json!({ "failed_runs": self.failed_runs, "results": tree });
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Config(e.to_string()))
    }

    /// One table per (metric, mechanism, prior multiplier); rows are
    /// estimators, columns labeled ratios in descending order (`P75` etc.).
    pub fn to_markdown(&self) -> String {
        let mut out = String::new();
        let mut ratios: Vec<f64> = self.rows.iter().map(|r| r.labeled_ratio).collect();
        ratios.sort_by(|a, b| b.total_cmp(a));
        ratios.dedup();
        let mut multipliers: Vec<f64> = self.rows.iter().map(|r| r.prior_multiplier).collect();
        multipliers.sort_by(f64::total_cmp);
        multipliers.dedup();
        let mut estimators: Vec<Estimator> = self.rows.iter().map(|r| r.estimator).collect();
        estimators.sort();
        estimators.dedup();
        let mut mechanisms: Vec<Mechanism> = self.rows.iter().map(|r| r.mechanism).collect();
        mechanisms.sort();
        mechanisms.dedup();
        for metric in MetricName::ALL {
            for &mech in &mechanisms {
                for &mult in &multipliers {
                    let _ = write!(out, "### {} — {mech}", metric.title());
                    if multipliers.len() > 1 || mult != 1.0 {
                        let _ = write!(out, " — prior x{mult}");
                    }
                    out.push_str("\n\n| Method |");
                    for r in &ratios {
                        let _ = write!(out, " P{} |", (r * 100.0).round());
                    }
                    out.push_str("\n|---|");
                    out.push_str(&"---|".repeat(ratios.len()));
                    out.push('\n');
                    for &est in &estimators {
                        let _ = write!(out, "| {est} |");
                        for &ratio in &ratios {
                            match self.get(est, mech, ratio, mult, metric) {
                                Some(r) => {
                                    let _ = write!(out, " {:.3} ± {:.3} |", r.mean, r.std);
                                }
                                None => out.push_str(" – |"),
                            }
                        }
                        out.push('\n');
                    }
                    out.push('\n');
                }
            }
        }
        if self.failed_runs > 0 {
            let _ = writeln!(out, "{} run(s) failed and were excluded.", self.failed_runs);
        }
        out
    }
}

#[derive(Serialize)]
struct FlatRecord<'a> {
    dataset: &'a str,
    mechanism: Mechanism,
    labeled_ratio: f64,
    estimator: Estimator,
    prior_multiplier: f64,
    repetition: usize,
    seed: u64,
    prior: f64,
    roc_auc: Option<f64>,
    pr_auc: Option<f64>,
    r_precision: Option<f64>,
    clamp_rate: Option<f64>,
    wall_time_s: f64,
    error: Option<&'a str>,
}

/// One CSV row per run, in the order given.
pub fn write_records_csv<W: io::Write>(records: &[RunRecord], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in records {
        let c = &r.coord;
        wtr.serialize(FlatRecord {
            dataset: &c.dataset,
            mechanism: c.mechanism,
            labeled_ratio: c.labeled_ratio,
            estimator: c.estimator,
            prior_multiplier: c.prior_multiplier,
            repetition: c.repetition,
            seed: r.seed,
            prior: r.prior,
            roc_auc: r.roc_auc,
            pr_auc: r.pr_auc,
            r_precision: r.r_precision,
            clamp_rate: r.clamp_rate,
            wall_time_s: r.wall_time_s,
            error: r.error.as_deref(),
        })?;
    }
    wtr.flush()?;
    Ok(())
}

/// Write `summary.csv`, `summary.json`, `summary.md` and `runs.csv` into `dir`.
pub fn emit_report(dir: &Path, records: &[RunRecord], summary: &Summary) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    summary.write_csv(std::fs::File::create(dir.join("summary.csv"))?)?;
    std::fs::write(dir.join("summary.json"), summary.to_json()?)?;
    std::fs::write(dir.join("summary.md"), summary.to_markdown())?;
    write_records_csv(records, std::fs::File::create(dir.join("runs.csv"))?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::grid::RunCoord;

    fn record(dataset_index: usize, rep: usize, auc: f64) -> RunRecord {
        RunRecord {
            coord: RunCoord {
                dataset_index,
                dataset: format!("d{dataset_index}"),
                mechanism: Mechanism::Scar,
                labeled_ratio: 0.5,
                estimator: Estimator::Ifpu,
                prior_multiplier: 1.0,
                repetition: rep,
            },
            seed: 0,
            prior: 0.1,
            roc_auc: Some(auc),
            pr_auc: Some(auc),
            r_precision: Some(auc),
            clamp_rate: Some(0.0),
            wall_time_s: 0.0,
            error: None,
        }
    }

    #[test]
    fn per_dataset_then_macro() {
        // d0 has three runs, d1 one; each dataset still weighs equally.
        let recs = vec![record(0, 0, 0.3), record(0, 1, 0.4), record(0, 2, 0.5), record(1, 0, 0.6)];
        let s = aggregate(&recs);
        let r = s.get(Estimator::Ifpu, Mechanism::Scar, 0.5, 1.0, MetricName::RocAuc).unwrap();
        assert!((r.mean - 0.5).abs() < 1e-12);
        assert!((r.std - 0.1).abs() < 1e-12);
        assert_eq!((r.datasets, r.runs), (2, 4));
    }

    #[test]
    fn failed_runs_are_excluded() {
        let mut bad = record(1, 0, 0.0);
        bad.roc_auc = None;
        bad.error = Some("boom".into());
        let s = aggregate(&[record(0, 0, 0.7), bad]);
        assert_eq!(s.failed_runs, 1);
        assert_eq!(s.rows[0].datasets, 1);
        assert_eq!(s.rows[0].mean, 0.7);
        assert!(s.to_markdown().contains("1 run(s) failed"));
    }

    #[test]
    fn markdown_has_ratio_columns() {
        let s = aggregate(&[record(0, 0, 0.25)]);
        let md = s.to_markdown();
        assert!(md.contains("| Method | P50 |"), "{md}");
        assert!(md.contains("| iFPU | 0.250 ± 0.000 |"), "{md}");
    }
}
