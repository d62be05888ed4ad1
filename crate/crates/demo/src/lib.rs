//! WebAssembly bindings for the browser demo. Every export returns a JSON
//! string; the plain-Rust functions underneath are what the tests exercise.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use pufocal::data::{self, GaussianMixture, Label, LabeledDataset, Mechanism, SarOptions, Standardizer};
use pufocal::loss::{cross_entropy, focal_pointwise, FocalParams};
use pufocal::metrics;
use pufocal::model::{train, TrainConfig};
use pufocal::risk::Estimator;

const GRID: usize = 48;

/// Two-dimensional overlap mixture shared by the labeling and training views.
fn mixture(n: usize, seed: u64) -> pufocal::Result<LabeledDataset> {
    let g = GaussianMixture {
        n,
        d: 2,
        positive_ratio: 0.15,
        separation: 3.5,
        overlap: 0.3,
        overlap_offset: 0.8,
        overlap_std: 0.8,
    };
    data::synth_gaussian(&g, seed)
}

/// Focal loss against `p` for both labels, next to cross-entropy.
pub fn focal_curve_value(gamma: f64, points: usize) -> pufocal::Result<Value> {
    if !(gamma >= 0.0) || points < 2 {
        return Err(pufocal::Error::OutOfRange(format!("gamma {gamma}, points {points}")));
    }
    let params = FocalParams::with_gamma(gamma);
    let ps: Vec<f64> = (0..points)
        .map(|i| 0.005 + 0.99 * i as f64 / (points - 1) as f64)
        .collect();
    let curve = |f: &dyn Fn(f64) -> f64| ps.iter().map(|&p| f(p)).collect::<Vec<f64>>();
    Ok(json!({
        "gamma": gamma,
        "p": ps,
        "focal_pos": curve(&|p| focal_pointwise(p, Label::Positive, &params)),
        "focal_neg": curve(&|p| focal_pointwise(p, Label::Negative, &params)),
        "ce_pos": curve(&|p| cross_entropy(p, Label::Positive, params.clamp_eps)),
        "ce_neg": curve(&|p| cross_entropy(p, Label::Negative, params.clamp_eps)),
    }))
}

fn points_json(ds: &LabeledDataset, labeled: &[bool]) -> Value {
    let x = ds.features();
    let pts: Vec<Value> = (0..ds.n())
        .map(|i| json!([x[[i, 0]], x[[i, 1]], ds.labels()[i].is_positive(), labeled[i]]))
        .collect();
    Value::Array(pts)
}

/// Sample the 2-D mixture and hide labels with SCAR or SAR.
pub fn label_points_value(mechanism: &str, ratio: f64, seed: u64) -> pufocal::Result<Value> {
    let mechanism: Mechanism = mechanism.parse()?;
    let ds = mixture(400, seed)?;
    let pu = data::label(&ds, mechanism, ratio, seed ^ 0x5eed, &SarOptions::default())?;
    Ok(json!({
        "mechanism": mechanism.to_string(),
        "labeled": pu.labeled().len(),
        "positives": ds.n_positive(),
        "points": points_json(&ds, &pu.is_labeled()),
    }))
}

/// Train on the 2-D mixture and score a grid over its bounding box. Metrics
/// are in-sample against the hidden labels.
pub fn train_value(
    estimator: &str,
    mechanism: &str,
    ratio: f64,
    prior_multiplier: f64,
    epochs: usize,
    seed: u64,
) -> pufocal::Result<Value> {
    let estimator: Estimator = estimator.parse()?;
    let mechanism: Mechanism = mechanism.parse()?;
    let raw = mixture(400, seed)?;
    let scaler = Standardizer::fit(raw.features());
    let ds = LabeledDataset::new(raw.name(), scaler.transform(raw.features())?, raw.labels().to_vec())?;
    let pu = data::label(&ds, mechanism, ratio, seed ^ 0x5eed, &SarOptions::default())?;
    let prior = ds.prior().scaled(prior_multiplier, 1e-3);
    let cfg = TrainConfig {
        max_epochs: epochs,
        batch_size: 64,
        hidden: 16,
        seed,
        ..TrainConfig::new(estimator, prior)
    };
    let (params, trace) = train(&pu, &cfg)?;
    let scores = params.forward(ds.features())?;
    let m = metrics::evaluate(scores.as_slice().unwrap_or_default(), ds.labels())?;

    let x = raw.features();
    let lo_hi = |j: usize| {
        let col = x.column(j);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min) - 0.5;
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max) + 0.5;
        (lo, hi)
    };
    let ((x0, x1), (y0, y1)) = (lo_hi(0), lo_hi(1));
    let grid = ndarray::Array2::from_shape_fn((GRID * GRID, 2), |(k, j)| {
        let (r, c) = (k / GRID, k % GRID);
        if j == 0 {
            x0 + (x1 - x0) * (c as f64 + 0.5) / GRID as f64
        } else {
            y1 - (y1 - y0) * (r as f64 + 0.5) / GRID as f64
        }
    });
    let grid_scores = params.forward(&scaler.transform(&grid)?)?;

    let per_epoch: Vec<f64> = trace
        .records
        .chunks(trace.batches_per_epoch)
        .map(|c| c.iter().map(|r| r.risk).sum::<f64>() / c.len() as f64)
        .collect();
    Ok(json!({
        "estimator": estimator.to_string(),
        "prior": prior.positive(),
        "roc_auc": m.roc_auc,
        "pr_auc": m.pr_auc,
        "r_precision": m.r_precision,
        "clamp_rate": trace.clamp_rate(),
        "risk_per_epoch": per_epoch,
        "bounds": [x0, x1, y0, y1],
        "grid_size": GRID,
        "grid": grid_scores.to_vec(),
        "points": points_json(&raw, &pu.is_labeled()),
    }))
}

fn to_js(v: pufocal::Result<Value>) -> Result<String, JsValue> {
    v.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn focal_curve(gamma: f64, points: usize) -> Result<String, JsValue> {
    to_js(focal_curve_value(gamma, points))
}

#[wasm_bindgen]
pub fn label_points(mechanism: &str, ratio: f64, seed: u32) -> Result<String, JsValue> {
    to_js(label_points_value(mechanism, ratio, u64::from(seed)))
}

#[wasm_bindgen]
pub fn train_model(
    estimator: &str,
    mechanism: &str,
    ratio: f64,
    prior_multiplier: f64,
    epochs: usize,
    seed: u32,
) -> Result<String, JsValue> {
    to_js(train_value(estimator, mechanism, ratio, prior_multiplier, epochs, u64::from(seed)))
}
