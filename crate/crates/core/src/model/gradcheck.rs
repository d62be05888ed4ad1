//! Central-difference verification of [`ScorerParams::backward`].

use ndarray::{Array1, Array2, Axis};
use rand::{Rng as _, RngCore};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{init_layers, ScorerParams};
use crate::data::ClassPrior;
use crate::error::{Error, Result};
use crate::loss::{FocalParams, LossKind};
use crate::risk::{Branch, Estimator};
use crate::seed::{self, Rng};

pub const FD_STEP: f64 = 1e-6;
pub const PASS_THRESHOLD: f64 = 1e-5;
/// Denominator floor of the relative error, so near-zero gradients are judged
/// by absolute error.
pub const REL_FLOOR: f64 = 1e-4;
const MAX_PARAMS: usize = 500;
const GAMMAS: [f64; 4] = [0.0, 1.0, 3.0, 5.0];

/// What to draw per trial; `None` fields are drawn at random.
#[derive(Debug, Clone, Default)]
pub struct GradCheckSpec {
    pub estimator: Option<Estimator>,
    pub loss: Option<LossKind>,
    pub branch: Option<Branch>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub trials: usize,
    pub params_per_trial: usize,
    pub max_rel_error: f64,
    pub ascent_trials: usize,
    pub descent_trials: usize,
    pub passed: bool,
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

fn random_loss(estimator: Estimator, rng: &mut Rng) -> LossKind {
    let gamma = GAMMAS[rng.random_range(0..GAMMAS.len())];
    match (estimator, rng.random_range(0..3)) {
        (Estimator::Ifpu, _) | (_, 2) => LossKind::Focal(FocalParams::with_gamma(gamma)),
        (_, 0) => LossKind::Sigmoid,
        _ => LossKind::Logistic,
    }
}

fn normal_matrix(rows: usize, cols: usize, scale: f64, rng: &mut Rng) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || scale * Distribution::<f64>::sample(&StandardNormal, rng))
}

struct Draw {
    params: ScorerParams,
    batch_p: Array2<f64>,
    batch_u: Array2<f64>,
    estimator: Estimator,
    loss: LossKind,
    prior: ClassPrior,
}

/// Draw a (network, batch) pair whose branch matches `want`, away from the
/// clamp boundary so finite differences never straddle it.
fn draw(dims: &[usize], spec: &GradCheckSpec, rng: &mut Rng) -> Result<Draw> {
    let hidden = &dims[1..dims.len() - 1];
    let d = dims[0];
    for attempt in 0..200 {
        let estimator = spec
            .estimator
            .unwrap_or_else(|| Estimator::ALL[rng.random_range(0..3)]);
        let want = spec.branch.unwrap_or(if estimator.is_non_negative() && rng.random_bool(0.5) {
            Branch::Ascent
        } else {
            Branch::Descent
        });
        if want == Branch::Ascent && !estimator.is_non_negative() {
            return Err(Error::Config(format!("{estimator} has no ascent branch")));
        }
        let loss = spec.loss.unwrap_or_else(|| random_loss(estimator, rng));
        estimator.check_loss(&loss)?;
        let mut params = init_layers(d, hidden, rng.next_u64())?;
        for l in params.layers_mut() {
            l.bias = Array1::from_shape_simple_fn(l.bias.len(), || 0.1 * Distribution::<f64>::sample(&StandardNormal, rng));
        }
        let k = rng.random_range(2..6);
        let scale = 1.0 + attempt as f64 * 0.1;
        let (batch_p, batch_u, pi) = if want == Branch::Ascent {
            // Highest-scored rows become the labeled positives, so the
            // corrected negative risk is driven below zero.
            let x = normal_matrix(3 * k, d, scale, rng);
            let s = params.forward(&x)?;
            let mut order: Vec<usize> = (0..x.nrows()).collect();
            order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
            (
                x.select(Axis(0), &order[..k]),
                x.select(Axis(0), &order[k..]),
                rng.random_range(0.85..0.98),
            )
        } else {
            (
                normal_matrix(k, d, scale, rng),
                normal_matrix(k + 2, d, scale, rng),
                rng.random_range(0.05..0.6),
            )
        };
        let prior = ClassPrior::new(pi)?;
        let sp = params.forward(&batch_p)?.to_vec();
        let su = params.forward(&batch_u)?.to_vec();
        let r = estimator.evaluate(&sp, &su, prior, &loss)?;
        let margin = r.negative_risk();
        let branch_ok = match want {
            Branch::Ascent => margin < -1e-3,
            Branch::Descent => !estimator.is_non_negative() || margin > 1e-3,
        };
        // Keep probabilities inside the clamp interval.
        let inside = sp.iter().chain(&su).all(|&p| p > 1e-5 && p < 1.0 - 1e-5);
        if branch_ok && inside {
            return Ok(Draw {
                params,
                batch_p,
                batch_u,
                estimator,
                loss,
                prior,
            });
        }
    }
    Err(Error::Config("could not draw a configuration for the requested branch".into()))
}

/// Max relative error between analytic and central-difference gradients over
/// `trials` random draws on a network with layer widths `dims`.
pub fn grad_check(dims: &[usize], spec: &GradCheckSpec, trials: usize) -> Result<GradCheckReport> {
    if dims.len() < 2 || *dims.last().unwrap() != 1 {
        return Err(Error::Config("dims must end with an output width of 1".into()));
    }
    let mut rng = seed::rng(spec.seed);
    let mut report = GradCheckReport {
        trials,
        params_per_trial: 0,
        max_rel_error: 0.0,
        ascent_trials: 0,
        descent_trials: 0,
        passed: true,
    };
    for _ in 0..trials {
        let dr = draw(dims, spec, &mut rng)?;
        let n = dr.params.num_params();
        if n > MAX_PARAMS {
            return Err(Error::Config(format!("{n} parameters; finite differences capped at {MAX_PARAMS}")));
        }
        report.params_per_trial = n;
        let g = dr
            .params
            .backward(&dr.batch_p, &dr.batch_u, dr.estimator, &dr.loss, dr.prior)?;
        match g.branch {
            Branch::Ascent => report.ascent_trials += 1,
            Branch::Descent => report.descent_trials += 1,
        }
        let analytic: Vec<f64> = g.grad.values().copied().collect();
        let objective = |p: &ScorerParams| {
            p.batch_objective(&dr.batch_p, &dr.batch_u, dr.estimator, &dr.loss, dr.prior, g.branch)
        };
        let mut probe = dr.params.clone();
        for (i, &a) in analytic.iter().enumerate() {
            let orig = *probe.values().nth(i).unwrap();
            *probe.values_mut().nth(i).unwrap() = orig + FD_STEP;
            let up = objective(&probe)?;
            *probe.values_mut().nth(i).unwrap() = orig - FD_STEP;
            let down = objective(&probe)?;
            *probe.values_mut().nth(i).unwrap() = orig;
            let numeric = (up - down) / (2.0 * FD_STEP);
            report.max_rel_error = report.max_rel_error.max(relative_error(a, numeric));
        }
    }
    report.passed = report.max_rel_error < PASS_THRESHOLD;
    Ok(report)
}
