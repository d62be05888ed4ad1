//! Empirical risk estimators for PN and PU data.
//!
//! All estimators consume scorer outputs (probabilities in `[0, 1]`) rather
//! than raw examples, so they can back any trainer. With `L` the labeled
//! positives and `U` the unlabeled set, the three PU terms are
//!
//! - `pos_term       = pi_p * mean_{L} loss(p, +1)`
//! - `neg_correction = pi_p * mean_{L} loss(p, -1)`
//! - `unlabeled_term =        mean_{U} loss(p, -1)`
//!
//! The unbiased estimator sums `pos_term - neg_correction + unlabeled_term`.
//! The non-negative estimators replace the last two with
//! `max(0, unlabeled_term - neg_correction)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{ClassPrior, Label};
use crate::error::{Error, Result};
use crate::loss::{FocalParams, LossKind};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskBreakdown {
    pub pos_term: f64,
    pub neg_correction: f64,
    pub unlabeled_term: f64,
    pub total: f64,
    pub clamped: bool,
}

impl RiskBreakdown {
    /// `unlabeled_term - neg_correction`, the estimate of the negative-class risk.
    pub fn negative_risk(&self) -> f64 {
        self.unlabeled_term - self.neg_correction
    }

    fn unbiased(pos: f64, neg: f64, unl: f64) -> Self {
        RiskBreakdown {
            pos_term: pos,
            neg_correction: neg,
            unlabeled_term: unl,
            total: pos - neg + unl,
            clamped: false,
        }
    }

    fn non_negative(pos: f64, neg: f64, unl: f64) -> Self {
        let negative_risk = unl - neg;
        RiskBreakdown {
            pos_term: pos,
            neg_correction: neg,
            unlabeled_term: unl,
            total: pos + negative_risk.max(0.0),
            clamped: negative_risk < 0.0,
        }
    }
}

/// The PU risk estimators available to the trainer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Estimator {
    #[serde(rename = "uPU")]
    Upu,
    #[serde(rename = "nnPU")]
    Nnpu,
    #[serde(rename = "iFPU")]
    Ifpu,
}

impl Estimator {
    pub const ALL: [Estimator; 3] = [Estimator::Upu, Estimator::Nnpu, Estimator::Ifpu];

    pub fn is_non_negative(self) -> bool {
        !matches!(self, Estimator::Upu)
    }

    /// Sigmoid loss for the baselines, focal loss with `gamma = 3` for iFPU.
    pub fn default_loss(self) -> LossKind {
        match self {
            Estimator::Upu | Estimator::Nnpu => LossKind::Sigmoid,
            Estimator::Ifpu => LossKind::Focal(FocalParams::default()),
        }
    }

    pub fn check_loss(self, loss: &LossKind) -> Result<()> {
        if self == Estimator::Ifpu && !matches!(loss, LossKind::Focal(_)) {
            return Err(Error::Config(format!(
                "iFPU requires the focal loss, got {}",
                loss.name()
            )));
        }
        Ok(())
    }

    pub fn evaluate(
        self,
        scores_p: &[f64],
        scores_u: &[f64],
        prior: ClassPrior,
        loss: &LossKind,
    ) -> Result<RiskBreakdown> {
        self.check_loss(loss)?;
        match self {
            Estimator::Upu => upu_risk(scores_p, scores_u, prior, loss),
            Estimator::Nnpu | Estimator::Ifpu => nnpu_risk(scores_p, scores_u, prior, loss),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Estimator::Upu => "uPU",
            Estimator::Nnpu => "nnPU",
            Estimator::Ifpu => "iFPU",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Estimator> {
        Estimator::ALL.get(code as usize).copied()
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "upu" => Ok(Estimator::Upu),
            "nnpu" => Ok(Estimator::Nnpu),
            "ifpu" => Ok(Estimator::Ifpu),
            other => Err(Error::Config(format!("unknown estimator `{other}`"))),
        }
    }
}

fn check_scores(scores: &[f64], what: &'static str) -> Result<()> {
    if scores.is_empty() {
        return Err(Error::Empty(what));
    }
    if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
        return Err(Error::OutOfRange(format!("{what} score {s} not in [0, 1]")));
    }
    Ok(())
}

fn mean_loss(scores: &[f64], y: Label, loss: &LossKind) -> f64 {
    scores.iter().map(|&p| loss.value(p, y)).sum::<f64>() / scores.len() as f64
}

fn pu_terms(scores_p: &[f64], scores_u: &[f64], prior: ClassPrior, loss: &LossKind) -> Result<(f64, f64, f64)> {
    check_scores(scores_p, "labeled positive")?;
    check_scores(scores_u, "unlabeled")?;
    let pi = prior.positive();
    Ok((
        pi * mean_loss(scores_p, Label::Positive, loss),
        pi * mean_loss(scores_p, Label::Negative, loss),
        mean_loss(scores_u, Label::Negative, loss),
    ))
}

/// Fully supervised risk. `neg_correction` carries the negative-class term
/// `(1 - pi_p) * mean_N loss(p, -1)` and `total = pos_term + neg_correction`.
pub fn pn_risk(scores_p: &[f64], scores_n: &[f64], prior: ClassPrior, loss: &LossKind) -> Result<RiskBreakdown> {
    check_scores(scores_p, "positive")?;
    check_scores(scores_n, "negative")?;
    let pos = prior.positive() * mean_loss(scores_p, Label::Positive, loss);
    let neg = prior.negative() * mean_loss(scores_n, Label::Negative, loss);
    Ok(RiskBreakdown {
        pos_term: pos,
        neg_correction: neg,
        unlabeled_term: 0.0,
        total: pos + neg,
        clamped: false,
    })
}

/// Unbiased PU risk; may be negative.
pub fn upu_risk(scores_p: &[f64], scores_u: &[f64], prior: ClassPrior, loss: &LossKind) -> Result<RiskBreakdown> {
    let (pos, neg, unl) = pu_terms(scores_p, scores_u, prior, loss)?;
    Ok(RiskBreakdown::unbiased(pos, neg, unl))
}

/// Non-negative PU risk.
pub fn nnpu_risk(scores_p: &[f64], scores_u: &[f64], prior: ClassPrior, loss: &LossKind) -> Result<RiskBreakdown> {
    let (pos, neg, unl) = pu_terms(scores_p, scores_u, prior, loss)?;
    Ok(RiskBreakdown::non_negative(pos, neg, unl))
}

/// Focused PU risk without the non-negativity correction.
pub fn ifpu_risk_unclipped(
    scores_p: &[f64],
    scores_u: &[f64],
    prior: ClassPrior,
    focal: &FocalParams,
) -> Result<RiskBreakdown> {
    upu_risk(scores_p, scores_u, prior, &LossKind::Focal(*focal))
}

/// Focused non-negative PU risk.
pub fn ifpu_risk(scores_p: &[f64], scores_u: &[f64], prior: ClassPrior, focal: &FocalParams) -> Result<RiskBreakdown> {
    nnpu_risk(scores_p, scores_u, prior, &LossKind::Focal(*focal))
}

/// Which update Algorithm-style training applies to a mini-batch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    /// Minimize the reported risk.
    Descent,
    /// Negative-risk estimate fell below zero: step up along its gradient.
    Ascent,
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Branch::Descent => "descent",
            Branch::Ascent => "ascent",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskGradient {
    /// Derivative of the branch objective with respect to each labeled-positive score.
    pub wrt_p: Vec<f64>,
    /// Derivative of the branch objective with respect to each unlabeled score.
    pub wrt_u: Vec<f64>,
    pub branch: Branch,
    pub breakdown: RiskBreakdown,
}

impl RiskGradient {
    /// The objective the gradient belongs to: the full risk for
    /// [`Branch::Descent`], `unlabeled_term - neg_correction` for [`Branch::Ascent`].
    pub fn objective(&self) -> f64 {
        match self.branch {
            Branch::Descent => self.breakdown.total,
            Branch::Ascent => self.breakdown.negative_risk(),
        }
    }
}

/// Gradient of the estimator with respect to the scores.
///
/// For non-negative estimators whose negative-risk estimate is below zero the
/// returned gradient is that of `unlabeled_term - neg_correction` and the
/// branch is [`Branch::Ascent`]; the caller steps along it, not against it.
pub fn risk_gradient(
    estimator: Estimator,
    scores_p: &[f64],
    scores_u: &[f64],
    prior: ClassPrior,
    loss: &LossKind,
) -> Result<RiskGradient> {
    let breakdown = estimator.evaluate(scores_p, scores_u, prior, loss)?;
    let branch = if estimator.is_non_negative() && breakdown.clamped {
        Branch::Ascent
    } else {
        Branch::Descent
    };
    let scale_p = prior.positive() / scores_p.len() as f64;
    let scale_u = 1.0 / scores_u.len() as f64;
    let wrt_p = scores_p
        .iter()
        .map(|&p| {
            let neg = scale_p * loss.grad(p, Label::Negative);
            match branch {
                Branch::Descent => scale_p * loss.grad(p, Label::Positive) - neg,
                Branch::Ascent => -neg,
            }
        })
        .collect();
    let wrt_u = scores_u.iter().map(|&p| scale_u * loss.grad(p, Label::Negative)).collect();
    Ok(RiskGradient {
        wrt_p,
        wrt_u,
        branch,
        breakdown,
    })
}
