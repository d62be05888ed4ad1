//! Pointwise surrogate losses and their derivatives.
//!
//! Losses are written as functions of the scorer's probability output `p` and
//! a target label. Derivatives are with respect to `p`; the chain rule through
//! the output squashing belongs to the model.

use serde::{Deserialize, Serialize};

use crate::data::Label;

pub const DEFAULT_CLAMP_EPS: f64 = 1e-7;
pub const DEFAULT_GAMMA: f64 = 3.0;

/// `1 / (1 + exp(z))` for a margin `z = y * g(x)`.
pub fn sigmoid_loss(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Logistic squashing `1 / (1 + exp(-z))`.
pub fn sigmoid(z: f64) -> f64 {
    sigmoid_loss(-z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalParams {
    pub gamma: f64,
    pub clamp_eps: f64,
}

impl Default for FocalParams {
    fn default() -> Self {
        FocalParams {
            gamma: DEFAULT_GAMMA,
            clamp_eps: DEFAULT_CLAMP_EPS,
        }
    }
}

impl FocalParams {
    pub fn with_gamma(gamma: f64) -> Self {
        FocalParams {
            gamma,
            ..FocalParams::default()
        }
    }

    pub fn clamp(&self, p: f64) -> f64 {
        p.clamp(self.clamp_eps, 1.0 - self.clamp_eps)
    }
}

/// Composite focal loss: `-(1-p)^γ log p` for positives and
/// `-p^γ log(1-p)` for negatives, on the clamped probability.
pub fn focal_pointwise(p: f64, y: Label, params: &FocalParams) -> f64 {
    let p = params.clamp(p);
    let g = params.gamma;
    match y {
        Label::Positive => -(1.0 - p).powf(g) * p.ln(),
        Label::Negative => -p.powf(g) * (1.0 - p).ln(),
    }
}

/// Derivative of [`focal_pointwise`] in `p`, evaluated at the clamped point.
pub fn focal_grad(p: f64, y: Label, params: &FocalParams) -> f64 {
    let p = params.clamp(p);
    let g = params.gamma;
    match y {
        Label::Positive => {
            let q = 1.0 - p;
            let focus = if g == 0.0 { 0.0 } else { g * q.powf(g - 1.0) * p.ln() };
            focus - q.powf(g) / p
        }
        Label::Negative => {
            let q = 1.0 - p;
            let focus = if g == 0.0 { 0.0 } else { -g * p.powf(g - 1.0) * q.ln() };
            focus + p.powf(g) / q
        }
    }
}

/// Binary cross-entropy on the clamped probability.
pub fn cross_entropy(p: f64, y: Label, clamp_eps: f64) -> f64 {
    let p = p.clamp(clamp_eps, 1.0 - clamp_eps);
    match y {
        Label::Positive => -p.ln(),
        Label::Negative => -(1.0 - p).ln(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LossKind {
    /// Symmetric sigmoid loss. With `p = sigmoid(z)` it equals `1 - p` for
    /// positives and `p` for negatives.
    Sigmoid,
    /// Cross-entropy, clamped at [`DEFAULT_CLAMP_EPS`].
    Logistic,
    Focal(FocalParams),
}

impl LossKind {
    pub fn focal(gamma: f64) -> Self {
        LossKind::Focal(FocalParams::with_gamma(gamma))
    }

    pub fn value(&self, p: f64, y: Label) -> f64 {
        match self {
            LossKind::Sigmoid => match y {
                Label::Positive => 1.0 - p,
                Label::Negative => p,
            },
            LossKind::Logistic => cross_entropy(p, y, DEFAULT_CLAMP_EPS),
            LossKind::Focal(fp) => focal_pointwise(p, y, fp),
        }
    }

    pub fn grad(&self, p: f64, y: Label) -> f64 {
        match self {
            LossKind::Sigmoid => match y {
                Label::Positive => -1.0,
                Label::Negative => 1.0,
            },
            LossKind::Logistic => focal_grad(p, y, &FocalParams::with_gamma(0.0)),
            LossKind::Focal(fp) => focal_grad(p, y, fp),
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            LossKind::Focal(fp) => Some(fp.gamma),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LossKind::Sigmoid => "sigmoid",
            LossKind::Logistic => "logistic",
            LossKind::Focal(_) => "focal",
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const POS: Label = Label::Positive;
    const NEG: Label = Label::Negative;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn sigmoid_loss_values() {
        assert_eq!(sigmoid_loss(0.0), 0.5);
        assert!(sigmoid_loss(800.0) == 0.0);
        assert!(close(sigmoid_loss(-800.0), 1.0, 0.0));
        // 1 / (1 + e)
        assert!(close(sigmoid_loss(1.0), 0.268_941_421_369_995, 1e-12));
    }

    #[test]
    fn focal_values() {
        let ln2 = std::f64::consts::LN_2;
        assert!(close(focal_pointwise(0.5, POS, &FocalParams::with_gamma(0.0)), ln2, 1e-15));
        assert!(close(focal_pointwise(0.5, POS, &FocalParams::with_gamma(2.0)), 0.25 * ln2, 1e-15));
        // 0.9^3 * -ln(0.1)
        let expected = 0.729 * 10f64.ln();
        assert!(close(focal_pointwise(0.9, NEG, &FocalParams::with_gamma(3.0)), expected, 1e-12));
        assert!(close(expected, 1.6786, 1e-4));
        for g in [0.0, 1.0, 3.0] {
            let v = focal_pointwise(1.0, POS, &FocalParams::with_gamma(g));
            assert!(v >= 0.0 && v < 1e-6);
        }
    }

    #[test]
    fn cross_entropy_gradients_at_half() {
        let fp = FocalParams::with_gamma(0.0);
        assert!(close(focal_grad(0.5, POS, &fp), -2.0, 1e-12));
        assert!(close(focal_grad(0.5, NEG, &fp), 2.0, 1e-12));
    }

    fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn focal_grad_matches_finite_differences_on_grid() {
        for gamma in [0.0, 1.0, 2.0, 3.0, 5.0] {
            let fp = FocalParams::with_gamma(gamma);
            for k in 1..=19 {
                let p = k as f64 * 0.05;
                for y in [POS, NEG] {
                    let analytic = focal_grad(p, y, &fp);
                    let numeric = central_difference(|q| focal_pointwise(q, y, &fp), p, 1e-6);
                    let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
                    assert!(rel < 1e-6, "gamma {gamma} p {p} y {y:?}: {analytic} vs {numeric}");
                }
            }
        }
        let fp = FocalParams::with_gamma(2.0);
        let numeric = central_difference(|q| focal_pointwise(q, POS, &fp), 0.7, 1e-6);
        assert!((focal_grad(0.7, POS, &fp) - numeric).abs() / numeric.abs() < 1e-6);
    }

    #[test]
    fn loss_kind_grad_matches_value() {
        for kind in [LossKind::Sigmoid, LossKind::Logistic, LossKind::focal(3.0)] {
            for y in [POS, NEG] {
                let p = 0.37;
                let numeric = central_difference(|q| kind.value(q, y), p, 1e-6);
                assert!((kind.grad(p, y) - numeric).abs() < 1e-6 * numeric.abs().max(1.0));
            }
        }
    }

    proptest! {
        #[test]
        fn focal_reduces_to_cross_entropy(p in 0.0f64..=1.0, pos in any::<bool>()) {
            let y = if pos { POS } else { NEG };
            let fl = focal_pointwise(p, y, &FocalParams::with_gamma(0.0));
            prop_assert!((fl - cross_entropy(p, y, DEFAULT_CLAMP_EPS)).abs() <= 1e-12);
            prop_assert!(fl >= 0.0);
        }

        #[test]
        fn focal_non_increasing_in_gamma_for_confident_positives(p in 0.5f64..1.0, g in 0.0f64..6.0, dg in 0.0f64..3.0) {
            let fp = |gamma| FocalParams::with_gamma(gamma);
            prop_assert!(focal_pointwise(p, POS, &fp(g + dg)) <= focal_pointwise(p, POS, &fp(g)));
        }

        #[test]
        fn sigmoid_loss_symmetry(z in -40.0f64..40.0) {
            prop_assert!((sigmoid_loss(z) + sigmoid_loss(-z) - 1.0).abs() <= 1e-15);
        }

        #[test]
        fn sigmoid_loss_kind_matches_margin_form(z in -30.0f64..30.0) {
            let p = sigmoid(z);
            prop_assert!((LossKind::Sigmoid.value(p, POS) - sigmoid_loss(z)).abs() <= 1e-15);
            prop_assert!((LossKind::Sigmoid.value(p, NEG) - sigmoid_loss(-z)).abs() <= 1e-15);
        }
    }
}
