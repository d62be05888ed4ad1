use serde::{Deserialize, Serialize};

use super::ScorerParams;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First and second moment estimates, flattened in [`ScorerParams::values`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &ScorerParams) -> Self {
        let n = params.num_params();
        AdamState {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    params: &mut ScorerParams,
    grad: &ScorerParams,
    state: &mut AdamState,
    cfg: &AdamConfig,
) -> Result<()> {
    if !params.same_shape(grad) {
        return Err(Error::DimensionMismatch {
            expected: params.num_params(),
            found: grad.num_params(),
        });
    }
    if state.m.len() != params.num_params() || state.v.len() != params.num_params() {
        return Err(Error::DimensionMismatch {
            expected: params.num_params(),
            found: state.m.len(),
        });
    }
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    for (((w, &g), m), v) in params
        .values_mut()
        .zip(grad.values())
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *w -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_layers;

    fn filled(params: &ScorerParams, f: impl Fn(usize) -> f64) -> ScorerParams {
        let mut g = params.zeros_like();
        g.values_mut().enumerate().for_each(|(i, v)| *v = f(i));
        g
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = init_layers(3, &[4], 1).unwrap();
        let before = p.clone();
        let mut st = AdamState::new(&p);
        let g = p.zeros_like();
        for _ in 0..3 {
            adam_step(&mut p, &g, &mut st, &AdamConfig::default()).unwrap();
        }
        assert_eq!(p, before);
    }

    #[test]
    fn degenerate_moments_give_sign_step() {
        let mut p = init_layers(2, &[3], 1).unwrap();
        let before: Vec<f64> = p.values().copied().collect();
        let g = filled(&p, |i| (i as f64 - 4.0) * 0.3);
        let cfg = AdamConfig {
            learning_rate: 0.01,
            beta1: 0.0,
            beta2: 0.0,
            eps: 1e-8,
        };
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        for ((after, b), gi) in p.values().zip(&before).zip(g.values()) {
            let expected = b - 0.01 * gi / (gi.abs() + 1e-8);
            assert_eq!(*after, expected);
        }
    }

    #[test]
    fn two_step_recursion() {
        let mut p = init_layers(1, &[1], 5).unwrap();
        let w0: Vec<f64> = p.values().copied().collect();
        let g = filled(&p, |i| 0.5 + i as f64);
        let cfg = AdamConfig::default();
        let mut st = AdamState::new(&p);
        adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        let (b1, b2, lr, eps) = (0.9f64, 0.999f64, 1e-3, 1e-8);
        for (i, (after, w)) in p.values().zip(&w0).enumerate() {
            let gi = 0.5 + i as f64;
            let m1 = (1.0 - b1) * gi;
            let v1 = (1.0 - b2) * gi * gi;
            let s1 = lr * (m1 / (1.0 - b1)) / ((v1 / (1.0 - b2)).sqrt() + eps);
            let m2 = b1 * m1 + (1.0 - b1) * gi;
            let v2 = b2 * v1 + (1.0 - b2) * gi * gi;
            let s2 = lr * (m2 / (1.0 - b1 * b1)) / ((v2 / (1.0 - b2 * b2)).sqrt() + eps);
            assert!((after - (w - s1 - s2)).abs() < 1e-12);
        }
        assert_eq!(st.step, 2);
    }

    #[test]
    fn shape_mismatch() {
        let mut p = init_layers(2, &[3], 1).unwrap();
        let q = init_layers(2, &[4], 1).unwrap();
        let mut st = AdamState::new(&p);
        assert!(adam_step(&mut p, &q, &mut st, &AdamConfig::default()).is_err());
    }
}
