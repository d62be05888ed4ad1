//! The scorer `g: R^d -> (0, 1)`: a five-layer fully connected network with
//! ReLU hidden units and a logistic output, with hand-derived backpropagation.

mod adam;
mod gradcheck;
mod snapshot;
mod train;

use ndarray::{concatenate, Array1, Array2, ArrayView2, Axis};
use rand_distr::{Distribution, Uniform};

use crate::data::ClassPrior;
use crate::error::{Error, Result};
use crate::loss::{self, LossKind};
use crate::risk::{self, Branch, Estimator, RiskBreakdown};
use crate::seed;

pub use self::adam::{adam_step, AdamConfig, AdamState};
pub use self::gradcheck::{grad_check, GradCheckReport, GradCheckSpec};
pub use self::snapshot::Snapshot;
pub use self::train::{train, TraceRecord, TrainConfig, TrainTrace};

pub const DEFAULT_HIDDEN: usize = 64;
pub const HIDDEN_LAYERS: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    /// `out x in`, row-major.
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Weights and biases of the scorer. Gradients share this shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ScorerParams {
    layers: Vec<Dense>,
}

/// Activations kept from a forward pass for backpropagation.
struct ForwardCache {
    /// Input to each layer (`activations[0]` is the batch).
    activations: Vec<Array2<f64>>,
    probs: Array1<f64>,
}

/// Gradient of one mini-batch objective.
#[derive(Debug, Clone)]
pub struct BatchGradient {
    pub grad: ScorerParams,
    pub breakdown: RiskBreakdown,
    pub branch: Branch,
}

/// Glorot-uniform weights, zero biases. `hidden_dims` are the widths between
/// the input and the single output unit.
pub fn init_layers(d: usize, hidden_dims: &[usize], seed: u64) -> Result<ScorerParams> {
    if d == 0 || hidden_dims.contains(&0) {
        return Err(Error::Config("layer widths must be >= 1".into()));
    }
    let mut rng = seed::rng(seed);
    let dims: Vec<usize> = std::iter::once(d).chain(hidden_dims.iter().copied()).chain([1]).collect();
    let layers = dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
            let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
            Dense {
                weights: Array2::from_shape_simple_fn((fan_out, fan_in), || dist.sample(&mut rng)),
                bias: Array1::zeros(fan_out),
            }
        })
        .collect();
    Ok(ScorerParams { layers })
}

/// Five weight layers: `[d, hidden, hidden, hidden, hidden, 1]`.
pub fn init_scorer(d: usize, hidden: usize, seed: u64) -> Result<ScorerParams> {
    init_layers(d, &[hidden; HIDDEN_LAYERS], seed)
}

impl ScorerParams {
    pub fn from_layers(layers: Vec<Dense>) -> Result<ScorerParams> {
        if layers.is_empty() {
            return Err(Error::Empty("layers"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.weights.nrows() {
                return Err(Error::DimensionMismatch {
                    expected: l.weights.nrows(),
                    found: l.bias.len(),
                });
            }
            if i > 0 && layers[i - 1].weights.nrows() != l.weights.ncols() {
                return Err(Error::DimensionMismatch {
                    expected: layers[i - 1].weights.nrows(),
                    found: l.weights.ncols(),
                });
            }
        }
        if layers.last().map(|l| l.weights.nrows()) != Some(1) {
            return Err(Error::Config("output layer must have width 1".into()));
        }
        let params = ScorerParams { layers };
        if params.values().any(|v| !v.is_finite()) {
            return Err(Error::OutOfRange("non-finite parameter".into()));
        }
        Ok(params)
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        std::iter::once(self.input_dim())
            .chain(self.layers.iter().map(|l| l.weights.nrows()))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.ncols()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    /// All parameters, layer by layer: row-major weights, then biases.
    pub fn values(&self) -> impl Iterator<Item = &f64> + '_ {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(l.bias.iter()))
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn zeros_like(&self) -> ScorerParams {
        ScorerParams {
            layers: self
                .layers
                .iter()
                .map(|l| Dense {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.len()),
                })
                .collect(),
        }
    }

    pub fn same_shape(&self, other: &ScorerParams) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.weights.dim() == b.weights.dim() && a.bias.len() == b.bias.len())
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.ncols(),
            });
        }
        Ok(())
    }

    fn forward_cached(&self, x: ArrayView2<f64>) -> ForwardCache {
        let mut activations = Vec::with_capacity(self.layers.len());
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weights.t());
            z += &layer.bias;
            activations.push(a);
            if i < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            a = z;
        }
        let probs = a.column(0).mapv(loss::sigmoid);
        ForwardCache { activations, probs }
    }

    /// Probability of the positive class for every row of `x`.
    pub fn forward(&self, x: &Array2<f64>) -> Result<Array1<f64>> {
        self.check_input(&x.view())?;
        Ok(self.forward_cached(x.view()).probs)
    }

    /// Backpropagate `d objective / d prob` for each row.
    fn backprop(&self, cache: &ForwardCache, dprob: &[f64]) -> ScorerParams {
        let mut grads: Vec<Dense> = Vec::with_capacity(self.layers.len());
        // d/dz of the logistic output is p(1 - p).
        let mut delta = Array2::from_shape_fn((dprob.len(), 1), |(r, _)| {
            let p = cache.probs[r];
            dprob[r] * p * (1.0 - p)
        });
        for (i, layer) in self.layers.iter().enumerate().rev() {
            let input = &cache.activations[i];
            grads.push(Dense {
                weights: delta.t().dot(input),
                bias: delta.sum_axis(Axis(0)),
            });
            if i > 0 {
                let mut upstream = delta.dot(&layer.weights);
                // ReLU gate: the stored activation is positive iff the unit was active.
                upstream.zip_mut_with(input, |g, &a| {
                    if a <= 0.0 {
                        *g = 0.0;
                    }
                });
                delta = upstream;
            }
        }
        grads.reverse();
        ScorerParams { layers: grads }
    }

    /// Gradient of the configured estimator on one (P, U) mini-batch. In the
    /// ascent branch the gradient is that of `unlabeled_term - neg_correction`.
    pub fn backward(
        &self,
        batch_p: &Array2<f64>,
        batch_u: &Array2<f64>,
        estimator: Estimator,
        loss: &LossKind,
        prior: ClassPrior,
    ) -> Result<BatchGradient> {
        if batch_p.nrows() == 0 {
            return Err(Error::Empty("labeled positive batch"));
        }
        if batch_u.nrows() == 0 {
            return Err(Error::Empty("unlabeled batch"));
        }
        self.check_input(&batch_p.view())?;
        self.check_input(&batch_u.view())?;
        let x = concatenate(Axis(0), &[batch_p.view(), batch_u.view()]).expect("same width");
        let cache = self.forward_cached(x.view());
        let n_p = batch_p.nrows();
        let probs = cache.probs.as_slice().expect("contiguous");
        let rg = risk::risk_gradient(estimator, &probs[..n_p], &probs[n_p..], prior, loss)?;
        let dprob: Vec<f64> = rg.wrt_p.iter().chain(&rg.wrt_u).copied().collect();
        Ok(BatchGradient {
            grad: self.backprop(&cache, &dprob),
            breakdown: rg.breakdown,
            branch: rg.branch,
        })
    }

    /// Objective that [`ScorerParams::backward`] differentiates, for a fixed branch.
    pub fn batch_objective(
        &self,
        batch_p: &Array2<f64>,
        batch_u: &Array2<f64>,
        estimator: Estimator,
        loss: &LossKind,
        prior: ClassPrior,
        branch: Branch,
    ) -> Result<f64> {
        let sp = self.forward(batch_p)?.to_vec();
        let su = self.forward(batch_u)?.to_vec();
        let r = estimator.evaluate(&sp, &su, prior, loss)?;
        Ok(match branch {
            Branch::Descent => r.total,
            Branch::Ascent => r.negative_risk(),
        })
    }
}
