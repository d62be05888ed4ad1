//! Gaussian mixtures standing in for the benchmark datasets.
//!
//! Negatives follow `N(0, I)`. Regular positives follow
//! `N(separation * u, I)` where `u` is the unit diagonal direction. An
//! `overlap` fraction of the positives is instead drawn around
//! `overlap_offset * u` with standard deviation `overlap_std`, which places
//! them inside the negative cloud.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Label, LabeledDataset};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub n: usize,
    pub d: usize,
    pub positive_ratio: f64,
    pub separation: f64,
    pub overlap: f64,
    pub overlap_offset: f64,
    pub overlap_std: f64,
}

impl GaussianMixture {
    pub fn new(n: usize, d: usize, positive_ratio: f64) -> Self {
        GaussianMixture {
            n,
            d,
            positive_ratio,
            separation: 3.0,
            overlap: 0.0,
            overlap_offset: 0.0,
            overlap_std: 1.0,
        }
    }

    /// The imbalanced overlap mixture used by the scaled benchmarks:
    /// 2,000 rows, 10 features, 2% positives, a third of them overlapping.
    pub fn overlap_benchmark() -> Self {
        GaussianMixture {
            n: 2000,
            d: 10,
            positive_ratio: 0.02,
            separation: 2.5,
            overlap: 0.3,
            overlap_offset: 1.0,
            overlap_std: 1.0,
        }
    }

    pub fn n_positive(&self) -> usize {
        (self.positive_ratio * self.n as f64).round() as usize
    }

    pub fn n_overlap(&self) -> usize {
        (self.overlap * self.n_positive() as f64).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::Config("synthetic mixture needs d >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::OutOfRange(format!("overlap {} not in [0, 1]", self.overlap)));
        }
        let n_pos = self.n_positive();
        if n_pos == 0 {
            return Err(Error::NoLabeledPositives);
        }
        if n_pos >= self.n {
            return Err(Error::SingleClass);
        }
        Ok(())
    }
}

impl fmt::Display for GaussianMixture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "synth:n={},d={},ratio={},sep={},overlap={},overlap_offset={},overlap_std={}",
            self.n, self.d, self.positive_ratio, self.separation, self.overlap, self.overlap_offset, self.overlap_std
        )
    }
}

impl FromStr for GaussianMixture {
    type Err = Error;

    /// `synth:key=value,...`; keys default to [`GaussianMixture::overlap_benchmark`].
    fn from_str(s: &str) -> Result<Self> {
        let body = s
            .trim()
            .strip_prefix("synth:")
            .ok_or_else(|| Error::Config(format!("`{s}` is not a synth: spec")))?;
        let mut g = GaussianMixture::overlap_benchmark();
        for pair in body.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got `{pair}`")))?;
            fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
                value
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(format!("bad value for `{key}`: `{value}`")))
            }
            match key.trim() {
                "n" => g.n = num(key, value)?,
                "d" => g.d = num(key, value)?,
                "ratio" => g.positive_ratio = num(key, value)?,
                "sep" => g.separation = num(key, value)?,
                "overlap" => g.overlap = num(key, value)?,
                "overlap_offset" => g.overlap_offset = num(key, value)?,
                "overlap_std" => g.overlap_std = num(key, value)?,
                other => return Err(Error::Config(format!("unknown synth key `{other}`"))),
            }
        }
        Ok(g)
    }
}

/// Sample a mixture with exact class counts; rows are shuffled.
pub fn synth_gaussian(cfg: &GaussianMixture, seed: u64) -> Result<LabeledDataset> {
    cfg.validate()?;
    let mut rng = seed::rng(seed);
    let (n, d) = (cfg.n, cfg.d);
    let n_pos = cfg.n_positive();
    let n_overlap = cfg.n_overlap();
    let unit = 1.0 / (d as f64).sqrt();

    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let mut x = Array2::zeros((n, d));
    let mut labels = vec![Label::Negative; n];
    for (k, &row) in order.iter().enumerate() {
        let (center, std) = if k < n_overlap {
            (cfg.overlap_offset * unit, cfg.overlap_std)
        } else if k < n_pos {
            (cfg.separation * unit, 1.0)
        } else {
            (0.0, 1.0)
        };
        if k < n_pos {
            labels[row] = Label::Positive;
        }
        for j in 0..d {
            let z: f64 = StandardNormal.sample(&mut rng);
            x[[row, j]] = center + std * z;
        }
    }
    LabeledDataset::new(cfg.to_string(), x, labels)
}
